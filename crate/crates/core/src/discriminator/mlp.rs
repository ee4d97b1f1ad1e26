//! One-hidden-layer network that reads the windowed matched-filter scores of
//! all qubits jointly and predicts every qubit's state.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::model_text::ModelDoc;
use crate::standardize::Standardizer;

pub const HIDDEN_UNITS: usize = 32;
pub const MIN_TRAINING_EXAMPLES: usize = 1000;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Fully connected `n_in -> n_hidden (ReLU) -> n_out (logistic)` network.
/// Matrices are row-major, one row per output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

struct Forward {
    pre: Vec<f64>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(n_in: usize, n_hidden: usize, n_out: usize, rng: &mut R) -> Mlp {
        let mut glorot = |fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect::<Vec<f64>>()
        };
        let w1 = glorot(n_in, n_hidden);
        let w2 = glorot(n_hidden, n_out);
        Mlp {
            n_in,
            n_hidden,
            n_out,
            w1,
            b1: vec![0.0; n_hidden],
            w2,
            b2: vec![0.0; n_out],
        }
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Parameters in the order `w1, b1, w2, b2`.
    pub fn params(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params());
        let (w1, rest) = p.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.b1.len());
        let (w2, b2) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2.copy_from_slice(b2);
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let pre: Vec<f64> = (0..self.n_hidden)
            .map(|h| {
                let row = &self.w1[h * self.n_in..(h + 1) * self.n_in];
                self.b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        let hidden: Vec<f64> = pre.iter().map(|&v| v.max(0.0)).collect();
        let logits = (0..self.n_out)
            .map(|o| {
                let row = &self.w2[o * self.n_hidden..(o + 1) * self.n_hidden];
                self.b2[o] + row.iter().zip(&hidden).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        Forward {
            pre,
            hidden,
            logits,
        }
    }

    /// `P(state = 1)` per output.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).logits.into_iter().map(sigmoid).collect()
    }

    /// Mean over the batch of the summed per-output binary cross-entropy.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                self.forward(x)
                    .logits
                    .iter()
                    .zip(y)
                    .map(|(&z, &t)| softplus(z) - t * z)
                    .sum::<f64>()
            })
            .sum();
        total / xs.len() as f64
    }

    /// Loss and its gradient (same layout as [`Mlp::params`]) on a batch.
    pub fn loss_and_gradient(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let n = xs.len() as f64;
        let mut gw1 = vec![0.0; self.w1.len()];
        let mut gb1 = vec![0.0; self.b1.len()];
        let mut gw2 = vec![0.0; self.w2.len()];
        let mut gb2 = vec![0.0; self.b2.len()];
        let mut loss = 0.0;
        let mut dhidden = vec![0.0; self.n_hidden];
        for (x, y) in xs.iter().zip(ys) {
            let f = self.forward(x);
            dhidden.fill(0.0);
            for o in 0..self.n_out {
                let z = f.logits[o];
                loss += softplus(z) - y[o] * z;
                let d = (sigmoid(z) - y[o]) / n;
                gb2[o] += d;
                let row = o * self.n_hidden;
                for h in 0..self.n_hidden {
                    gw2[row + h] += d * f.hidden[h];
                    dhidden[h] += d * self.w2[row + h];
                }
            }
            for h in 0..self.n_hidden {
                if f.pre[h] <= 0.0 {
                    continue;
                }
                let d = dhidden[h];
                gb1[h] += d;
                let row = h * self.n_in;
                for (g, v) in gw1[row..row + self.n_in].iter_mut().zip(x) {
                    *g += d * v;
                }
            }
        }
        (loss / n, [gw1, gb1, gw2, gb2].concat())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpHyperParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpHyperParams {
    fn default() -> Self {
        MlpHyperParams {
            learning_rate: 0.05,
            epochs: 20,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// Standardisation constants plus network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpDiscriminator {
    pub standardizer: Standardizer,
    pub network: Mlp,
}

impl MlpDiscriminator {
    pub fn predict_probabilities(&self, features: &[f64]) -> Vec<f64> {
        self.network.predict(&self.standardizer.apply(features))
    }

    pub fn classify(&self, features: &[f64]) -> BitString {
        let bits = self
            .predict_probabilities(features)
            .into_iter()
            .map(|p| u8::from(p > 0.5))
            .collect();
        BitString::from_bits(bits).expect("0/1 bits")
    }

    pub fn to_doc(&self, doc: &mut ModelDoc, prefix: &str) {
        let net = &self.network;
        doc.put_usize(&format!("{prefix}n_in"), net.n_in);
        doc.put_usize(&format!("{prefix}n_hidden"), net.n_hidden);
        doc.put_usize(&format!("{prefix}n_out"), net.n_out);
        doc.put_floats(&format!("{prefix}std.mean"), &self.standardizer.mean);
        doc.put_floats(&format!("{prefix}std.scale"), &self.standardizer.scale);
        doc.put_floats(&format!("{prefix}w1"), &net.w1);
        doc.put_floats(&format!("{prefix}b1"), &net.b1);
        doc.put_floats(&format!("{prefix}w2"), &net.w2);
        doc.put_floats(&format!("{prefix}b2"), &net.b2);
    }

    pub fn from_doc(doc: &ModelDoc, prefix: &str) -> Result<MlpDiscriminator> {
        let n_in = doc.get_usize(&format!("{prefix}n_in"))?;
        let n_hidden = doc.get_usize(&format!("{prefix}n_hidden"))?;
        let n_out = doc.get_usize(&format!("{prefix}n_out"))?;
        Ok(MlpDiscriminator {
            standardizer: Standardizer {
                mean: doc.get_floats(&format!("{prefix}std.mean"), n_in)?,
                scale: doc.get_floats(&format!("{prefix}std.scale"), n_in)?,
            },
            network: Mlp {
                n_in,
                n_hidden,
                n_out,
                w1: doc.get_floats(&format!("{prefix}w1"), n_in * n_hidden)?,
                b1: doc.get_floats(&format!("{prefix}b1"), n_hidden)?,
                w2: doc.get_floats(&format!("{prefix}w2"), n_hidden * n_out)?,
                b2: doc.get_floats(&format!("{prefix}b2"), n_out)?,
            },
        })
    }
}

/// Train the joint network by mini-batch SGD on standardised features.
///
/// Initial weights and the per-epoch batch order both come from a ChaCha8
/// stream seeded with `hp.seed`, so training is reproducible.
pub fn train_mlp(
    features: &[Vec<f64>],
    labels: &[BitString],
    hp: &MlpHyperParams,
) -> Result<MlpDiscriminator> {
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            found: labels.len(),
        });
    }
    if features.len() < MIN_TRAINING_EXAMPLES {
        return Err(Error::Validation(format!(
            "MLP training needs at least {MIN_TRAINING_EXAMPLES} examples, got {}",
            features.len()
        )));
    }
    if hp.batch_size == 0 || hp.learning_rate.is_nan() || hp.learning_rate <= 0.0 {
        return Err(Error::Validation(
            "batch_size and learning_rate must be positive".into(),
        ));
    }
    let n_in = features[0].len();
    let n_out = labels[0].len();
    if features.iter().any(|f| f.len() != n_in) || labels.iter().any(|l| l.len() != n_out) {
        return Err(Error::Validation("ragged MLP training data".into()));
    }

    let standardizer = Standardizer::fit(features);
    let xs: Vec<Vec<f64>> = features.iter().map(|f| standardizer.apply(f)).collect();
    let ys: Vec<Vec<f64>> = labels
        .iter()
        .map(|l| l.bits().iter().map(|&b| b as f64).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut net = Mlp::init(n_in, HIDDEN_UNITS, n_out, &mut rng);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut bx = Vec::with_capacity(hp.batch_size);
    let mut by = Vec::with_capacity(hp.batch_size);
    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(hp.batch_size) {
            bx.clear();
            by.clear();
            bx.extend(chunk.iter().map(|&i| xs[i].clone()));
            by.extend(chunk.iter().map(|&i| ys[i].clone()));
            let (loss, grad) = net.loss_and_gradient(&bx, &by);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            epoch_loss += loss * chunk.len() as f64;
            let mut p = net.params();
            for (v, g) in p.iter_mut().zip(&grad) {
                *v -= hp.learning_rate * g;
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch });
            }
            net.set_params(&p);
        }
        if !epoch_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
    }
    Ok(MlpDiscriminator {
        standardizer,
        network: net,
    })
}

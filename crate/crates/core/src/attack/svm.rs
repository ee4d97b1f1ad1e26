//! One-vs-rest linear SVM trained by Pegasos-style stochastic subgradient
//! descent.
//!
//! Each class `k` owns a weight row `w_k` and bias `b_k`. At step `t` (one
//! sample, shared by all classes) the weights follow
//! `w <- (1 - 1/t) w + [y (w.x + b) < 1] * y x / (lambda t)`, i.e. step size
//! `1 / (lambda t)` on the `lambda`-regularised hinge loss. The bias is not
//! regularised and moves by `[margin < 1] * y / t`; its step does not depend on
//! `lambda`, so scaling every feature by `c` and `lambda` by `1 / c^2` traces
//! exactly the same decision function.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::model_text::ModelDoc;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub n_classes: usize,
    pub n_features: usize,
    /// Row-major, `n_classes x n_features`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl LinearSvm {
    fn row(&self, k: usize) -> &[f64] {
        &self.weights[k * self.n_features..(k + 1) * self.n_features]
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|k| dot(self.row(k), x) + self.bias[k])
            .collect()
    }

    /// Class with the highest score; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let scores = self.scores(x);
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = k;
            }
        }
        Ok(best)
    }

    /// Fraction of examples whose predicted class equals the label.
    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
        if features.is_empty() {
            return Err(Error::Empty("accuracy examples"));
        }
        let mut correct = 0usize;
        for (x, &y) in features.iter().zip(labels) {
            correct += usize::from(self.predict(x)? == y);
        }
        Ok(correct as f64 / features.len() as f64)
    }

    /// `lambda/2 * sum_k |w_k|^2 + mean_i sum_k hinge`
    pub fn objective(&self, features: &[Vec<f64>], labels: &[usize]) -> f64 {
        let reg: f64 = 0.5 * self.lambda * self.weights.iter().map(|w| w * w).sum::<f64>();
        let hinge: f64 = features
            .iter()
            .zip(labels)
            .map(|(x, &y)| {
                self.scores(x)
                    .iter()
                    .enumerate()
                    .map(|(k, s)| {
                        let t = if k == y { 1.0 } else { -1.0 };
                        (1.0 - t * s).max(0.0)
                    })
                    .sum::<f64>()
            })
            .sum();
        reg + hinge / features.len().max(1) as f64
    }

    pub fn to_text(&self) -> String {
        let mut doc = ModelDoc::new("linear-svm", 1);
        doc.put_usize("n_classes", self.n_classes);
        doc.put_usize("n_features", self.n_features);
        doc.put_float("lambda", self.lambda);
        doc.put_usize("epochs", self.epochs);
        doc.put_u64("seed", self.seed);
        doc.put_floats("weights", &self.weights);
        doc.put_floats("bias", &self.bias);
        doc.render()
    }

    pub fn from_text(text: &str) -> Result<LinearSvm> {
        let doc = ModelDoc::parse(text, "linear-svm", 1)?;
        let n_classes = doc.get_usize("n_classes")?;
        let n_features = doc.get_usize("n_features")?;
        Ok(LinearSvm {
            n_classes,
            n_features,
            weights: doc.get_floats("weights", n_classes * n_features)?,
            bias: doc.get_floats("bias", n_classes)?,
            lambda: doc.get_float("lambda")?,
            epochs: doc.get_usize("epochs")?,
            seed: doc.get_u64("seed")?,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn train_svm(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<LinearSvm> {
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            found: labels.len(),
        });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Validation(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let n_features = features
        .first()
        .ok_or(Error::Empty("SVM training set"))?
        .len();
    if let Some(x) = features.iter().find(|x| x.len() != n_features) {
        return Err(Error::DimensionMismatch {
            expected: n_features,
            found: x.len(),
        });
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::Validation(format!(
            "label {y} out of range for {n_classes} classes"
        )));
    }
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(Error::SingleClass);
    }

    let mut svm = LinearSvm {
        n_classes,
        n_features,
        weights: vec![0.0; n_classes * n_features],
        bias: vec![0.0; n_classes],
        lambda,
        epochs,
        seed,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..features.len()).collect();
    let mut t = 0u64;
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let x = &features[i];
            let eta = 1.0 / (lambda * t as f64);
            let shrink = 1.0 - 1.0 / t as f64;
            for k in 0..n_classes {
                let y = if labels[i] == k { 1.0 } else { -1.0 };
                let row = &mut svm.weights[k * n_features..(k + 1) * n_features];
                let margin = y * (dot(row, x) + svm.bias[k]);
                row.iter_mut().for_each(|w| *w *= shrink);
                if margin < 1.0 {
                    for (w, v) in row.iter_mut().zip(x) {
                        *w += eta * y * v;
                    }
                    svm.bias[k] += y / t as f64;
                }
            }
        }
        if !svm.objective(features, labels).is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
    }
    Ok(svm)
}

/// Class index of a victim bit-string (lowest qubit most significant).
pub fn class_of(victim: &BitString) -> usize {
    victim.index()
}

/// Victim bit-string predicted for one feature vector.
pub fn predict_victim(svm: &LinearSvm, features: &[f64], n_victims: usize) -> Result<BitString> {
    Ok(BitString::from_index(svm.predict(features)?, n_victims))
}

pub fn classification_accuracy(
    svm: &LinearSvm,
    features: &[Vec<f64>],
    labels: &[usize],
) -> Result<f64> {
    svm.accuracy(features, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn separable_one_dimensional() {
        let xs: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![if i < 20 { -1.0 } else { 1.0 }])
            .collect();
        let ys: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let svm = train_svm(&xs, &ys, 2, 0.01, 20, 1).unwrap();
        assert_eq!(svm.accuracy(&xs, &ys).unwrap(), 1.0);
    }

    #[test]
    fn deterministic_and_serialisable() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<Vec<f64>> = (0..300)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let ys: Vec<usize> = xs
            .iter()
            .map(|x| usize::from(x[0] > 0.5) + usize::from(x[1] > 0.5))
            .collect();
        let a = train_svm(&xs, &ys, 3, 0.01, 5, 8).unwrap();
        let b = train_svm(&xs, &ys, 3, 0.01, 5, 8).unwrap();
        assert_eq!(a, b);
        let back = LinearSvm::from_text(&a.to_text()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn errors() {
        let xs = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train_svm(&xs, &[1, 1], 2, 0.1, 1, 0),
            Err(Error::SingleClass)
        ));
        assert!(train_svm(&xs, &[0, 1], 2, 0.0, 1, 0).is_err());
        assert!(train_svm(&xs, &[0, 2], 2, 0.1, 1, 0).is_err());
        let svm = train_svm(&xs, &[0, 1], 2, 0.1, 1, 0).unwrap();
        assert!(matches!(
            svm.predict(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = vec![vec![f64::INFINITY], vec![1.0]];
        assert!(matches!(
            train_svm(&bad, &[0, 1], 2, 0.1, 1, 0),
            Err(Error::NonFiniteLoss { epoch: 0 })
        ));
    }

    #[test]
    fn ties_go_to_lowest_class() {
        let svm = LinearSvm {
            n_classes: 3,
            n_features: 1,
            weights: vec![0.0; 3],
            bias: vec![0.0, 1.0, 1.0],
            lambda: 1.0,
            epochs: 0,
            seed: 0,
        };
        assert_eq!(svm.predict(&[3.0]).unwrap(), 1);
        assert_eq!(predict_victim(&svm, &[3.0], 2).unwrap().to_string(), "01");
    }
}

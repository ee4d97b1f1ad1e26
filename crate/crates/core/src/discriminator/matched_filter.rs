use num_complex::Complex64;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::model_text::ModelDoc;
use crate::sim::ShotRecord;

/// Class-conditional mean traces, one pair per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub n_samples: usize,
    /// `mean0[q]` is the mean trace of qubit `q` over shots prepared in 0.
    pub mean0: Vec<Vec<Complex64>>,
    pub mean1: Vec<Vec<Complex64>>,
}

/// Streaming accumulator for [`Template`]s, so training sets never have to be
/// held in memory at once.
#[derive(Debug, Clone)]
pub struct TemplateAccumulator {
    n_samples: usize,
    sums: [Vec<Vec<Complex64>>; 2],
    counts: [Vec<usize>; 2],
}

impl TemplateAccumulator {
    pub fn new(n_qubits: usize, n_samples: usize) -> Self {
        let zeros = || vec![vec![Complex64::new(0.0, 0.0); n_samples]; n_qubits];
        TemplateAccumulator {
            n_samples,
            sums: [zeros(), zeros()],
            counts: [vec![0; n_qubits], vec![0; n_qubits]],
        }
    }

    pub fn add(&mut self, shot: &ShotRecord) -> Result<()> {
        let nq = self.counts[0].len();
        if shot.n_qubits() != nq || shot.n_samples != self.n_samples {
            return Err(Error::DimensionMismatch {
                expected: nq * self.n_samples,
                found: shot.n_qubits() * shot.n_samples,
            });
        }
        for q in 0..nq {
            let b = shot.preparation.get(q) as usize;
            self.counts[b][q] += 1;
            for (s, z) in self.sums[b][q].iter_mut().zip(shot.channel(q)) {
                *s += z;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<Template> {
        let [sum0, sum1] = self.sums;
        let means = |sums: Vec<Vec<Complex64>>, counts: &[usize], bit: u8| {
            sums.into_iter()
                .zip(counts)
                .enumerate()
                .map(|(q, (s, &c))| {
                    if c == 0 {
                        return Err(Error::ClassMissing { qubit: q, bit });
                    }
                    Ok(s.into_iter().map(|v| v / c as f64).collect())
                })
                .collect::<Result<Vec<_>>>()
        };
        Ok(Template {
            n_samples: self.n_samples,
            mean0: means(sum0, &self.counts[0], 0)?,
            mean1: means(sum1, &self.counts[1], 1)?,
        })
    }
}

/// Mean trace per qubit and prepared bit. Every shot counts, including shots
/// with mid-readout transitions.
pub fn fit_templates<'a, I>(training: I) -> Result<Template>
where
    I: IntoIterator<Item = &'a ShotRecord>,
{
    let mut it = training.into_iter().peekable();
    let first = it.peek().ok_or(Error::Empty("training set"))?;
    let mut acc = TemplateAccumulator::new(first.n_qubits(), first.n_samples);
    for shot in it {
        acc.add(shot)?;
    }
    acc.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitFilter {
    /// `conj(mu1 - mu0)`
    pub weights: Vec<Complex64>,
    /// `(mu0 + mu1) / 2`
    pub midpoint: Vec<Complex64>,
    pub threshold: f64,
}

impl QubitFilter {
    /// `Re sum_{n in window} w[n] (z[n] - m[n])`
    pub fn window_score(&self, trace: &[Complex64], start: usize, end: usize) -> f64 {
        trace[start..end]
            .iter()
            .zip(&self.weights[start..end])
            .zip(&self.midpoint[start..end])
            .map(|((z, w), m)| {
                let d = z - m;
                w.re * d.re - w.im * d.im
            })
            .sum()
    }

    pub fn score(&self, trace: &[Complex64]) -> f64 {
        self.window_score(trace, 0, trace.len())
    }
}

/// Per-qubit linear discriminator built from class-mean templates.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedFilter {
    pub n_samples: usize,
    pub qubits: Vec<QubitFilter>,
}

impl MatchedFilter {
    /// Weights and midpoints from the templates, thresholds at zero.
    pub fn from_templates(templates: &Template) -> Result<MatchedFilter> {
        let qubits = templates
            .mean0
            .iter()
            .zip(&templates.mean1)
            .enumerate()
            .map(|(q, (m0, m1))| {
                let weights: Vec<Complex64> =
                    m0.iter().zip(m1).map(|(a, b)| (b - a).conj()).collect();
                if weights.iter().all(|w| w.norm_sqr() == 0.0) {
                    return Err(Error::DegenerateTemplate { qubit: q });
                }
                Ok(QubitFilter {
                    weights,
                    midpoint: m0.iter().zip(m1).map(|(a, b)| (a + b) / 2.0).collect(),
                    threshold: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MatchedFilter {
            n_samples: templates.n_samples,
            qubits,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Full-window score of every qubit.
    pub fn scores(&self, shot: &ShotRecord) -> Vec<f64> {
        self.qubits
            .iter()
            .enumerate()
            .map(|(q, f)| f.score(shot.channel(q)))
            .collect()
    }

    pub fn classify(&self, shot: &ShotRecord) -> BitString {
        let bits = self
            .scores(shot)
            .into_iter()
            .zip(&self.qubits)
            .map(|(s, f)| u8::from(s > f.threshold))
            .collect();
        BitString::from_bits(bits).expect("0/1 bits")
    }

    /// Refit every threshold from labelled training scores
    /// (`scores[i][q]`, `labels[i]`).
    pub fn fit_thresholds(&mut self, scores: &[Vec<f64>], labels: &[BitString]) -> Result<()> {
        for (q, filter) in self.qubits.iter_mut().enumerate() {
            let mut pairs: Vec<(f64, u8)> = scores
                .iter()
                .zip(labels)
                .map(|(s, l)| (s[q], l.get(q)))
                .collect();
            filter.threshold = threshold_sweep(&mut pairs)?.0;
        }
        Ok(())
    }

    /// Early-half, late-half and full-window scores for every qubit.
    pub fn extract_features(&self, shot: &ShotRecord) -> FeatureVector {
        let half = self.n_samples / 2;
        let mut out = Vec::with_capacity(3 * self.qubits.len());
        for (q, f) in self.qubits.iter().enumerate() {
            let trace = shot.channel(q);
            let early = f.window_score(trace, 0, half);
            let late = f.window_score(trace, half, self.n_samples);
            out.extend([early + late, early, late]);
        }
        FeatureVector(out)
    }

    pub fn to_doc(&self, doc: &mut ModelDoc, prefix: &str) {
        doc.put_usize(&format!("{prefix}n_qubits"), self.qubits.len());
        doc.put_usize(&format!("{prefix}n_samples"), self.n_samples);
        for (q, f) in self.qubits.iter().enumerate() {
            doc.put_float(&format!("{prefix}q{q}.threshold"), f.threshold);
            doc.put_floats(&format!("{prefix}q{q}.weights"), &flatten(&f.weights));
            doc.put_floats(&format!("{prefix}q{q}.midpoint"), &flatten(&f.midpoint));
        }
    }

    pub fn from_doc(doc: &ModelDoc, prefix: &str) -> Result<MatchedFilter> {
        let nq = doc.get_usize(&format!("{prefix}n_qubits"))?;
        let ns = doc.get_usize(&format!("{prefix}n_samples"))?;
        let qubits = (0..nq)
            .map(|q| {
                Ok(QubitFilter {
                    threshold: doc.get_float(&format!("{prefix}q{q}.threshold"))?,
                    weights: unflatten(&doc.get_floats(&format!("{prefix}q{q}.weights"), 2 * ns)?),
                    midpoint: unflatten(
                        &doc.get_floats(&format!("{prefix}q{q}.midpoint"), 2 * ns)?,
                    ),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MatchedFilter {
            n_samples: ns,
            qubits,
        })
    }

    pub fn to_text(&self) -> String {
        let mut doc = ModelDoc::new("matched-filter", 1);
        self.to_doc(&mut doc, "");
        doc.render()
    }

    pub fn from_text(text: &str) -> Result<MatchedFilter> {
        MatchedFilter::from_doc(&ModelDoc::parse(text, "matched-filter", 1)?, "")
    }
}

fn flatten(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn unflatten(v: &[f64]) -> Vec<Complex64> {
    v.chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect()
}

/// Build a matched filter and fit its thresholds on `training`.
pub fn fit_matched_filter<'a, I>(templates: &Template, training: I) -> Result<MatchedFilter>
where
    I: IntoIterator<Item = &'a ShotRecord>,
{
    let mut mf = MatchedFilter::from_templates(templates)?;
    let (scores, labels): (Vec<_>, Vec<_>) = training
        .into_iter()
        .map(|s| (mf.scores(s), s.preparation.clone()))
        .unzip();
    if scores.is_empty() {
        return Err(Error::Empty("training set"));
    }
    mf.fit_thresholds(&scores, &labels)?;
    Ok(mf)
}

/// Threshold `b` maximising the accuracy of `score > b` on labelled scores.
///
/// Candidates are the midpoints between consecutive distinct sorted scores,
/// plus one point below the minimum and the maximum itself. Ties go to the
/// lowest candidate. Returns `(b, training accuracy)`.
pub fn threshold_sweep(pairs: &mut [(f64, u8)]) -> Result<(f64, f64)> {
    if pairs.is_empty() {
        return Err(Error::Empty("threshold training scores"));
    }
    if pairs.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::Validation("non-finite discriminator score".into()));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let ones = pairs.iter().filter(|p| p.1 == 1).count();

    // Everything above the threshold reads 1.
    let mut correct = ones;
    let lowest = pairs[0].0;
    let mut best = (lowest - 1.0 - lowest.abs(), correct);
    let mut i = 0;
    while i < n {
        let s = pairs[i].0;
        while i < n && pairs[i].0 == s {
            if pairs[i].1 == 1 {
                correct -= 1;
            } else {
                correct += 1;
            }
            i += 1;
        }
        let b = if i < n { 0.5 * (s + pairs[i].0) } else { s };
        if correct > best.1 {
            best = (b, correct);
        }
    }
    Ok((best.0, best.1 as f64 / n as f64))
}

/// Windowed matched-filter scores: `[full, early, late]` per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

pub fn extract_features(shot: &ShotRecord, mf: &MatchedFilter) -> FeatureVector {
    mf.extract_features(shot)
}

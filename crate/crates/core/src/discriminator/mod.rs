//! Readout state discrimination.
//!
//! Two discriminators are provided: a per-qubit [`MatchedFilter`], and a
//! [`JointDiscriminator`] that feeds full/early/late matched-filter scores of
//! every qubit into a small network ([`MlpDiscriminator`]). Splitting the
//! window in two exposes mid-readout transitions, and seeing all qubits at
//! once lets the network undo crosstalk.

mod matched_filter;
mod mlp;

use std::collections::BTreeMap;

pub use matched_filter::{
    extract_features, fit_matched_filter, fit_templates, threshold_sweep, FeatureVector,
    MatchedFilter, QubitFilter, Template, TemplateAccumulator,
};
pub use mlp::{
    train_mlp, Mlp, MlpDiscriminator, MlpHyperParams, HIDDEN_UNITS, MIN_TRAINING_EXAMPLES,
};

use crate::bits::{BitString, Outcome};
use crate::error::{Error, Result};
use crate::model_text::ModelDoc;
use crate::sim::ShotRecord;

/// Matched-filter feature extractor followed by the joint network.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDiscriminator {
    pub filter: MatchedFilter,
    pub mlp: MlpDiscriminator,
}

impl JointDiscriminator {
    pub fn classify(&self, shot: &ShotRecord) -> BitString {
        self.mlp.classify(&self.filter.extract_features(shot).0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Discriminator {
    MatchedFilter(MatchedFilter),
    Joint(JointDiscriminator),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscriminatorKind {
    MatchedFilter,
    Mlp,
}

impl std::str::FromStr for DiscriminatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mf" => Ok(DiscriminatorKind::MatchedFilter),
            "mlp" => Ok(DiscriminatorKind::Mlp),
            other => Err(Error::Validation(format!(
                "unknown discriminator {other:?} (expected mf or mlp)"
            ))),
        }
    }
}

impl Discriminator {
    pub fn kind(&self) -> DiscriminatorKind {
        match self {
            Discriminator::MatchedFilter(_) => DiscriminatorKind::MatchedFilter,
            Discriminator::Joint(_) => DiscriminatorKind::Mlp,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Discriminator::MatchedFilter(mf) => mf.n_qubits(),
            Discriminator::Joint(j) => j.filter.n_qubits(),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Discriminator::MatchedFilter(mf) => mf.to_text(),
            Discriminator::Joint(j) => {
                let mut doc = ModelDoc::new("joint-mlp", 1);
                j.filter.to_doc(&mut doc, "filter.");
                j.mlp.to_doc(&mut doc, "mlp.");
                doc.render()
            }
        }
    }

    pub fn from_text(text: &str) -> Result<Discriminator> {
        if text.starts_with("xtalk-model matched-filter") {
            return MatchedFilter::from_text(text).map(Discriminator::MatchedFilter);
        }
        let doc = ModelDoc::parse(text, "joint-mlp", 1)?;
        Ok(Discriminator::Joint(JointDiscriminator {
            filter: MatchedFilter::from_doc(&doc, "filter.")?,
            mlp: MlpDiscriminator::from_doc(&doc, "mlp.")?,
        }))
    }
}

/// Measured bit-string of one shot.
pub fn discriminate(shot: &ShotRecord, discriminator: &Discriminator) -> BitString {
    match discriminator {
        Discriminator::MatchedFilter(mf) => mf.classify(shot),
        Discriminator::Joint(j) => j.classify(shot),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub shots: usize,
    pub per_qubit: Vec<f64>,
    pub mean_per_qubit: f64,
    pub all_correct: f64,
    /// `(prepared, measured) -> count`
    pub confusion: BTreeMap<(BitString, BitString), usize>,
}

impl AccuracyReport {
    pub fn from_outcomes<'a, I>(outcomes: I) -> Result<AccuracyReport>
    where
        I: IntoIterator<Item = &'a Outcome>,
    {
        let mut confusion = BTreeMap::new();
        let mut per_qubit: Vec<usize> = Vec::new();
        let mut all = 0usize;
        let mut shots = 0usize;
        for o in outcomes {
            if per_qubit.is_empty() {
                per_qubit = vec![0; o.prep.len()];
            }
            if o.prep.len() != per_qubit.len() || o.measured.len() != per_qubit.len() {
                return Err(Error::DimensionMismatch {
                    expected: per_qubit.len(),
                    found: o.measured.len(),
                });
            }
            shots += 1;
            for (q, c) in per_qubit.iter_mut().enumerate() {
                *c += usize::from(o.prep.get(q) == o.measured.get(q));
            }
            all += usize::from(o.prep == o.measured);
            *confusion
                .entry((o.prep.clone(), o.measured.clone()))
                .or_insert(0) += 1;
        }
        if shots == 0 {
            return Err(Error::Empty("accuracy dataset"));
        }
        let per_qubit: Vec<f64> = per_qubit
            .into_iter()
            .map(|c| c as f64 / shots as f64)
            .collect();
        Ok(AccuracyReport {
            shots,
            mean_per_qubit: per_qubit.iter().sum::<f64>() / per_qubit.len() as f64,
            per_qubit,
            all_correct: all as f64 / shots as f64,
            confusion,
        })
    }
}

/// Discriminate every shot and count against the prepared labels.
pub fn evaluate_accuracy(
    dataset: &[ShotRecord],
    discriminator: &Discriminator,
) -> Result<AccuracyReport> {
    let outcomes: Vec<Outcome> = dataset
        .iter()
        .map(|s| Outcome {
            prep: s.preparation.clone(),
            measured: discriminate(s, discriminator),
        })
        .collect();
    AccuracyReport::from_outcomes(&outcomes)
}

/// Fit templates and thresholds, then optionally the joint network, on one
/// training set.
pub fn train_discriminator(
    training: &[ShotRecord],
    kind: DiscriminatorKind,
    hp: &MlpHyperParams,
) -> Result<Discriminator> {
    let templates = fit_templates(training)?;
    let mf = fit_matched_filter(&templates, training)?;
    match kind {
        DiscriminatorKind::MatchedFilter => Ok(Discriminator::MatchedFilter(mf)),
        DiscriminatorKind::Mlp => {
            let (features, labels): (Vec<_>, Vec<_>) = training
                .iter()
                .map(|s| (mf.extract_features(s).0, s.preparation.clone()))
                .unzip();
            let mlp = train_mlp(&features, &labels, hp)?;
            Ok(Discriminator::Joint(JointDiscriminator { filter: mf, mlp }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(p: &str, m: &str) -> Outcome {
        Outcome {
            prep: p.parse().unwrap(),
            measured: m.parse().unwrap(),
        }
    }

    #[test]
    fn hand_tally() {
        // q0 right 3/4, q1 right 2/4, both right 2/4
        let data = [
            outcome("00", "00"),
            outcome("01", "00"),
            outcome("10", "10"),
            outcome("11", "00"),
        ];
        let r = AccuracyReport::from_outcomes(&data).unwrap();
        assert_eq!(r.per_qubit, [0.75, 0.5]);
        assert_eq!(r.mean_per_qubit, 0.625);
        assert_eq!(r.all_correct, 0.5);
        assert_eq!(
            r.confusion[&("11".parse().unwrap(), "00".parse().unwrap())],
            1
        );
        assert_eq!(r.confusion.values().sum::<usize>(), 4);
    }

    #[test]
    fn perfect_and_constant() {
        let all: Vec<Outcome> = BitString::all(3)
            .map(|b| Outcome {
                prep: b.clone(),
                measured: b,
            })
            .collect();
        let r = AccuracyReport::from_outcomes(&all).unwrap();
        assert_eq!((r.mean_per_qubit, r.all_correct), (1.0, 1.0));
        let zeros: Vec<Outcome> = BitString::all(3)
            .map(|b| Outcome {
                prep: b,
                measured: BitString::zeros(3),
            })
            .collect();
        let r = AccuracyReport::from_outcomes(&zeros).unwrap();
        assert_eq!(r.per_qubit, [0.5, 0.5, 0.5]);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(
            AccuracyReport::from_outcomes(&[]),
            Err(Error::Empty(_))
        ));
    }
}

//! Seeded end-to-end runs: simulate shots, fit a discriminator on the
//! training slice, and discriminate the evaluation slice into outcomes.
//!
//! Shots are produced on demand through a [`ShotSource`] and reduced to scores
//! or outcomes as soon as they exist, so a run never holds the traces of more
//! than one shot per worker. The training slice is visited twice (templates,
//! then scores); a deterministic source makes the two visits identical.

use std::ops::Range;

use rayon::prelude::*;

use crate::attack::{run_attack, AttackConfiguration, AttackParams, AttackResult};
use crate::bits::{BitString, Outcome};
use crate::device::DeviceModel;
use crate::discriminator::{
    discriminate, train_mlp, Discriminator, DiscriminatorKind, JointDiscriminator, MatchedFilter,
    MlpHyperParams, TemplateAccumulator,
};
use crate::error::{Error, Result};
use crate::sim::{mix64, simulate_shot, ShotRecord, ShotRng};

/// Anything that can produce shot `range` of a preparation's batch.
pub trait ShotSource: Sync {
    fn n_qubits(&self) -> usize;
    fn n_samples(&self) -> usize;

    /// Visit the shots in index order.
    fn for_each_shot(
        &self,
        prep: &BitString,
        range: Range<u64>,
        f: &mut dyn FnMut(&ShotRecord) -> Result<()>,
    ) -> Result<()>;

    /// Map every shot through `f`, results in index order. `f` may run on
    /// several workers at once.
    fn map_shots<T, F>(&self, prep: &BitString, range: Range<u64>, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&ShotRecord) -> T + Sync;
}

/// Seed of the batch for one preparation under a global seed.
pub fn prep_seed(seed: u64, prep: &BitString) -> u64 {
    mix64(mix64(seed) ^ prep.index() as u64)
}

/// Shots simulated on the fly from a device model.
#[derive(Debug, Clone)]
pub struct SimulatedSource {
    pub device: DeviceModel,
    pub seed: u64,
}

impl ShotSource for SimulatedSource {
    fn n_qubits(&self) -> usize {
        self.device.n_qubits()
    }

    fn n_samples(&self) -> usize {
        self.device.n_samples
    }

    fn for_each_shot(
        &self,
        prep: &BitString,
        range: Range<u64>,
        f: &mut dyn FnMut(&ShotRecord) -> Result<()>,
    ) -> Result<()> {
        let seed = prep_seed(self.seed, prep);
        let n_res = self.device.resonators.len();
        for k in range {
            let shot = simulate_shot(&self.device, prep, &mut ShotRng::new(seed, k, n_res), k)?;
            f(&shot)?;
        }
        Ok(())
    }

    fn map_shots<T, F>(&self, prep: &BitString, range: Range<u64>, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&ShotRecord) -> T + Sync,
    {
        let seed = prep_seed(self.seed, prep);
        let n_res = self.device.resonators.len();
        range
            .into_par_iter()
            .map(|k| {
                simulate_shot(&self.device, prep, &mut ShotRng::new(seed, k, n_res), k)
                    .map(|s| f(&s))
            })
            .collect()
    }
}

/// Shots held in memory, one batch per preparation, addressed by position.
#[derive(Debug, Clone, Default)]
pub struct InMemorySource {
    pub n_qubits: usize,
    pub n_samples: usize,
    pub batches: std::collections::BTreeMap<BitString, Vec<ShotRecord>>,
}

impl InMemorySource {
    fn slice(&self, prep: &BitString, range: Range<u64>) -> Result<&[ShotRecord]> {
        let batch = self
            .batches
            .get(prep)
            .ok_or_else(|| Error::Validation(format!("no shots for preparation {prep}")))?;
        let (start, end) = (range.start as usize, range.end as usize);
        if end > batch.len() {
            return Err(Error::InsufficientShots {
                victim: prep.to_string(),
                have: batch.len(),
                need: end,
            });
        }
        Ok(&batch[start..end])
    }
}

impl ShotSource for InMemorySource {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn n_samples(&self) -> usize {
        self.n_samples
    }

    fn for_each_shot(
        &self,
        prep: &BitString,
        range: Range<u64>,
        f: &mut dyn FnMut(&ShotRecord) -> Result<()>,
    ) -> Result<()> {
        self.slice(prep, range)?.iter().try_for_each(f)
    }

    fn map_shots<T, F>(&self, prep: &BitString, range: Range<u64>, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&ShotRecord) -> T + Sync,
    {
        Ok(self.slice(prep, range)?.par_iter().map(&f).collect())
    }
}

/// Fit a discriminator on shots `train` of every preparation.
pub fn fit_discriminator<S: ShotSource>(
    source: &S,
    preps: &[BitString],
    train: Range<u64>,
    kind: DiscriminatorKind,
    hp: &MlpHyperParams,
) -> Result<Discriminator> {
    if train.is_empty() || preps.is_empty() {
        return Err(Error::Empty("training shots"));
    }
    let mut acc = TemplateAccumulator::new(source.n_qubits(), source.n_samples());
    for prep in preps {
        source.for_each_shot(prep, train.clone(), &mut |s| acc.add(s))?;
    }
    let mut mf = MatchedFilter::from_templates(&acc.finish()?)?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for prep in preps {
        let f = source.map_shots(prep, train.clone(), |s| mf.extract_features(s).0)?;
        labels.extend(std::iter::repeat_n(prep.clone(), f.len()));
        features.extend(f);
    }
    // Full-window score is the first of each qubit's three features.
    let scores: Vec<Vec<f64>> = features
        .iter()
        .map(|f| f.chunks_exact(3).map(|c| c[0]).collect())
        .collect();
    mf.fit_thresholds(&scores, &labels)?;
    match kind {
        DiscriminatorKind::MatchedFilter => Ok(Discriminator::MatchedFilter(mf)),
        DiscriminatorKind::Mlp => {
            let mlp = train_mlp(&features, &labels, hp)?;
            Ok(Discriminator::Joint(JointDiscriminator { filter: mf, mlp }))
        }
    }
}

/// Discriminate shots `range` of every preparation, in preparation then shot
/// order.
pub fn discriminate_shots<S: ShotSource>(
    source: &S,
    preps: &[BitString],
    range: Range<u64>,
    discriminator: &Discriminator,
) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    for prep in preps {
        out.extend(source.map_shots(prep, range.clone(), |s| Outcome {
            prep: s.preparation.clone(),
            measured: discriminate(s, discriminator),
        })?);
    }
    Ok(out)
}

/// Number of training shots out of `shots` for a train fraction. Both slices
/// must be non-empty.
pub fn train_count(shots: usize, train_fraction: f64) -> Result<u64> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "train fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let n = (shots as f64 * train_fraction).round() as u64;
    if n == 0 || n >= shots as u64 {
        return Err(Error::Validation(format!(
            "train fraction {train_fraction} of {shots} shots leaves an empty train or eval set"
        )));
    }
    Ok(n)
}

/// Settings of one simulated readout run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutRun {
    pub shots_per_prep: usize,
    pub train_fraction: f64,
    pub discriminator: DiscriminatorKind,
    pub mlp: MlpHyperParams,
    pub seed: u64,
}

impl Default for ReadoutRun {
    fn default() -> Self {
        ReadoutRun {
            shots_per_prep: 2000,
            train_fraction: 0.3,
            discriminator: DiscriminatorKind::MatchedFilter,
            mlp: MlpHyperParams::default(),
            seed: 0,
        }
    }
}

/// Result of [`simulate_and_discriminate`].
#[derive(Debug, Clone)]
pub struct ReadoutData {
    pub discriminator: Discriminator,
    /// Evaluation-slice outcomes of every basis state.
    pub outcomes: Vec<Outcome>,
}

/// Simulate every basis state, fit on the training slice and discriminate the
/// evaluation slice.
pub fn simulate_and_discriminate(device: &DeviceModel, run: &ReadoutRun) -> Result<ReadoutData> {
    let preps: Vec<BitString> = BitString::all(device.n_qubits()).collect();
    let source = SimulatedSource {
        device: device.clone(),
        seed: run.seed,
    };
    let n_train = train_count(run.shots_per_prep, run.train_fraction)?;
    let discriminator =
        fit_discriminator(&source, &preps, 0..n_train, run.discriminator, &run.mlp)?;
    let outcomes = discriminate_shots(
        &source,
        &preps,
        n_train..run.shots_per_prep as u64,
        &discriminator,
    )?;
    Ok(ReadoutData {
        discriminator,
        outcomes,
    })
}

/// Run the attack for each configuration on one set of outcomes.
pub fn attack_sweep(
    outcomes: &[Outcome],
    configs: &[AttackConfiguration],
    params: &AttackParams,
) -> Result<Vec<AttackResult>> {
    configs
        .iter()
        .map(|c| run_attack(outcomes, c, params))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulated_source_matches_batch() {
        let device = crate::default_device();
        let source = SimulatedSource {
            device: device.clone(),
            seed: 9,
        };
        let prep: BitString = "01101".parse().unwrap();
        let batch = crate::sim::simulate_range(&device, &prep, 3..40, prep_seed(9, &prep)).unwrap();
        let mapped = source.map_shots(&prep, 3..40, |s| s.clone()).unwrap();
        let mut visited = Vec::new();
        source
            .for_each_shot(&prep, 3..40, &mut |s| {
                visited.push(s.clone());
                Ok(())
            })
            .unwrap();
        assert_eq!(batch, mapped);
        assert_eq!(batch, visited);
    }

    #[test]
    fn train_count_validates() {
        assert_eq!(train_count(1000, 0.3).unwrap(), 300);
        assert!(train_count(1000, 1.0).is_err());
        assert!(train_count(1, 0.3).is_err());
    }
}

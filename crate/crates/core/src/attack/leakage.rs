use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attack::pflip::attacker_idle;
use crate::attack::AttackConfiguration;
use crate::bits::{BitString, Outcome};
use crate::error::{Error, Result};
use crate::sim::shot_seed;

/// One window of `W` shots that share a victim preparation.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageFeatures {
    /// Empirical flip frequency of each attacker qubit.
    pub features: Vec<f64>,
    /// Flip count behind each frequency.
    pub flips: Vec<u64>,
    /// Victim bit-string in victim order; the class label.
    pub victim: BitString,
}

impl LeakageFeatures {
    pub fn label(&self) -> usize {
        self.victim.index()
    }
}

/// Flip frequencies of the attacker qubits over one window. Every outcome
/// must have the attacker idle.
pub fn window_features<'a, I>(
    window: I,
    config: &AttackConfiguration,
    victim: BitString,
) -> LeakageFeatures
where
    I: IntoIterator<Item = &'a Outcome>,
{
    let mut flips = vec![0u64; config.attackers.len()];
    let mut n = 0u64;
    for o in window {
        n += 1;
        for (f, &a) in flips.iter_mut().zip(&config.attackers) {
            *f += u64::from(o.measured.get(a));
        }
    }
    LeakageFeatures {
        features: flips.iter().map(|&f| f as f64 / n.max(1) as f64).collect(),
        flips,
        victim,
    }
}

/// Idle-attacker shots grouped by victim bit-string, input order preserved.
pub fn group_by_victim<'a, I>(
    outcomes: I,
    config: &AttackConfiguration,
) -> BTreeMap<BitString, Vec<&'a Outcome>>
where
    I: IntoIterator<Item = &'a Outcome>,
{
    let mut groups: BTreeMap<BitString, Vec<&Outcome>> = BTreeMap::new();
    for o in outcomes {
        if attacker_idle(o, config) {
            groups
                .entry(o.prep.select(&config.victims))
                .or_default()
                .push(o);
        }
    }
    groups
}

/// Split each victim bit-string's shots into `floor(count / W)` disjoint
/// windows after a seeded shuffle, and emit one feature vector per window.
///
/// The shuffle for victim `V` is seeded from `(seed, V)` alone, so the windows
/// of one bit-string do not depend on which others are present. Output is
/// ordered by victim bit-string, then window.
pub fn build_leakage_features<'a, I>(
    outcomes: I,
    config: &AttackConfiguration,
    window: usize,
    seed: u64,
) -> Result<Vec<LeakageFeatures>>
where
    I: IntoIterator<Item = &'a Outcome>,
{
    if window == 0 {
        return Err(Error::Validation("window size must be at least 1".into()));
    }
    let groups = group_by_victim(outcomes, config);
    if groups.is_empty() {
        return Err(Error::NoQualifyingShots);
    }
    let mut out = Vec::new();
    for (victim, mut shots) in groups {
        if shots.len() < window {
            return Err(Error::InsufficientShots {
                victim: victim.to_string(),
                have: shots.len(),
                need: window,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(shot_seed(seed, victim.index() as u64));
        shots.shuffle(&mut rng);
        for chunk in shots.chunks_exact(window) {
            out.push(window_features(
                chunk.iter().copied(),
                config,
                victim.clone(),
            ));
        }
    }
    Ok(out)
}

//! Countermeasures against the readout side channel, and their evaluation.
//!
//! Scrambling and mapping randomization are scored with the same windowed
//! attack: every window of `W` shots for a victim bit-string is one execution,
//! run with its own pad or placement. The attack side only ever receives
//! logical outcomes and the true victim label; pads and placements stay
//! inside the [`Execution`] plan.

mod mapping;
mod pad;
mod sandbox;

use std::io::Write;
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use mapping::{
    check_bijection, cyclic_ensemble, place, randomize_mapping, MappingEnsemble, MappingGroup,
};
pub use pad::{
    apply_pad, histogram, scramble_histogram, support_size, total_variation, unscramble, OneTimePad,
};
pub use sandbox::{
    sandbox_allocate, AllocationPolicy, AllocationReport, FeedlineGrouping, UserAllocation,
};

use crate::attack::{
    fit_and_score, split_windows, window_features, AttackConfiguration, AttackParams,
    LeakageFeatures,
};
use crate::bits::{BitString, Outcome};
use crate::discriminator::{discriminate, Discriminator};
use crate::error::{Error, Result};
use crate::experiment::ShotSource;
use crate::sim::shot_seed;

/// Shot source plus discriminator: physical preparation in, measured
/// bit-strings out.
pub struct Readout<'a, S: ShotSource> {
    pub source: &'a S,
    pub discriminator: &'a Discriminator,
}

impl<S: ShotSource> Readout<'_, S> {
    pub fn measure(&self, physical: &BitString, shots: Range<u64>) -> Result<Vec<BitString>> {
        self.source
            .map_shots(physical, shots, |s| discriminate(s, self.discriminator))
    }
}

/// How one window is run: the physical preparation, where each logical qubit
/// sits (`positions[q]`), and which shots of that preparation to use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub physical: BitString,
    pub positions: Vec<usize>,
    pub shots: Range<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefenseParams {
    pub attack: AttackParams,
    /// Windows generated per victim bit-string.
    pub windows_per_victim: usize,
}

impl Default for DefenseParams {
    fn default() -> Self {
        DefenseParams {
            attack: AttackParams::default(),
            windows_per_victim: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedAttack {
    pub train_accuracy: f64,
    pub eval_accuracy: f64,
    pub chance: f64,
    pub windows: Vec<LeakageFeatures>,
}

/// Logical preparation with the attackers idle and the victims set to `v`.
pub fn victim_preparation(config: &AttackConfiguration, v: &BitString) -> BitString {
    let mut prep = BitString::zeros(config.n_qubits());
    for (i, &q) in config.victims.iter().enumerate() {
        prep.set(q, v.get(i));
    }
    prep
}

fn identity(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Run one window per `(victim bit-string, window index)` through `plan`,
/// then train and score the attack SVM on the windows labelled with the true
/// victim bit-string.
pub fn windowed_attack<S, F>(
    readout: &Readout<S>,
    config: &AttackConfiguration,
    params: &DefenseParams,
    mut plan: F,
) -> Result<WindowedAttack>
where
    S: ShotSource,
    F: FnMut(&BitString, usize) -> Result<Execution>,
{
    let w = params.attack.window;
    if w == 0 || params.windows_per_victim < 2 {
        return Err(Error::Validation(
            "defense evaluation needs a window of at least 1 shot and 2 windows per victim".into(),
        ));
    }
    let mut windows = Vec::new();
    for v in BitString::all(config.victims.len()) {
        let logical = victim_preparation(config, &v);
        for j in 0..params.windows_per_victim {
            let exec = plan(&logical, j)?;
            if exec.shots.end - exec.shots.start != w as u64 {
                return Err(Error::Validation(format!(
                    "execution covers {} shots, window is {w}",
                    exec.shots.end - exec.shots.start
                )));
            }
            let outcomes: Vec<Outcome> = readout
                .measure(&exec.physical, exec.shots)?
                .into_iter()
                .map(|m| Outcome {
                    prep: logical.clone(),
                    measured: m.select(&exec.positions),
                })
                .collect();
            windows.push(window_features(&outcomes, config, v.clone()));
        }
    }
    let (train, eval) = split_windows(windows.clone(), params.attack.train_fraction, w)?;
    let (_, _, train_accuracy, eval_accuracy) =
        fit_and_score(&train, &eval, config.n_classes(), &params.attack)?;
    Ok(WindowedAttack {
        train_accuracy,
        eval_accuracy,
        chance: config.chance_level(),
        windows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScramblingReport {
    pub undefended_accuracy: f64,
    /// Fresh pad per window, scored against the true victim bit-string.
    pub fresh_pad_accuracy: f64,
    /// One pad reused for every window.
    pub fixed_pad_accuracy: f64,
    pub chance: f64,
    /// Largest total-variation distance, over victim bit-strings, between the
    /// unscrambled and the undefended histograms of the victim bits.
    pub recovery_distance: f64,
    pub mean_recovery_distance: f64,
    pub recovery_shots: usize,
    /// Support of the pooled undefended victim histogram, before and after
    /// relabelling through the fixed pad.
    pub support_before: usize,
    pub support_after: usize,
}

// Shot offsets of the attack windows and recovery runs, clear of the
// training and evaluation slices of any realistic run.
const WINDOWS: u64 = 1 << 32;
const RECOVERY_UNDEFENDED: u64 = 1 << 40;
const RECOVERY_DEFENDED: u64 = 1 << 41;

/// Score the attack without defense, with a fresh one-time pad per window and
/// with one fixed pad, then check that the user gets their own distribution
/// back after unscrambling.
pub fn evaluate_scrambling<S: ShotSource>(
    readout: &Readout<S>,
    config: &AttackConfiguration,
    params: &DefenseParams,
    recovery_shots: usize,
    seed: u64,
) -> Result<ScramblingReport> {
    let n = config.n_qubits();
    let w = params.attack.window as u64;
    let wpv = params.windows_per_victim as u64;
    let shots_of = |logical: &BitString, j: usize| {
        let start = WINDOWS + (logical.select(&config.victims).index() as u64 * wpv + j as u64) * w;
        start..start + w
    };

    let undefended = windowed_attack(readout, config, params, |l, j| {
        Ok(Execution {
            physical: l.clone(),
            positions: identity(n),
            shots: shots_of(l, j),
        })
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(shot_seed(seed, 1));
    let fresh = windowed_attack(readout, config, params, |l, j| {
        let pad = OneTimePad::random(&config.victims, &mut rng);
        Ok(Execution {
            physical: apply_pad(l, &pad)?,
            positions: identity(n),
            shots: shots_of(l, j),
        })
    })?;

    let fixed_pad = OneTimePad::random(
        &config.victims,
        &mut ChaCha8Rng::seed_from_u64(shot_seed(seed, 2)),
    );
    let fixed = windowed_attack(readout, config, params, |l, j| {
        Ok(Execution {
            physical: apply_pad(l, &fixed_pad)?,
            positions: identity(n),
            shots: shots_of(l, j),
        })
    })?;

    if recovery_shots == 0 {
        return Err(Error::Validation(
            "recovery shots must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(shot_seed(seed, 3));
    let mut distances = Vec::new();
    let mut pooled = Vec::new();
    for v in BitString::all(config.victims.len()) {
        let logical = victim_preparation(config, &v);
        let plain: Vec<BitString> = readout
            .measure(
                &logical,
                RECOVERY_UNDEFENDED..RECOVERY_UNDEFENDED + recovery_shots as u64,
            )?
            .iter()
            .map(|m| m.select(&config.victims))
            .collect();
        let mut recovered = Vec::with_capacity(recovery_shots);
        let mut start = RECOVERY_DEFENDED;
        while recovered.len() < recovery_shots {
            let take = (recovery_shots - recovered.len()).min(w as usize) as u64;
            let pad = OneTimePad::random(&config.victims, &mut rng);
            for m in readout.measure(&apply_pad(&logical, &pad)?, start..start + take)? {
                recovered.push(unscramble(&m, &pad)?.select(&config.victims));
            }
            start += take;
        }
        distances.push(total_variation(&histogram(&plain), &histogram(&recovered)));
        pooled.extend(plain);
    }
    let before = histogram(&pooled);
    let victim_pad = OneTimePad::new(fixed_pad.pad.clone(), (0..config.victims.len()).collect())?;
    let after = scramble_histogram(&before, &victim_pad)?;

    Ok(ScramblingReport {
        undefended_accuracy: undefended.eval_accuracy,
        fresh_pad_accuracy: fresh.eval_accuracy,
        fixed_pad_accuracy: fixed.eval_accuracy,
        chance: config.chance_level(),
        recovery_distance: distances.iter().copied().fold(0.0, f64::max),
        mean_recovery_distance: distances.iter().sum::<f64>() / distances.len() as f64,
        recovery_shots,
        support_before: support_size(&before),
        support_after: support_size(&after),
    })
}

/// Windowed attack with window `j` run under the placement of the ensemble
/// group holding shots `j*W .. (j+1)*W` of the schedule.
pub fn randomized_attack<S: ShotSource>(
    readout: &Readout<S>,
    config: &AttackConfiguration,
    params: &DefenseParams,
    ensemble: &MappingEnsemble,
) -> Result<WindowedAttack> {
    ensemble.validate()?;
    let w = params.attack.window as u64;
    windowed_attack(readout, config, params, |l, j| {
        let shots = j as u64 * w..(j as u64 + 1) * w;
        let group = ensemble
            .group_at(shots.start)
            .filter(|g| g.shots.end >= shots.end)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "mapping ensemble has no single group covering shots {shots:?}"
                ))
            })?;
        let shots = WINDOWS + shots.start..WINDOWS + shots.end;
        if group.assignment.len() != l.len() {
            return Err(Error::DimensionMismatch {
                expected: l.len(),
                found: group.assignment.len(),
            });
        }
        Ok(Execution {
            physical: place(l, &group.assignment),
            positions: group.assignment.clone(),
            shots,
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizationReport {
    pub fixed_accuracy: f64,
    pub randomized_accuracy: f64,
    pub chance: f64,
    pub n_assignments: usize,
}

/// Attack accuracy under the ensemble against the same windows run on the
/// identity placement.
pub fn evaluate_randomization<S: ShotSource>(
    readout: &Readout<S>,
    config: &AttackConfiguration,
    params: &DefenseParams,
    ensemble: &MappingEnsemble,
) -> Result<RandomizationReport> {
    let fixed_ensemble = MappingEnsemble {
        groups: ensemble
            .groups
            .iter()
            .map(|g| MappingGroup {
                assignment: identity(g.assignment.len()),
                shots: g.shots.clone(),
            })
            .collect(),
    };
    let fixed = randomized_attack(readout, config, params, &fixed_ensemble)?;
    let randomized = randomized_attack(readout, config, params, ensemble)?;
    Ok(RandomizationReport {
        fixed_accuracy: fixed.eval_accuracy,
        randomized_accuracy: randomized.eval_accuracy,
        chance: config.chance_level(),
        n_assignments: ensemble.n_assignments(),
    })
}

/// One line of the defense report. Cells that do not apply to a defense are
/// left empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DefenseRow {
    pub defense: String,
    pub parameterization: String,
    pub undefended_accuracy: Option<f64>,
    pub defended_accuracy: Option<f64>,
    pub chance: Option<f64>,
    pub recovery_distance: Option<f64>,
    pub utilization: Option<f64>,
}

pub const DEFENSE_CSV_HEADER: [&str; 7] = [
    "defense",
    "parameterization",
    "undefended_accuracy",
    "defended_accuracy",
    "chance",
    "recovery_distance",
    "utilization",
];

pub fn write_defense_csv<W: Write>(rows: &[DefenseRow], out: W) -> Result<()> {
    let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DEFENSE_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.defense.clone(),
            r.parameterization.clone(),
            cell(r.undefended_accuracy),
            cell(r.defended_accuracy),
            cell(r.chance),
            cell(r.recovery_distance),
            cell(r.utilization),
        ])?;
    }
    w.flush()?;
    Ok(())
}

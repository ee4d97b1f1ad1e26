//! The readout-crosstalk side channel.
//!
//! Attacker qubits are prepared in 0 and measured alongside the victim's
//! qubits. How often they read 1 depends on what the victim prepared, because
//! the victim's resonators pull the attacker's channels through their
//! Lorentzian tails. [`estimate_pflip`] tabulates that statistic,
//! [`build_leakage_features`] turns blocks of shots into small-sample flip
//! frequencies, and [`train_svm`] learns to map those back to the victim's
//! bit-string. [`run_attack`] strings the steps together.

mod config;
mod info;
mod leakage;
mod pflip;
mod svm;

pub use config::{parse_attack_config, AttackConfiguration};
pub use info::mutual_information;
pub use leakage::{build_leakage_features, group_by_victim, window_features, LeakageFeatures};
pub use pflip::{attacker_idle, estimate_pflip, FlipCount, PflipSpread, PflipTable};
pub use svm::{class_of, classification_accuracy, predict_victim, train_svm, LinearSvm};

use crate::bits::Outcome;
use crate::error::{Error, Result};
use crate::standardize::Standardizer;

/// Window sizes, split and SVM settings of one attack run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackParams {
    /// Shots per leakage feature vector.
    pub window: usize,
    /// Fraction of each victim bit-string's windows used for training.
    pub train_fraction: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for AttackParams {
    fn default() -> Self {
        AttackParams {
            window: 128,
            train_fraction: 0.3,
            lambda: 1e-3,
            epochs: 30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub config: AttackConfiguration,
    pub table: PflipTable,
    pub train_accuracy: f64,
    pub eval_accuracy: f64,
    pub chance: f64,
    /// Shot-level `I(attacker outcomes; victim bit-string)`, bits.
    pub mutual_information: f64,
    pub n_train: usize,
    pub n_eval: usize,
}

/// Split windows per victim bit-string: the first `ceil(fraction * n)` go to
/// training, the rest to evaluation. Every victim needs at least one of each.
pub fn split_windows(
    windows: Vec<LeakageFeatures>,
    train_fraction: f64,
    window: usize,
) -> Result<(Vec<LeakageFeatures>, Vec<LeakageFeatures>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut eval = Vec::new();
    let mut i = 0;
    while i < windows.len() {
        let victim = windows[i].victim.clone();
        let end = windows[i..]
            .iter()
            .position(|w| w.victim != victim)
            .map_or(windows.len(), |p| i + p);
        let n = end - i;
        if n < 2 {
            return Err(Error::InsufficientShots {
                victim: victim.to_string(),
                have: n * window,
                need: 2 * window,
            });
        }
        let n_train = ((train_fraction * n as f64).ceil() as usize).clamp(1, n - 1);
        train.extend_from_slice(&windows[i..i + n_train]);
        eval.extend_from_slice(&windows[i + n_train..end]);
        i = end;
    }
    Ok((train, eval))
}

/// Standardise on the training windows, fit the SVM, and score both sets.
/// Returns `(svm, standardizer, train accuracy, eval accuracy)`.
pub fn fit_and_score(
    train: &[LeakageFeatures],
    eval: &[LeakageFeatures],
    n_classes: usize,
    params: &AttackParams,
) -> Result<(LinearSvm, Standardizer, f64, f64)> {
    let raw: Vec<Vec<f64>> = train.iter().map(|w| w.features.clone()).collect();
    let standardizer = Standardizer::fit(&raw);
    let prep = |ws: &[LeakageFeatures]| -> (Vec<Vec<f64>>, Vec<usize>) {
        ws.iter()
            .map(|w| (standardizer.apply(&w.features), w.label()))
            .unzip()
    };
    let (tx, ty) = prep(train);
    let (ex, ey) = prep(eval);
    let svm = train_svm(
        &tx,
        &ty,
        n_classes,
        params.lambda,
        params.epochs,
        params.seed,
    )?;
    let train_acc = svm.accuracy(&tx, &ty)?;
    let eval_acc = svm.accuracy(&ex, &ey)?;
    Ok((svm, standardizer, train_acc, eval_acc))
}

/// Shot-level mutual information between attacker readings and the victim
/// bit-string, over idle-attacker shots.
pub fn attacker_victim_information<'a, I>(outcomes: I, config: &AttackConfiguration) -> Result<f64>
where
    I: IntoIterator<Item = &'a Outcome>,
{
    mutual_information(
        outcomes
            .into_iter()
            .filter(|o| attacker_idle(o, config))
            .map(|o| {
                (
                    o.measured.select(&config.attackers),
                    o.prep.select(&config.victims),
                )
            }),
    )
}

/// Full attack on a set of discriminated shots.
pub fn run_attack(
    outcomes: &[Outcome],
    config: &AttackConfiguration,
    params: &AttackParams,
) -> Result<AttackResult> {
    let table = estimate_pflip(outcomes, config)?;
    let windows = build_leakage_features(outcomes, config, params.window, params.seed)?;
    let (train, eval) = split_windows(windows, params.train_fraction, params.window)?;
    let (_, _, train_accuracy, eval_accuracy) =
        fit_and_score(&train, &eval, config.n_classes(), params)?;
    Ok(AttackResult {
        config: config.clone(),
        table,
        train_accuracy,
        eval_accuracy,
        chance: config.chance_level(),
        mutual_information: attacker_victim_information(outcomes, config)?,
        n_train: train.len(),
        n_eval: eval.len(),
    })
}

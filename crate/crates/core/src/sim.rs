//! Synthesis of demodulated readout traces.
//!
//! Every qubit channel is demodulated at the bare frequency of its own
//! resonator. All resonators on the feedline contribute their steady-state
//! Lorentzian response at that frequency, pulled by `+-chi` according to the
//! state of their qubit, so the `r != c` terms of the sum are the crosstalk:
//!
//! ```text
//! z_c[n] = sum_r a_r * L(w_c - (w_r + chi_r * (2 s_r[n] - 1)), kappa_r) + sigma * (xi_I + i xi_Q)
//! L(d, kappa) = (kappa / 2) / (i d + kappa / 2)
//! ```
//!
//! # Random streams
//!
//! Shot `k` of a batch seeded with `seed` draws from one Xoshiro256++ stream
//! per resonator, stream `r` seeded with
//! `Xoshiro256PlusPlus::seed_from_u64(shot_seed(shot_seed(seed, k), r))`. A qubit's trajectory and the
//! noise on its channel both come from the stream of the resonator it is read
//! out on, so relabelling qubits together with their resonators relabels the
//! output exactly. `shot_seed` is the SplitMix64 finaliser applied as
//! `mix(seed ^ mix(k))`; it is part of the reproducibility contract.

use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::device::DeviceModel;
use crate::error::{Error, Result};

/// Prepared basis state, one bit per qubit.
pub type StatePreparation = BitString;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of shot `shot_index` in a batch seeded with `seed`.
pub fn shot_seed(seed: u64, shot_index: u64) -> u64 {
    mix64(seed ^ mix64(shot_index))
}

/// Steady-state response `(kappa/2) / (i*detuning + kappa/2)` of a resonator
/// probed `detuning` MHz away from its (pulled) centre.
pub fn lorentzian_response(detuning_mhz: f64, linewidth_mhz: f64) -> Complex64 {
    let half = Complex64::new(linewidth_mhz / 2.0, 0.0);
    half / Complex64::new(linewidth_mhz / 2.0, detuning_mhz)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    /// 1 -> 0
    Relaxation,
    /// 0 -> 1
    Excitation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub kind: TransitionKind,
    /// First sample at which the qubit is in its new state.
    pub sample: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateTrajectory {
    pub initial: BitString,
    pub transitions: Vec<Option<Transition>>,
}

impl StateTrajectory {
    pub fn stationary(initial: BitString) -> Self {
        let n = initial.len();
        StateTrajectory {
            initial,
            transitions: vec![None; n],
        }
    }

    pub fn state_at(&self, qubit: usize, sample: usize) -> u8 {
        let s = self.initial.get(qubit);
        match self.transitions[qubit] {
            Some(t) if sample >= t.sample => 1 - s,
            _ => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    /// Channel-major: `traces[q * n_samples + n]`.
    pub traces: Vec<Complex64>,
    pub n_samples: usize,
    pub preparation: StatePreparation,
    /// Ground truth; absent for data ingested from hardware.
    pub trajectory: Option<StateTrajectory>,
    pub shot_index: u64,
}

impl ShotRecord {
    pub fn n_qubits(&self) -> usize {
        self.preparation.len()
    }

    pub fn channel(&self, qubit: usize) -> &[Complex64] {
        &self.traces[qubit * self.n_samples..(qubit + 1) * self.n_samples]
    }
}

/// Per-shot random state: one independent stream per resonator.
pub struct ShotRng {
    streams: Vec<Xoshiro256PlusPlus>,
}

impl ShotRng {
    pub fn new(seed: u64, shot_index: u64, n_resonators: usize) -> Self {
        let base = shot_seed(seed, shot_index);
        let streams = (0..n_resonators)
            .map(|r| Xoshiro256PlusPlus::seed_from_u64(shot_seed(base, r as u64)))
            .collect();
        ShotRng { streams }
    }

    pub fn stream(&mut self, resonator: usize) -> &mut Xoshiro256PlusPlus {
        &mut self.streams[resonator]
    }
}

fn check_prep(device: &DeviceModel, prep: &StatePreparation) -> Result<()> {
    if prep.len() != device.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: device.n_qubits(),
            found: prep.len(),
        });
    }
    Ok(())
}

fn sample_qubit_transition<R: Rng + ?Sized>(
    rng: &mut R,
    prepared: u8,
    t1_us: f64,
    p_excitation: f64,
    device: &DeviceModel,
) -> Option<Transition> {
    if prepared == 1 {
        // 1 - U lies in (0, 1], so the log is finite.
        let u: f64 = 1.0 - rng.random::<f64>();
        if !t1_us.is_finite() {
            return None;
        }
        let t = -t1_us * u.ln();
        if t < device.duration_us() {
            let sample = ((t / device.sample_period_us()) as usize).min(device.n_samples - 1);
            return Some(Transition {
                kind: TransitionKind::Relaxation,
                sample,
            });
        }
        None
    } else {
        let u: f64 = rng.random();
        if u < p_excitation {
            Some(Transition {
                kind: TransitionKind::Excitation,
                sample: rng.random_range(0..device.n_samples),
            })
        } else {
            None
        }
    }
}

fn draw_trajectory(
    prep: &StatePreparation,
    device: &DeviceModel,
    rng: &mut ShotRng,
) -> StateTrajectory {
    let transitions = device
        .qubits
        .iter()
        .enumerate()
        .map(|(q, params)| {
            sample_qubit_transition(
                rng.stream(params.resonator),
                prep.get(q),
                params.t1_us,
                params.p_excitation,
                device,
            )
        })
        .collect();
    StateTrajectory {
        initial: prep.clone(),
        transitions,
    }
}

/// Draw the mid-readout transitions of one shot.
///
/// A qubit prepared in 1 relaxes after an exponential time with mean T1
/// (recorded only inside the window); a qubit prepared in 0 is excited with
/// probability `p_excitation` at a uniformly random sample.
pub fn sample_trajectory(
    prep: &StatePreparation,
    device: &DeviceModel,
    rng: &mut ShotRng,
) -> Result<StateTrajectory> {
    check_prep(device, prep)?;
    Ok(draw_trajectory(prep, device, rng))
}

/// Noiseless signal of every channel for the given joint qubit state.
///
/// Terms are summed in resonator order, so relabelling qubits together with
/// their resonators permutes the result exactly.
pub fn steady_state_levels(device: &DeviceModel, states: &[u8]) -> Vec<Complex64> {
    let mut by_resonator = vec![0u8; device.resonators.len()];
    for (q, &s) in device.qubits.iter().zip(states) {
        by_resonator[q.resonator] = s;
    }
    device
        .qubits
        .iter()
        .map(|qc| {
            let probe = device.resonators[qc.resonator].frequency_mhz();
            device
                .resonators
                .iter()
                .zip(&by_resonator)
                .map(|(r, &s)| {
                    r.amplitude
                        * lorentzian_response(probe - r.pulled_frequency_mhz(s), r.linewidth_mhz)
                })
                .sum()
        })
        .collect()
}

/// Render the traces of a known trajectory, drawing noise from `rng`.
pub fn render_traces(
    device: &DeviceModel,
    trajectory: &StateTrajectory,
    rng: &mut ShotRng,
) -> Vec<Complex64> {
    let nq = device.n_qubits();
    let ns = device.n_samples;
    let mut breaks: Vec<usize> = trajectory
        .transitions
        .iter()
        .flatten()
        .map(|t| t.sample)
        .filter(|&s| s > 0)
        .collect();
    breaks.push(0);
    breaks.push(ns);
    breaks.sort_unstable();
    breaks.dedup();

    let mut traces = vec![Complex64::new(0.0, 0.0); nq * ns];
    let mut states = vec![0u8; nq];
    for seg in breaks.windows(2) {
        let (start, end) = (seg[0], seg[1]);
        for (q, s) in states.iter_mut().enumerate() {
            *s = trajectory.state_at(q, start);
        }
        let levels = steady_state_levels(device, &states);
        for (q, level) in levels.into_iter().enumerate() {
            traces[q * ns + start..q * ns + end].fill(level);
        }
    }

    let sigma = device.noise_sigma;
    if sigma > 0.0 {
        for (q, params) in device.qubits.iter().enumerate() {
            let stream = rng.stream(params.resonator);
            for z in &mut traces[q * ns..(q + 1) * ns] {
                let re: f64 = stream.sample(StandardNormal);
                let im: f64 = stream.sample(StandardNormal);
                *z += Complex64::new(sigma * re, sigma * im);
            }
        }
    }
    traces
}

/// Simulate one shot: draw the trajectory, then the noisy traces.
pub fn simulate_shot(
    device: &DeviceModel,
    prep: &StatePreparation,
    rng: &mut ShotRng,
    shot_index: u64,
) -> Result<ShotRecord> {
    check_prep(device, prep)?;
    let trajectory = draw_trajectory(prep, device, rng);
    let traces = render_traces(device, &trajectory, rng);
    Ok(ShotRecord {
        traces,
        n_samples: device.n_samples,
        preparation: prep.clone(),
        trajectory: Some(trajectory),
        shot_index,
    })
}

/// Simulate shots `range` of the batch seeded with `seed`, in index order.
///
/// Shot `k` depends only on `(seed, k)`, so any sub-range reproduces the
/// corresponding slice of the full batch and the worker count never changes
/// the output.
pub fn simulate_range(
    device: &DeviceModel,
    prep: &StatePreparation,
    range: Range<u64>,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    check_prep(device, prep)?;
    let n_res = device.resonators.len();
    range
        .into_par_iter()
        .map(|k| simulate_shot(device, prep, &mut ShotRng::new(seed, k, n_res), k))
        .collect()
}

pub fn simulate_batch(
    device: &DeviceModel,
    prep: &StatePreparation,
    n_shots: usize,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    if n_shots == 0 {
        return Err(Error::Validation("n_shots must be at least 1".into()));
    }
    simulate_range(device, prep, 0..n_shots as u64, seed)
}

//! Physical description of a frequency-multiplexed readout device.
//!
//! A [`DeviceModel`] lists the readout resonators sharing one feedline, the
//! qubits read out through them, and the sampling geometry of a readout
//! window. Models are immutable once validated and can be shared freely
//! between worker threads.
//!
//! # Configuration text
//!
//! Devices load from a TOML document. Every key is optional; anything left
//! out takes the value of [`default_device`]. Unknown keys are rejected.
//!
//! ```toml
//! n_samples = 500          # samples per readout window
//! sample_rate_mhz = 500.0  # ADC rate; duration = n_samples / sample_rate
//! noise_sigma = 5.0        # per-quadrature Gaussian noise per sample
//!
//! [[resonator]]            # one table per resonator, ascending frequency
//! frequency_ghz = 7.06
//! linewidth_mhz = 20.0     # kappa / 2pi, full width
//! dispersive_shift_mhz = 10.0  # chi / 2pi, pull is +-chi about the bare frequency
//! amplitude = 1.0
//!
//! [[qubit]]                # one table per qubit
//! resonator = 0            # index into the resonator list
//! t1_us = 3.0
//! p_excitation = 0.01      # chance of one spurious 0 -> 1 event per window
//! ```
//!
//! When `[[resonator]]` tables are present they replace the default list;
//! fields missing from entry `i` fall back to default resonator `i` (the
//! frequency is required beyond the fifth entry). When `[[qubit]]` tables are
//! absent, one default qubit is created per resonator with the identity
//! assignment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resonator centre frequencies of the shipped five-qubit device, GHz.
pub const DEFAULT_FREQUENCIES_GHZ: [f64; 5] = [7.06, 7.10, 7.15, 7.20, 7.25];
pub const DEFAULT_LINEWIDTH_MHZ: f64 = 20.0;
pub const DEFAULT_DISPERSIVE_SHIFT_MHZ: f64 = 10.0;
pub const DEFAULT_AMPLITUDE: f64 = 1.0;
pub const DEFAULT_NOISE_SIGMA: f64 = 5.0;
pub const DEFAULT_T1_US: f64 = 3.0;
pub const DEFAULT_P_EXCITATION: f64 = 0.01;
pub const DEFAULT_N_SAMPLES: usize = 500;
pub const DEFAULT_SAMPLE_RATE_MHZ: f64 = 500.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorParams {
    pub frequency_ghz: f64,
    pub linewidth_mhz: f64,
    pub dispersive_shift_mhz: f64,
    pub amplitude: f64,
}

impl ResonatorParams {
    pub fn frequency_mhz(&self) -> f64 {
        self.frequency_ghz * 1e3
    }

    /// Dressed resonance for the given qubit state, MHz.
    pub fn pulled_frequency_mhz(&self, state: u8) -> f64 {
        let sign = if state == 1 { 1.0 } else { -1.0 };
        self.frequency_mhz() + sign * self.dispersive_shift_mhz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitParams {
    pub t1_us: f64,
    pub p_excitation: f64,
    pub resonator: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceModel {
    pub resonators: Vec<ResonatorParams>,
    pub qubits: Vec<QubitParams>,
    pub n_samples: usize,
    pub sample_rate_mhz: f64,
    pub noise_sigma: f64,
}

fn default_resonator(frequency_ghz: f64) -> ResonatorParams {
    ResonatorParams {
        frequency_ghz,
        linewidth_mhz: DEFAULT_LINEWIDTH_MHZ,
        dispersive_shift_mhz: DEFAULT_DISPERSIVE_SHIFT_MHZ,
        amplitude: DEFAULT_AMPLITUDE,
    }
}

fn default_qubit(resonator: usize) -> QubitParams {
    QubitParams {
        t1_us: DEFAULT_T1_US,
        p_excitation: DEFAULT_P_EXCITATION,
        resonator,
    }
}

/// The shipped five-qubit device.
pub fn default_device() -> DeviceModel {
    DeviceModel {
        resonators: DEFAULT_FREQUENCIES_GHZ
            .iter()
            .map(|&f| default_resonator(f))
            .collect(),
        qubits: (0..DEFAULT_FREQUENCIES_GHZ.len())
            .map(default_qubit)
            .collect(),
        n_samples: DEFAULT_N_SAMPLES,
        sample_rate_mhz: DEFAULT_SAMPLE_RATE_MHZ,
        noise_sigma: DEFAULT_NOISE_SIGMA,
    }
}

impl DeviceModel {
    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Readout window length in microseconds.
    pub fn duration_us(&self) -> f64 {
        self.n_samples as f64 / self.sample_rate_mhz
    }

    pub fn sample_period_us(&self) -> f64 {
        1.0 / self.sample_rate_mhz
    }

    /// Resonator that reads out `qubit`.
    pub fn resonator_of(&self, qubit: usize) -> &ResonatorParams {
        &self.resonators[self.qubits[qubit].resonator]
    }

    /// Copy of the device with every resonator's offset from the first one
    /// multiplied by `factor`. Large factors push the Lorentzian tails apart
    /// and switch crosstalk off.
    pub fn with_spacing_scale(&self, factor: f64) -> DeviceModel {
        let mut out = self.clone();
        let base = self.resonators[0].frequency_ghz;
        for r in &mut out.resonators {
            r.frequency_ghz = base + (r.frequency_ghz - base) * factor;
        }
        out
    }

    /// Copy of the device with qubit `q` read out on resonator `assignment[q]`.
    pub fn with_assignment(&self, assignment: &[usize]) -> Result<DeviceModel> {
        if assignment.len() != self.qubits.len() {
            return Err(Error::Validation(format!(
                "assignment has {} entries for {} qubits",
                assignment.len(),
                self.qubits.len()
            )));
        }
        let mut out = self.clone();
        for (q, &r) in out.qubits.iter_mut().zip(assignment) {
            q.resonator = r;
        }
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.resonators.is_empty() {
            return bad("resonator list must be non-empty".into());
        }
        if self.qubits.len() != self.resonators.len() {
            return bad(format!(
                "qubit count {} must equal resonator count {}",
                self.qubits.len(),
                self.resonators.len()
            ));
        }
        if self.n_samples < 2 {
            return bad(format!(
                "n_samples must be at least 2, got {}",
                self.n_samples
            ));
        }
        if !(self.sample_rate_mhz.is_finite() && self.sample_rate_mhz > 0.0) {
            return bad(format!(
                "sample_rate_mhz must be positive, got {}",
                self.sample_rate_mhz
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!(
                "noise_sigma must be finite and non-negative, got {}",
                self.noise_sigma
            ));
        }
        for (i, r) in self.resonators.iter().enumerate() {
            if !(r.frequency_ghz.is_finite() && r.frequency_ghz > 0.0) {
                return bad(format!("resonator[{i}].frequency_ghz must be positive"));
            }
            if !(r.linewidth_mhz.is_finite() && r.linewidth_mhz > 0.0) {
                return bad(format!(
                    "resonator[{i}].linewidth_mhz must be > 0, got {}",
                    r.linewidth_mhz
                ));
            }
            if !r.dispersive_shift_mhz.is_finite() || r.dispersive_shift_mhz == 0.0 {
                return bad(format!(
                    "resonator[{i}].dispersive_shift_mhz must be non-zero, got {}",
                    r.dispersive_shift_mhz
                ));
            }
            if !(r.amplitude.is_finite() && r.amplitude > 0.0) {
                return bad(format!(
                    "resonator[{i}].amplitude must be > 0, got {}",
                    r.amplitude
                ));
            }
            if i > 0 && r.frequency_ghz <= self.resonators[i - 1].frequency_ghz {
                return bad(format!(
                    "resonator[{i}].frequency_ghz: frequencies strictly increasing required ({} after {})",
                    r.frequency_ghz,
                    self.resonators[i - 1].frequency_ghz
                ));
            }
        }
        let mut seen = vec![false; self.resonators.len()];
        for (i, q) in self.qubits.iter().enumerate() {
            if q.t1_us.is_nan() || q.t1_us <= 0.0 {
                return bad(format!("qubit[{i}].t1_us must be > 0, got {}", q.t1_us));
            }
            if !(0.0..0.5).contains(&q.p_excitation) {
                return bad(format!(
                    "qubit[{i}].p_excitation must lie in [0, 0.5), got {}",
                    q.p_excitation
                ));
            }
            if q.resonator >= self.resonators.len() {
                return bad(format!(
                    "qubit[{i}].resonator index {} out of range",
                    q.resonator
                ));
            }
            if std::mem::replace(&mut seen[q.resonator], true) {
                return bad(format!(
                    "qubit[{i}].resonator: resonator {} assigned twice (assignment must be a bijection)",
                    q.resonator
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_rate_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    resonator: Vec<ResonatorDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    qubit: Vec<QubitDoc>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResonatorDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    frequency_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    linewidth_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dispersive_shift_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QubitDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    resonator: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t1_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_excitation: Option<f64>,
}

/// Parse and validate a device configuration document.
pub fn load_device(config_text: &str) -> Result<DeviceModel> {
    let doc: DeviceDoc = toml::from_str(config_text).map_err(|e| Error::Parse(e.to_string()))?;
    let defaults = default_device();

    let resonators = if doc.resonator.is_empty() {
        defaults.resonators.clone()
    } else {
        doc.resonator
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let base = defaults.resonators.get(i);
                let frequency_ghz = match (r.frequency_ghz, base) {
                    (Some(f), _) => f,
                    (None, Some(b)) => b.frequency_ghz,
                    (None, None) => {
                        return Err(Error::Validation(format!(
                            "resonator[{i}].frequency_ghz is required"
                        )))
                    }
                };
                let fallback = base
                    .cloned()
                    .unwrap_or_else(|| default_resonator(frequency_ghz));
                Ok(ResonatorParams {
                    frequency_ghz,
                    linewidth_mhz: r.linewidth_mhz.unwrap_or(fallback.linewidth_mhz),
                    dispersive_shift_mhz: r
                        .dispersive_shift_mhz
                        .unwrap_or(fallback.dispersive_shift_mhz),
                    amplitude: r.amplitude.unwrap_or(fallback.amplitude),
                })
            })
            .collect::<Result<Vec<_>>>()?
    };

    let qubits = if doc.qubit.is_empty() {
        (0..resonators.len()).map(default_qubit).collect()
    } else {
        doc.qubit
            .iter()
            .enumerate()
            .map(|(i, q)| QubitParams {
                t1_us: q.t1_us.unwrap_or(DEFAULT_T1_US),
                p_excitation: q.p_excitation.unwrap_or(DEFAULT_P_EXCITATION),
                resonator: q.resonator.unwrap_or(i),
            })
            .collect()
    };

    let model = DeviceModel {
        resonators,
        qubits,
        n_samples: doc.n_samples.unwrap_or(defaults.n_samples),
        sample_rate_mhz: doc.sample_rate_mhz.unwrap_or(defaults.sample_rate_mhz),
        noise_sigma: doc.noise_sigma.unwrap_or(defaults.noise_sigma),
    };
    model.validate()?;
    Ok(model)
}

/// Render a model as a fully explicit configuration document.
pub fn render_device(model: &DeviceModel) -> String {
    let doc = DeviceDoc {
        n_samples: Some(model.n_samples),
        sample_rate_mhz: Some(model.sample_rate_mhz),
        noise_sigma: Some(model.noise_sigma),
        resonator: model
            .resonators
            .iter()
            .map(|r| ResonatorDoc {
                frequency_ghz: Some(r.frequency_ghz),
                linewidth_mhz: Some(r.linewidth_mhz),
                dispersive_shift_mhz: Some(r.dispersive_shift_mhz),
                amplitude: Some(r.amplitude),
            })
            .collect(),
        qubit: model
            .qubits
            .iter()
            .map(|q| QubitDoc {
                resonator: Some(q.resonator),
                t1_us: Some(q.t1_us),
                p_excitation: Some(q.p_excitation),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("device document always serializes")
}

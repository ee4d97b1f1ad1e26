//! Readout-crosstalk side channel on frequency-multiplexed qubit readout.
//!
//! The crate simulates demodulated readout traces of qubits that share a
//! feedline ([`sim`]), discriminates them ([`discriminator`]), mounts the
//! attacker-qubit bit-flip side channel against co-located victims
//! ([`attack`]) and evaluates defenses against it ([`defense`]). Traces and
//! outcomes persist through [`dataset`]; [`experiment`] ties the stages into
//! seeded end-to-end runs.

pub mod attack;
pub mod bits;
pub mod dataset;
pub mod defense;
pub mod device;
pub mod discriminator;
pub mod error;
pub mod experiment;
pub mod model_text;
pub mod sim;
pub mod standardize;

pub use bits::{BitString, Outcome};
pub use device::{default_device, load_device, render_device, DeviceModel};
pub use error::{Error, Result};

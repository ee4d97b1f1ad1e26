//! Experiment specification file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use xtalk_core::attack::{parse_attack_config, AttackConfiguration, AttackParams};
use xtalk_core::discriminator::{DiscriminatorKind, MlpHyperParams};
use xtalk_core::{default_device, load_device, BitString, DeviceModel};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PrepsDoc {
    Named(String),
    List(Vec<String>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttackDoc {
    window: Option<usize>,
    train_fraction: Option<f64>,
    lambda: Option<f64>,
    epochs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpDoc {
    learning_rate: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScramblingDoc {
    recovery_shots: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingDoc {
    kind: Option<String>,
    size: Option<usize>,
    group_windows: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SandboxDoc {
    groups: Option<usize>,
    group_size: Option<usize>,
    requests: Vec<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefenseDoc {
    configs: Option<Vec<String>>,
    windows_per_victim: Option<usize>,
    scrambling: Option<ScramblingDoc>,
    mapping: Option<MappingDoc>,
    sandbox: Option<SandboxDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    seed: Option<u64>,
    out: Option<PathBuf>,
    device: Option<PathBuf>,
    preps: Option<PrepsDoc>,
    shots: Option<usize>,
    train_fraction: Option<f64>,
    discriminator: Option<String>,
    configs: Option<Vec<String>>,
    #[serde(default)]
    attack: AttackDoc,
    #[serde(default)]
    mlp: MlpDoc,
    defense: Option<DefenseDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingKind {
    Random,
    Cyclic,
}

#[derive(Debug, Clone)]
pub struct MappingSpec {
    pub kind: MappingKind,
    pub size: usize,
    pub group_windows: usize,
}

#[derive(Debug, Clone)]
pub struct SandboxSpec {
    pub groups: usize,
    pub group_size: usize,
    pub requests: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DefenseSpec {
    pub configs: Vec<AttackConfiguration>,
    pub windows_per_victim: usize,
    pub recovery_shots: Option<usize>,
    pub mapping: Option<MappingSpec>,
    pub sandbox: Option<SandboxSpec>,
}

/// A fully resolved experiment: every default filled in and every reference
/// checked.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// File name of the spec, as recorded in manifests.
    pub name: String,
    /// Device file name, or `None` for the built-in device.
    pub device_name: Option<String>,
    pub device: DeviceModel,
    pub preps: Vec<BitString>,
    pub shots: usize,
    pub train_fraction: f64,
    pub discriminator: DiscriminatorKind,
    pub mlp: MlpHyperParams,
    pub configs: Vec<AttackConfiguration>,
    pub attack: AttackParams,
    pub defense: Option<DefenseSpec>,
    pub seed: u64,
    pub out: PathBuf,
}

pub const DEFAULT_SHOTS: usize = 2000;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.3;
pub const DEFAULT_CONFIGS: [&str; 8] = [
    "A1234", "0A234", "01A34", "A1A34", "A12A4", "A123A", "AA234", "0AAAA",
];

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::validation(msg)
}

fn parse_configs(list: &[String], n_qubits: usize) -> Result<Vec<AttackConfiguration>, CliError> {
    list.iter()
        .map(|c| {
            parse_attack_config(c, n_qubits)
                .map_err(|e| invalid(format!("attack configuration {c:?}: {e}")))
        })
        .collect()
}

fn fraction(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(invalid(format!(
            "{name} must lie strictly between 0 and 1, got {v}"
        )))
    }
}

fn positive(name: &str, v: usize) -> Result<usize, CliError> {
    if v == 0 {
        Err(invalid(format!("{name} must be positive")))
    } else {
        Ok(v)
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

impl ExperimentSpec {
    /// Load a spec file. `seed` and `out` override the file's values.
    pub fn load(
        path: &Path,
        seed: Option<u64>,
        out: Option<PathBuf>,
    ) -> Result<ExperimentSpec, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read spec {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &file_name(path), base, seed, out)
    }

    /// Parse spec text; relative paths resolve against `base`.
    pub fn parse(
        text: &str,
        name: &str,
        base: &Path,
        seed: Option<u64>,
        out: Option<PathBuf>,
    ) -> Result<ExperimentSpec, CliError> {
        let doc: SpecDoc =
            toml::from_str(text).map_err(|e| invalid(format!("spec {name}: {e}")))?;

        let seed = seed
            .or(doc.seed)
            .ok_or_else(|| invalid("a seed is required (spec `seed` or --seed)"))?;
        let out = out
            .or_else(|| doc.out.map(|o| base.join(o)))
            .ok_or_else(|| invalid("an output directory is required (spec `out` or --out)"))?;

        let (device, device_name) = match &doc.device {
            None => (default_device(), None),
            Some(rel) => {
                let p = base.join(rel);
                let text = std::fs::read_to_string(&p).map_err(|e| {
                    invalid(format!("cannot read device file {}: {e}", p.display()))
                })?;
                let device = load_device(&text)
                    .map_err(|e| invalid(format!("device file {}: {e}", p.display())))?;
                (device, Some(file_name(rel)))
            }
        };
        let n = device.n_qubits();

        let preps = match doc.preps {
            None => BitString::all(n).collect(),
            Some(PrepsDoc::Named(s)) if s == "all-basis-states" => BitString::all(n).collect(),
            Some(PrepsDoc::Named(s)) => {
                return Err(invalid(format!(
                    "preps must be \"all-basis-states\" or a list, got {s:?}"
                )))
            }
            Some(PrepsDoc::List(list)) => {
                let mut preps = Vec::with_capacity(list.len());
                for s in &list {
                    let p: BitString = s
                        .parse()
                        .map_err(|e| invalid(format!("preparation {s:?}: {e}")))?;
                    if p.len() != n {
                        return Err(invalid(format!(
                            "preparation {s:?} has {} bits, the device has {n} qubits",
                            p.len()
                        )));
                    }
                    if preps.contains(&p) {
                        return Err(invalid(format!("preparation {s:?} listed twice")));
                    }
                    preps.push(p);
                }
                if preps.is_empty() {
                    return Err(invalid("preps is empty"));
                }
                preps
            }
        };

        let shots = positive("shots", doc.shots.unwrap_or(DEFAULT_SHOTS))?;
        let train_fraction = doc.train_fraction.unwrap_or(DEFAULT_TRAIN_FRACTION);
        let discriminator = doc
            .discriminator
            .as_deref()
            .unwrap_or("mf")
            .parse::<DiscriminatorKind>()
            .map_err(|e| invalid(e.to_string()))?;

        let md = MlpHyperParams::default();
        let mlp = MlpHyperParams {
            learning_rate: doc.mlp.learning_rate.unwrap_or(md.learning_rate),
            epochs: positive("mlp.epochs", doc.mlp.epochs.unwrap_or(md.epochs))?,
            batch_size: positive(
                "mlp.batch_size",
                doc.mlp.batch_size.unwrap_or(md.batch_size),
            )?,
            seed,
        };

        let configs = match &doc.configs {
            Some(list) if !list.is_empty() => parse_configs(list, n)?,
            Some(_) => return Err(invalid("configs is empty")),
            None if n == 5 => parse_configs(&DEFAULT_CONFIGS.map(String::from), n)?,
            None => {
                return Err(invalid(
                    "configs is required for devices other than 5 qubits",
                ))
            }
        };

        let ad = AttackParams::default();
        let attack = AttackParams {
            window: positive("attack.window", doc.attack.window.unwrap_or(ad.window))?,
            train_fraction: fraction(
                "attack.train_fraction",
                doc.attack.train_fraction.unwrap_or(ad.train_fraction),
            )?,
            lambda: doc.attack.lambda.unwrap_or(ad.lambda),
            epochs: positive("attack.epochs", doc.attack.epochs.unwrap_or(ad.epochs))?,
            seed,
        };
        if !(attack.lambda > 0.0 && attack.lambda.is_finite()) {
            return Err(invalid("attack.lambda must be positive"));
        }

        let defense = doc
            .defense
            .map(|d| -> Result<DefenseSpec, CliError> {
                let configs = match &d.configs {
                    Some(list) => parse_configs(list, n)?,
                    None => configs.clone(),
                };
                let mapping = d
                    .mapping
                    .map(|m| -> Result<MappingSpec, CliError> {
                        let kind = match m.kind.as_deref().unwrap_or("random") {
                            "random" => MappingKind::Random,
                            "cyclic" => MappingKind::Cyclic,
                            other => {
                                return Err(invalid(format!(
                                    "defense.mapping.kind must be random or cyclic, got {other:?}"
                                )))
                            }
                        };
                        Ok(MappingSpec {
                            kind,
                            size: positive("defense.mapping.size", m.size.unwrap_or(n))?,
                            group_windows: positive(
                                "defense.mapping.group_windows",
                                m.group_windows.unwrap_or(1),
                            )?,
                        })
                    })
                    .transpose()?;
                let sandbox = d.sandbox.map(|s| SandboxSpec {
                    groups: s.groups.unwrap_or(9),
                    group_size: s.group_size.unwrap_or(6),
                    requests: s.requests,
                });
                Ok(DefenseSpec {
                    configs,
                    windows_per_victim: positive(
                        "defense.windows_per_victim",
                        d.windows_per_victim.unwrap_or(64),
                    )?,
                    recovery_shots: d
                        .scrambling
                        .map(|s| {
                            positive(
                                "defense.scrambling.recovery_shots",
                                s.recovery_shots.unwrap_or(10_000),
                            )
                        })
                        .transpose()?,
                    mapping,
                    sandbox,
                })
            })
            .transpose()?;

        Ok(ExperimentSpec {
            name: name.to_string(),
            device_name,
            device,
            preps,
            shots,
            train_fraction,
            discriminator,
            mlp,
            configs,
            attack,
            defense,
            seed,
            out,
        })
    }
}

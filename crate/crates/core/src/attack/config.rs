use std::fmt;

use crate::error::{Error, Result};

/// Partition of the device into attacker and victim qubits, written as e.g.
/// `A123A`: `A` marks an attacker qubit, a digit marks a victim qubit and
/// names it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackConfiguration {
    pub notation: String,
    pub attackers: Vec<usize>,
    pub victims: Vec<usize>,
    /// Printed label of each victim, parallel to `victims`.
    pub victim_labels: Vec<char>,
}

impl AttackConfiguration {
    pub fn n_qubits(&self) -> usize {
        self.attackers.len() + self.victims.len()
    }

    /// Number of distinct victim bit-strings.
    pub fn n_classes(&self) -> usize {
        1 << self.victims.len()
    }

    pub fn chance_level(&self) -> f64 {
        1.0 / self.n_classes() as f64
    }
}

impl fmt::Display for AttackConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.notation)
    }
}

pub fn parse_attack_config(notation: &str, n_qubits: usize) -> Result<AttackConfiguration> {
    let chars: Vec<char> = notation.chars().collect();
    if chars.len() != n_qubits {
        return Err(Error::Validation(format!(
            "attack configuration {notation:?} has {} positions for {n_qubits} qubits",
            chars.len()
        )));
    }
    let mut attackers = Vec::new();
    let mut victims = Vec::new();
    let mut victim_labels: Vec<char> = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        match c {
            'A' => attackers.push(i),
            d if d.is_ascii_digit() => {
                if victim_labels.contains(&d) {
                    return Err(Error::Validation(format!(
                        "attack configuration {notation:?}: duplicate victim label '{d}'"
                    )));
                }
                victims.push(i);
                victim_labels.push(d);
            }
            other => {
                return Err(Error::Validation(format!(
                    "attack configuration {notation:?}: illegal character '{other}' at position {i}"
                )))
            }
        }
    }
    if attackers.is_empty() {
        return Err(Error::Validation(format!(
            "attack configuration {notation:?}: empty attacker set"
        )));
    }
    if victims.is_empty() {
        return Err(Error::Validation(format!(
            "attack configuration {notation:?}: empty victim set"
        )));
    }
    Ok(AttackConfiguration {
        notation: notation.to_string(),
        attackers,
        victims,
        victim_labels,
    })
}

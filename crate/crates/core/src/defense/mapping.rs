use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Shots `shots` run with logical qubit `q` placed on physical qubit
/// `assignment[q]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingGroup {
    pub assignment: Vec<usize>,
    pub shots: Range<u64>,
}

/// Per-group qubit placements. Ranges are contiguous from shot 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingEnsemble {
    pub groups: Vec<MappingGroup>,
}

pub fn check_bijection(assignment: &[usize]) -> Result<()> {
    let mut seen = vec![false; assignment.len()];
    for (q, &p) in assignment.iter().enumerate() {
        if p >= assignment.len() || seen[p] {
            return Err(Error::Validation(format!(
                "assignment {assignment:?} is not a bijection (logical qubit {q} -> {p})"
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Physical preparation that realises a logical one under `assignment`.
pub fn place(logical: &BitString, assignment: &[usize]) -> BitString {
    let mut physical = BitString::zeros(logical.len());
    for (q, &p) in assignment.iter().enumerate() {
        physical.set(p, logical.get(q));
    }
    physical
}

impl MappingEnsemble {
    /// Groups of `group_shots` shots cycling through `assignments` in order.
    pub fn round_robin(
        assignments: &[Vec<usize>],
        group_shots: u64,
        n_groups: usize,
    ) -> Result<MappingEnsemble> {
        if assignments.is_empty() || group_shots == 0 || n_groups == 0 {
            return Err(Error::Validation(
                "mapping ensemble needs at least one assignment, group and shot".into(),
            ));
        }
        let n = assignments[0].len();
        for a in assignments {
            if a.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: a.len(),
                });
            }
            check_bijection(a)?;
        }
        let groups = (0..n_groups)
            .map(|g| MappingGroup {
                assignment: assignments[g % assignments.len()].clone(),
                shots: g as u64 * group_shots..(g as u64 + 1) * group_shots,
            })
            .collect();
        Ok(MappingEnsemble { groups })
    }

    pub fn validate(&self) -> Result<()> {
        let mut next = 0;
        for g in &self.groups {
            check_bijection(&g.assignment)?;
            if g.shots.start != next || g.shots.is_empty() {
                return Err(Error::Validation(format!(
                    "mapping groups must partition the shot range; group {:?} does not start at {next}",
                    g.shots
                )));
            }
            next = g.shots.end;
        }
        Ok(())
    }

    /// Group containing shot `k`.
    pub fn group_at(&self, k: u64) -> Option<&MappingGroup> {
        self.groups.iter().find(|g| g.shots.contains(&k))
    }

    pub fn n_assignments(&self) -> usize {
        let mut a: Vec<&Vec<usize>> = self.groups.iter().map(|g| &g.assignment).collect();
        a.sort();
        a.dedup();
        a.len()
    }
}

/// `size` placements, the identity first and the rest seeded random
/// permutations, cycled over `n_groups` groups of `group_shots` shots.
pub fn randomize_mapping(
    n_qubits: usize,
    size: usize,
    group_shots: u64,
    n_groups: usize,
    seed: u64,
) -> Result<MappingEnsemble> {
    if size == 0 {
        return Err(Error::Validation("ensemble size must be at least 1".into()));
    }
    let identity: Vec<usize> = (0..n_qubits).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![identity.clone()];
    for _ in 1..size {
        let mut a = identity.clone();
        a.shuffle(&mut rng);
        assignments.push(a);
    }
    MappingEnsemble::round_robin(&assignments, group_shots, n_groups)
}

/// All `n` cyclic rotations `q -> (q + r) mod n`, identity first.
pub fn cyclic_ensemble(
    n_qubits: usize,
    group_shots: u64,
    n_groups: usize,
) -> Result<MappingEnsemble> {
    let rotations: Vec<Vec<usize>> = (0..n_qubits)
        .map(|r| (0..n_qubits).map(|q| (q + r) % n_qubits).collect())
        .collect();
    MappingEnsemble::round_robin(&rotations, group_shots, n_groups)
}

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationPolicy {
    /// Each user gets whole feedline groups to themselves.
    Sandboxed,
    /// Users take individual qubits wherever they are free.
    Unrestricted,
}

impl std::str::FromStr for AllocationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sandboxed" => Ok(AllocationPolicy::Sandboxed),
            "unrestricted" => Ok(AllocationPolicy::Unrestricted),
            other => Err(Error::Validation(format!(
                "unknown allocation policy {other:?} (expected sandboxed or unrestricted)"
            ))),
        }
    }
}

/// Qubits grouped by the feedline they are read out on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedlineGrouping {
    pub groups: Vec<Vec<usize>>,
}

impl FeedlineGrouping {
    /// `n_groups` consecutive blocks of `group_size` qubits.
    pub fn uniform(n_groups: usize, group_size: usize) -> FeedlineGrouping {
        FeedlineGrouping {
            groups: (0..n_groups)
                .map(|g| (g * group_size..(g + 1) * group_size).collect())
                .collect(),
        }
    }

    pub fn new(groups: Vec<Vec<usize>>) -> Result<FeedlineGrouping> {
        let g = FeedlineGrouping { groups };
        g.validate()?;
        Ok(g)
    }

    pub fn n_qubits(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Groups must partition `0..n_qubits`.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        let mut seen = vec![false; n];
        for (gi, g) in self.groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::Validation(format!("feedline group {gi} is empty")));
            }
            for &q in g {
                if q >= n || seen[q] {
                    return Err(Error::Validation(format!(
                        "feedline groups must partition qubits 0..{n}; qubit {q} in group {gi} is out of range or repeated"
                    )));
                }
                seen[q] = true;
            }
        }
        Ok(())
    }

    fn group_of(&self, qubit: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.contains(&qubit))
            .expect("validated grouping covers every qubit")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserAllocation {
    pub user: usize,
    pub request: usize,
    pub qubits: Vec<usize>,
    pub groups: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationReport {
    pub policy: AllocationPolicy,
    /// In allocation order (largest request first).
    pub assignments: Vec<UserAllocation>,
    /// `(user, request)` pairs that could not be placed.
    pub rejected: Vec<(usize, usize)>,
    pub used_qubits: usize,
    pub total_qubits: usize,
    pub utilization: f64,
}

impl AllocationReport {
    /// Number of distinct groups touched by any user.
    pub fn groups_touched(&self) -> usize {
        let mut g: Vec<usize> = self
            .assignments
            .iter()
            .flat_map(|a| a.groups.iter().copied())
            .collect();
        g.sort_unstable();
        g.dedup();
        g.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "policy",
            "user",
            "request",
            "group_ids",
            "qubit_ids",
            "utilization",
        ])?;
        let policy = match self.policy {
            AllocationPolicy::Sandboxed => "sandboxed",
            AllocationPolicy::Unrestricted => "unrestricted",
        };
        let join = |v: &[usize]| {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(";")
        };
        let util = format!("{}", self.utilization);
        for a in &self.assignments {
            w.write_record([
                policy,
                &a.user.to_string(),
                &a.request.to_string(),
                &join(&a.groups),
                &join(&a.qubits),
                &util,
            ])?;
        }
        for (user, request) in &self.rejected {
            w.write_record([
                policy,
                &user.to_string(),
                &request.to_string(),
                "",
                "",
                &util,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// First-fit-decreasing allocation of user qubit requests.
///
/// Requests are placed largest first (ties by user index). Sandboxed users
/// get the first free group large enough to hold them and may not span
/// groups; unrestricted users get the lowest-numbered free qubits. Requests
/// that do not fit, including zero-sized ones, are reported as rejected.
pub fn sandbox_allocate(
    requests: &[usize],
    grouping: &FeedlineGrouping,
    policy: AllocationPolicy,
) -> Result<AllocationReport> {
    grouping.validate()?;
    let total = grouping.n_qubits();
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| requests[b].cmp(&requests[a]).then(a.cmp(&b)));

    let mut group_free = vec![true; grouping.groups.len()];
    let mut qubit_free = vec![true; total];
    let mut assignments = Vec::new();
    let mut rejected = Vec::new();
    for user in order {
        let request = requests[user];
        let placed = if request == 0 {
            None
        } else {
            match policy {
                AllocationPolicy::Sandboxed => grouping
                    .groups
                    .iter()
                    .enumerate()
                    .find(|(gi, g)| group_free[*gi] && g.len() >= request)
                    .map(|(gi, g)| {
                        group_free[gi] = false;
                        let mut qubits = g[..request].to_vec();
                        qubits.sort_unstable();
                        (qubits, vec![gi])
                    }),
                AllocationPolicy::Unrestricted => {
                    let free: Vec<usize> = (0..total)
                        .filter(|&q| qubit_free[q])
                        .take(request)
                        .collect();
                    (free.len() == request).then(|| {
                        let mut groups: Vec<usize> =
                            free.iter().map(|&q| grouping.group_of(q)).collect();
                        groups.dedup();
                        (free, groups)
                    })
                }
            }
        };
        match placed {
            Some((qubits, groups)) => {
                for &q in &qubits {
                    qubit_free[q] = false;
                }
                assignments.push(UserAllocation {
                    user,
                    request,
                    qubits,
                    groups,
                });
            }
            None => rejected.push((user, request)),
        }
    }
    let used: usize = assignments.iter().map(|a| a.qubits.len()).sum();
    Ok(AllocationReport {
        policy,
        assignments,
        rejected,
        used_qubits: used,
        total_qubits: total,
        utilization: used as f64 / total as f64,
    })
}

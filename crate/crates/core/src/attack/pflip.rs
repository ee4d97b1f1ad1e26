use std::collections::BTreeMap;
use std::io::Write;

use crate::attack::AttackConfiguration;
use crate::bits::{BitString, Outcome};
use crate::error::{Error, Result};

/// Flip count over trials for one (victim bit-string, attacker qubit) cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlipCount {
    pub flips: u64,
    pub trials: u64,
}

impl FlipCount {
    pub fn pflip(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.flips as f64 / self.trials as f64
        }
    }

    /// `sqrt(p (1 - p) / trials)`
    pub fn stderr(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let p = self.pflip();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Range of P_flip over victim bit-strings for one attacker qubit, with the
/// pooled two-proportion standard error of that difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PflipSpread {
    pub attacker: usize,
    pub max: f64,
    pub min: f64,
    pub pooled_stderr: f64,
}

impl PflipSpread {
    pub fn spread(&self) -> f64 {
        self.max - self.min
    }

    /// Whether the spread exceeds `k` pooled standard errors.
    pub fn significant(&self, k: f64) -> bool {
        self.spread() > k * self.pooled_stderr
    }
}

/// `P(attacker measured 1 | attacker prepared 0, victim prepared V)` for every
/// observed `V` and attacker qubit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PflipTable {
    pub config: String,
    pub attackers: Vec<usize>,
    /// Keyed by (victim bit-string in victim order, attacker qubit).
    pub cells: BTreeMap<(BitString, usize), FlipCount>,
    /// Shots skipped because some attacker qubit was prepared in 1.
    pub skipped: u64,
    /// Diagnostics only: `P(measured 0 | prepared 1)` per (V, attacker) over
    /// the skipped shots.
    pub relaxation: BTreeMap<(BitString, usize), FlipCount>,
}

impl PflipTable {
    pub fn get(&self, victim: &BitString, attacker: usize) -> Option<&FlipCount> {
        self.cells.get(&(victim.clone(), attacker))
    }

    pub fn victims(&self) -> Vec<BitString> {
        let mut v: Vec<BitString> = self.cells.keys().map(|(v, _)| v.clone()).collect();
        v.dedup();
        v
    }

    pub fn qualifying_shots(&self) -> u64 {
        self.attackers
            .first()
            .map(|&a| {
                self.cells
                    .iter()
                    .filter(|((_, q), _)| *q == a)
                    .map(|(_, c)| c.trials)
                    .sum()
            })
            .unwrap_or(0)
    }

    /// Fold another table over the same configuration into this one.
    pub fn merge(&mut self, other: &PflipTable) {
        for (k, c) in &other.cells {
            let e = self.cells.entry(k.clone()).or_default();
            e.flips += c.flips;
            e.trials += c.trials;
        }
        for (k, c) in &other.relaxation {
            let e = self.relaxation.entry(k.clone()).or_default();
            e.flips += c.flips;
            e.trials += c.trials;
        }
        self.skipped += other.skipped;
    }

    pub fn spread(&self, attacker: usize) -> Option<PflipSpread> {
        let counts: Vec<&FlipCount> = self
            .cells
            .iter()
            .filter(|((_, a), _)| *a == attacker)
            .map(|(_, c)| c)
            .collect();
        let hi = counts
            .iter()
            .copied()
            .max_by(|a, b| a.pflip().total_cmp(&b.pflip()))?;
        let lo = counts
            .iter()
            .copied()
            .min_by(|a, b| a.pflip().total_cmp(&b.pflip()))?;
        let pooled = (hi.flips + lo.flips) as f64 / (hi.trials + lo.trials) as f64;
        let se =
            (pooled * (1.0 - pooled) * (1.0 / hi.trials as f64 + 1.0 / lo.trials as f64)).sqrt();
        Some(PflipSpread {
            attacker,
            max: hi.pflip(),
            min: lo.pflip(),
            pooled_stderr: se,
        })
    }

    /// Spread of the attacker qubit whose range is most significant.
    pub fn widest_spread(&self) -> Option<PflipSpread> {
        self.attackers
            .iter()
            .filter_map(|&a| self.spread(a))
            .max_by(|a, b| {
                let za = a.spread() / a.pooled_stderr.max(f64::MIN_POSITIVE);
                let zb = b.spread() / b.pooled_stderr.max(f64::MIN_POSITIVE);
                za.total_cmp(&zb)
            })
    }

    pub const CSV_HEADER: [&'static str; 7] = [
        "config",
        "victim_bitstring",
        "attacker_qubit",
        "flips",
        "trials",
        "pflip",
        "stderr",
    ];

    /// Write rows (no header) in victim-then-attacker order.
    pub fn write_csv_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for ((v, a), c) in &self.cells {
            w.write_record([
                self.config.clone(),
                v.to_string(),
                a.to_string(),
                c.flips.to_string(),
                c.trials.to_string(),
                c.pflip().to_string(),
                c.stderr().to_string(),
            ])?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        self.write_csv_rows(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// True when every attacker qubit was prepared in 0.
pub fn attacker_idle(outcome: &Outcome, config: &AttackConfiguration) -> bool {
    config.attackers.iter().all(|&a| outcome.prep.get(a) == 0)
}

pub fn estimate_pflip<'a, I>(outcomes: I, config: &AttackConfiguration) -> Result<PflipTable>
where
    I: IntoIterator<Item = &'a Outcome>,
{
    let mut table = PflipTable {
        config: config.notation.clone(),
        attackers: config.attackers.clone(),
        ..Default::default()
    };
    for o in outcomes {
        if o.prep.len() != config.n_qubits() || o.measured.len() != config.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: config.n_qubits(),
                found: o.prep.len(),
            });
        }
        let victim = o.prep.select(&config.victims);
        if attacker_idle(o, config) {
            for &a in &config.attackers {
                let c = table.cells.entry((victim.clone(), a)).or_default();
                c.trials += 1;
                c.flips += u64::from(o.measured.get(a));
            }
        } else {
            table.skipped += 1;
            for &a in config.attackers.iter().filter(|&&a| o.prep.get(a) == 1) {
                let c = table.relaxation.entry((victim.clone(), a)).or_default();
                c.trials += 1;
                c.flips += u64::from(o.measured.get(a) == 0);
            }
        }
    }
    if table.cells.is_empty() {
        return Err(Error::NoQualifyingShots);
    }
    Ok(table)
}

//! Versioned plain-text container for fitted models.
//!
//! ```text
//! xtalk-model <kind> <version>
//! <key> <value> <value> ...
//! ```
//!
//! Floats are written in scientific notation with 17 significant digits, which
//! reproduces every `f64` bit-for-bit on parse.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

const MAGIC: &str = "xtalk-model";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDoc {
    pub kind: String,
    pub version: u32,
    entries: BTreeMap<String, Vec<String>>,
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl ModelDoc {
    pub fn new(kind: &str, version: u32) -> Self {
        ModelDoc {
            kind: kind.to_string(),
            version,
            entries: BTreeMap::new(),
        }
    }

    pub fn put_usize(&mut self, key: &str, v: usize) {
        self.entries.insert(key.to_string(), vec![v.to_string()]);
    }

    pub fn put_u64(&mut self, key: &str, v: u64) {
        self.entries.insert(key.to_string(), vec![v.to_string()]);
    }

    pub fn put_floats(&mut self, key: &str, vs: &[f64]) {
        self.entries
            .insert(key.to_string(), vs.iter().map(|&v| format_f64(v)).collect());
    }

    pub fn put_float(&mut self, key: &str, v: f64) {
        self.put_floats(key, &[v]);
    }

    fn raw(&self, key: &str) -> Result<&[String]> {
        self.entries
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Parse(format!("{} model: missing key {key:?}", self.kind)))
    }

    fn single(&self, key: &str) -> Result<&str> {
        match self.raw(key)? {
            [v] => Ok(v),
            vs => Err(Error::Parse(format!(
                "key {key:?} expects one value, found {}",
                vs.len()
            ))),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        let v = self.single(key)?;
        v.parse()
            .map_err(|_| Error::Parse(format!("key {key:?}: bad integer {v:?}")))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        let v = self.single(key)?;
        v.parse()
            .map_err(|_| Error::Parse(format!("key {key:?}: bad integer {v:?}")))
    }

    pub fn get_floats(&self, key: &str, expected_len: usize) -> Result<Vec<f64>> {
        let raw = self.raw(key)?;
        if raw.len() != expected_len {
            return Err(Error::Parse(format!(
                "key {key:?}: expected {expected_len} values, found {}",
                raw.len()
            )));
        }
        raw.iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("key {key:?}: bad float {v:?}")))
            })
            .collect()
    }

    pub fn get_float(&self, key: &str) -> Result<f64> {
        Ok(self.get_floats(key, 1)?[0])
    }

    pub fn render(&self) -> String {
        let mut out = format!("{MAGIC} {} {}\n", self.kind, self.version);
        for (k, vs) in &self.entries {
            out.push_str(k);
            for v in vs {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    /// Parse a document, checking that it holds `kind` at `version`.
    pub fn parse(text: &str, kind: &str, version: u32) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty model document".into()))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        match head.as_slice() {
            [m, k, v] if *m == MAGIC => {
                if *k != kind {
                    return Err(Error::Parse(format!("expected a {kind} model, found {k}")));
                }
                if v.parse::<u32>().ok() != Some(version) {
                    return Err(Error::Parse(format!(
                        "unsupported {kind} model version {v} (expected {version})"
                    )));
                }
            }
            _ => return Err(Error::Parse(format!("not a model document: {header:?}"))),
        }
        let mut entries = BTreeMap::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            let key = parts.next().expect("non-empty line").to_string();
            entries.insert(key, parts.map(str::to_string).collect());
        }
        Ok(ModelDoc {
            kind: kind.to_string(),
            version,
            entries,
        })
    }
}

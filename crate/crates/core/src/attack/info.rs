use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Plug-in estimate of `I(A; V)` in bits from paired observations. Terms are
/// summed in key order, so the result is reproducible to the last bit.
pub fn mutual_information<A, V, I>(pairs: I) -> Result<f64>
where
    A: Ord + Clone,
    V: Ord + Clone,
    I: IntoIterator<Item = (A, V)>,
{
    let mut joint: BTreeMap<(A, V), u64> = BTreeMap::new();
    let mut pa: BTreeMap<A, u64> = BTreeMap::new();
    let mut pv: BTreeMap<V, u64> = BTreeMap::new();
    let mut n = 0u64;
    for (a, v) in pairs {
        *pa.entry(a.clone()).or_default() += 1;
        *pv.entry(v.clone()).or_default() += 1;
        *joint.entry((a, v)).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("mutual information input"));
    }
    let n = n as f64;
    let mi: f64 = joint
        .iter()
        .map(|((a, v), &c)| {
            let pj = c as f64 / n;
            let pm = (pa[a] as f64 / n) * (pv[v] as f64 / n);
            pj * (pj / pm).log2()
        })
        .sum();
    Ok(mi.max(0.0))
}

//! Run-level cost metrics and invariant distances.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::certs::{canonicalize, lit_count, Certificate};
use crate::logic::Clause;

/// Cost of one run: solving time, certificate size proxy, checker time.
/// Times are in seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostVector {
    pub t: f64,
    pub size: u64,
    pub t_chk: f64,
}

/// Weights of the scalarized objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            alpha: 1.0,
            beta: 1e-3,
            gamma: 1.0,
        }
    }
}

/// Literal count of the canonical invariant for SAFE, `(k+1)|X| + k|U|`
/// for a trace of length `k`.
pub fn size_proxy(cert: &Certificate) -> u64 {
    match cert {
        Certificate::Safe(inv) => lit_count(&canonicalize(inv)) as u64,
        Certificate::Unsafe(trace) => {
            let x: usize = trace.states.iter().map(Vec::len).sum();
            let u: usize = trace.inputs.iter().map(Vec::len).sum();
            (x + u) as u64
        }
    }
}

/// `J = α·t + β·size + γ·t_chk`.
pub fn scalarize(cv: &CostVector, w: &ObjectiveWeights) -> f64 {
    w.alpha * cv.t + w.beta * cv.size as f64 + w.gamma * cv.t_chk
}

/// `1 − |A∩B| / |A∪B|` over canonical clause sets; zero when both are empty.
pub fn jaccard_distance(a: &[Clause], b: &[Clause]) -> f64 {
    let a: BTreeSet<Clause> = canonicalize(a).into_iter().collect();
    let b: BTreeSet<Clause> = canonicalize(b).into_iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    let inter = a.intersection(&b).count();
    1.0 - inter as f64 / union as f64
}

/// Median of a non-empty sample; the mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Median pairwise distance over the invariants of SAFE runs only.
/// `None` when fewer than two runs are SAFE.
pub fn seed_instability(invariants: &[Option<Vec<Clause>>]) -> Option<f64> {
    let safe: Vec<&Vec<Clause>> = invariants.iter().flatten().collect();
    let mut d = Vec::new();
    for i in 0..safe.len() {
        for j in i + 1..safe.len() {
            d.push(jaccard_distance(safe[i], safe[j]));
        }
    }
    median(&d)
}

pub const CSV_HEADER: &str = "instance,verdict,t,size,t_chk,J";

/// One row of the metrics report. Commas in the instance name are replaced.
pub fn csv_row(instance: &str, verdict: &str, cv: &CostVector, w: &ObjectiveWeights) -> String {
    format!(
        "{},{},{:.6},{},{:.6},{:.6}",
        instance.replace(',', "_"),
        verdict,
        cv.t,
        cv.size,
        cv.t_chk,
        scalarize(cv, w)
    )
}

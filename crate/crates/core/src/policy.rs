//! Candidate generation, ranking and scheduling at the engine's choice
//! points, plus the offline pairwise trainer.
//!
//! Nothing here touches frames or solvers. The engine hands in read-only
//! views and decides what to commit.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::logic::{Clause, Cube, Lit};

pub const FEATURE_DIM: usize = 10;

/// Feature order shared by the engine, the trainer and model files.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "level",
    "lit_count",
    "recency",
    "requeue_count",
    "chain_depth",
    "last_query_conflicts",
    "push_successes",
    "depth_k",
    "queue_len",
    "bias",
];

pub type FeatureVector = [f64; FEATURE_DIM];

pub const DEFAULT_FAIRNESS_BOUND: u32 = 64;
pub const DEFAULT_CAND_BUDGET: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("feature vector has dimension {got}, model expects {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("obligation queue is empty")]
    EmptyQueue,
    #[error("no labelled training pairs")]
    NoPairs,
    #[error("policy file, line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Choice point kinds: blocker choice, obligation choice, push order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChoicePoint {
    #[serde(rename = "CP1")]
    Blocker,
    #[serde(rename = "CP2")]
    Obligation,
    #[serde(rename = "CP3")]
    Push,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of the feature layout; stored in model files.
pub fn feature_schema_hash() -> String {
    sha256_hex(FEATURE_NAMES.join(",").as_bytes())
}

/// A frozen linear scorer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyModel {
    weights: Vec<f64>,
    pub model_id: String,
    pub trained_on: String,
}

impl PolicyModel {
    pub fn new(weights: Vec<f64>, trained_on: impl Into<String>) -> Self {
        let trained_on = trained_on.into();
        let mut text = String::new();
        for w in &weights {
            text.push_str(&format!("{w:?}\n"));
        }
        text.push_str(&trained_on);
        PolicyModel {
            model_id: sha256_hex(text.as_bytes()),
            weights,
            trained_on,
        }
    }

    pub fn zero() -> Self {
        PolicyModel::new(vec![0.0; FEATURE_DIM], "none")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `θ · ψ`.
    pub fn score(&self, psi: &[f64]) -> Result<f64, PolicyError> {
        if psi.len() != self.weights.len() {
            return Err(PolicyError::DimMismatch {
                expected: self.weights.len(),
                got: psi.len(),
            });
        }
        Ok(dot(&self.weights, psi))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "capdr-policy 1\nmodel_id {}\nfeature_schema {}\ntrained_on {}\n",
            self.model_id,
            feature_schema_hash(),
            self.trained_on
        );
        for w in &self.weights {
            out.push_str(&format!("{w:?}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, PolicyError> {
        let err = |line: usize, msg: &str| PolicyError::Parse {
            line,
            msg: msg.to_string(),
        };
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if lines.first() != Some(&"capdr-policy 1") {
            return Err(err(1, "expected 'capdr-policy 1'"));
        }
        let field = |idx: usize, name: &str| -> Result<String, PolicyError> {
            lines
                .get(idx)
                .and_then(|l| l.strip_prefix(name))
                .map(|v| v.trim().to_string())
                .ok_or_else(|| err(idx + 1, &format!("expected '{name}'")))
        };
        let model_id = field(1, "model_id")?;
        let schema = field(2, "feature_schema")?;
        let trained_on = field(3, "trained_on")?;
        if schema != feature_schema_hash() {
            return Err(err(3, "feature schema does not match this build"));
        }
        let weights = lines[4..]
            .iter()
            .enumerate()
            .map(|(i, l)| l.parse::<f64>().map_err(|_| err(i + 5, "bad weight")))
            .collect::<Result<Vec<f64>, _>>()?;
        if weights.len() != FEATURE_DIM {
            return Err(PolicyError::DimMismatch {
                expected: FEATURE_DIM,
                got: weights.len(),
            });
        }
        let model = PolicyModel::new(weights, trained_on);
        if model.model_id != model_id {
            return Err(err(2, "model_id does not match weights"));
        }
        Ok(model)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How choice points are ordered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ranker {
    /// Deterministic generation order.
    Baseline,
    Linear(PolicyModel),
    /// Control: pseudo-random scores derived from the seed and the candidate.
    Random {
        seed: u64,
    },
}

impl Ranker {
    pub fn score(&self, psi: &FeatureVector, key: &str) -> f64 {
        match self {
            Ranker::Baseline => 0.0,
            Ranker::Linear(m) => m.score(psi).expect("engine features have fixed width"),
            Ranker::Random { seed } => {
                let mut h = Sha256::new();
                h.update(seed.to_le_bytes());
                h.update(key.as_bytes());
                let bytes: [u8; 8] = h.finalize()[..8].try_into().unwrap();
                (u64::from_le_bytes(bytes) >> 11) as f64 / (1u64 << 53) as f64
            }
        }
    }
}

/// CP1 candidates for target `d`: `¬d_core`, single-literal deletions of
/// `d_core` in variable order (at most `budget`), then `¬d`. Duplicates keep
/// their first position, and the empty cube is never proposed.
pub fn generate_blocker_candidates(d: &Cube, core: Option<&Cube>, budget: usize) -> Vec<Clause> {
    let d_core = match core {
        Some(c) if !c.is_empty() => c.clone(),
        _ => d.clone(),
    };
    debug_assert!(d_core.is_subcube_of(d));
    let mut out: Vec<Clause> = vec![d_core.negate()];
    if d_core.len() > 1 {
        for skip in 0..d_core.len().min(budget) {
            let sub: Vec<Lit> = d_core
                .lits()
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != skip)
                .map(|(_, &l)| l)
                .collect();
            let c = Cube::new(sub).negate();
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    let fallback = d.negate();
    if !out.contains(&fallback) {
        out.push(fallback);
    }
    out
}

/// Stable order of candidate indices: score descending, then index.
pub fn rank_indices(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// What the scheduler sees of a pending obligation.
#[derive(Clone, Debug)]
pub struct ObligationView<'a> {
    pub level: usize,
    pub stamp: u64,
    pub cube: &'a Cube,
    /// Selections this obligation has been passed over since it was queued.
    pub skipped: u32,
    pub features: FeatureVector,
}

pub fn obligation_key(level: usize, cube: &Cube) -> String {
    format!("{level}:{cube}")
}

/// CP2: index of the obligation to serve next. Highest score wins, ties go
/// to the lower level, then the older stamp, then the smaller cube. Any
/// obligation skipped `fairness_bound` times or more preempts the ranking;
/// the oldest of those is served.
pub fn select_obligation(
    queue: &[ObligationView<'_>],
    ranker: &Ranker,
    fairness_bound: u32,
) -> Result<usize, PolicyError> {
    if queue.is_empty() {
        return Err(PolicyError::EmptyQueue);
    }
    if let Some((i, _)) = queue
        .iter()
        .enumerate()
        .filter(|(_, o)| o.skipped >= fairness_bound)
        .min_by_key(|(_, o)| o.stamp)
    {
        return Ok(i);
    }
    let scores: Vec<f64> = queue
        .iter()
        .map(|o| ranker.score(&o.features, &obligation_key(o.level, o.cube)))
        .collect();
    let best = (0..queue.len())
        .min_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then(queue[a].level.cmp(&queue[b].level))
                .then(queue[a].stamp.cmp(&queue[b].stamp))
                .then(queue[a].cube.cmp(queue[b].cube))
        })
        .unwrap();
    Ok(best)
}

/// What the push scheduler sees of a learned clause.
#[derive(Clone, Debug)]
pub struct PushView<'a> {
    pub clause: &'a Clause,
    pub level: usize,
    /// Insertion order among learned clauses.
    pub stamp: u64,
    pub features: FeatureVector,
}

pub fn push_key(level: usize, clause: &Clause) -> String {
    format!("{level}:{clause}")
}

/// CP3: a permutation of the given clauses. Level ascending first, then
/// score, then insertion order.
pub fn order_push_candidates(items: &[PushView<'_>], ranker: &Ranker) -> Vec<usize> {
    let scores: Vec<f64> = items
        .iter()
        .map(|p| ranker.score(&p.features, &push_key(p.level, p.clause)))
        .collect();
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by(|&a, &b| {
        items[a]
            .level
            .cmp(&items[b].level)
            .then(scores[b].total_cmp(&scores[a]))
            .then(items[a].stamp.cmp(&items[b].stamp))
    });
    idx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub key: String,
    pub features: FeatureVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostToGo {
    Observed(f64),
    Failed,
}

/// One logged decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingEvent {
    pub cp: ChoicePoint,
    pub context_hash: String,
    pub candidates: Vec<RankedCandidate>,
    pub chosen: usize,
    /// Guard result per candidate; `None` for untried candidates and for
    /// choice points without guards.
    pub guard_outcomes: Vec<Option<bool>>,
    pub cost_to_go: Option<CostToGo>,
    /// Engine step at which the event happened; used to fill `cost_to_go`.
    #[serde(default)]
    pub step: u64,
    #[serde(skip)]
    pub at_secs: f64,
}

/// Penalty assigned to failed alternatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FailPenalty {
    /// `1 + max` observed cost over the corpus.
    Fixed,
    /// `factor · budget_secs`, PAR style.
    Par { factor: f64, budget_secs: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub preferred: FeatureVector,
    pub other: FeatureVector,
}

/// Turn logged events into preference pairs. Costs of the chosen candidate
/// are pooled across events with the same choice point and context, so
/// pairs arise where different runs took different actions. A pair needs a
/// known cost on both sides; the cheaper candidate is preferred.
pub fn label_pairs(events: &[RankingEvent], penalty: FailPenalty) -> Vec<TrainingPair> {
    let j_fail = match penalty {
        FailPenalty::Fixed => {
            let max = events
                .iter()
                .filter_map(|e| match e.cost_to_go {
                    Some(CostToGo::Observed(j)) => Some(j),
                    _ => None,
                })
                .fold(0.0f64, f64::max);
            1.0 + max
        }
        FailPenalty::Par { factor, budget_secs } => factor * budget_secs,
    };
    // (cp, context) -> key -> (features, costs)
    type Pool = BTreeMap<String, (FeatureVector, Vec<f64>)>;
    let mut groups: BTreeMap<(ChoicePoint, String), Pool> = BTreeMap::new();
    for e in events {
        let Some(cost) = e.cost_to_go else { continue };
        let Some(chosen) = e.candidates.get(e.chosen) else {
            continue;
        };
        let j = match cost {
            CostToGo::Observed(j) => j,
            CostToGo::Failed => j_fail,
        };
        groups
            .entry((e.cp, e.context_hash.clone()))
            .or_default()
            .entry(chosen.key.clone())
            .or_insert_with(|| (chosen.features, Vec::new()))
            .1
            .push(j);
    }
    let mut pairs = Vec::new();
    for pool in groups.values() {
        let costs: Vec<(&FeatureVector, f64)> = pool
            .values()
            .map(|(f, js)| (f, js.iter().sum::<f64>() / js.len() as f64))
            .collect();
        for a in 0..costs.len() {
            for b in a + 1..costs.len() {
                let (fa, ja) = costs[a];
                let (fb, jb) = costs[b];
                match ja.partial_cmp(&jb) {
                    Some(Ordering::Less) => pairs.push(TrainingPair {
                        preferred: *fa,
                        other: *fb,
                    }),
                    Some(Ordering::Greater) => pairs.push(TrainingPair {
                        preferred: *fb,
                        other: *fa,
                    }),
                    _ => {}
                }
            }
        }
    }
    pairs
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `Σ log(1 + exp(−θ·(ψ_pref − ψ_other))) + λ‖θ‖²`.
pub fn pairwise_loss(theta: &[f64], pairs: &[TrainingPair], lambda: f64) -> f64 {
    let data: f64 = pairs
        .iter()
        .map(|p| {
            let m = dot(theta, &p.preferred) - dot(theta, &p.other);
            softplus(-m)
        })
        .sum();
    data + lambda * dot(theta, theta)
}

/// Analytic gradient of [`pairwise_loss`].
pub fn pairwise_gradient(theta: &[f64], pairs: &[TrainingPair], lambda: f64) -> Vec<f64> {
    let mut g: Vec<f64> = theta.iter().map(|t| 2.0 * lambda * t).collect();
    for p in pairs {
        let m = dot(theta, &p.preferred) - dot(theta, &p.other);
        let s = sigmoid(-m);
        for (k, gk) in g.iter_mut().enumerate() {
            *gk -= s * (p.preferred[k] - p.other[k]);
        }
    }
    g
}

/// Per-epoch training trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub losses: Vec<f64>,
}

/// Full-batch gradient descent with backtracking line search, so the loss
/// never increases between epochs. The seed only perturbs the start point.
pub fn train(
    pairs: &[TrainingPair],
    lambda: f64,
    epochs: usize,
    seed: u64,
    trained_on: &str,
) -> Result<(PolicyModel, TrainReport), PolicyError> {
    if pairs.is_empty() {
        return Err(PolicyError::NoPairs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta: Vec<f64> = (0..FEATURE_DIM).map(|_| rng.gen_range(-1e-3..1e-3)).collect();
    let mut loss = pairwise_loss(&theta, pairs, lambda);
    let mut losses = vec![loss];
    let mut step = 1.0f64;
    for _ in 0..epochs {
        let g = pairwise_gradient(&theta, pairs, lambda);
        let gg = dot(&g, &g);
        if gg == 0.0 || !gg.is_finite() {
            break;
        }
        let mut accepted = false;
        for _ in 0..80 {
            let trial: Vec<f64> = theta.iter().zip(&g).map(|(t, gk)| t - step * gk).collect();
            let l = pairwise_loss(&trial, pairs, lambda);
            if l.is_finite() && l <= loss - 1e-4 * step * gg {
                theta = trial;
                loss = l;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        losses.push(loss);
        if !accepted {
            break;
        }
        step = (step * 2.0).min(1e6);
    }
    Ok((PolicyModel::new(theta, trained_on), TrainReport { losses }))
}

impl fmt::Display for ChoicePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChoicePoint::Blocker => "CP1",
            ChoicePoint::Obligation => "CP2",
            ChoicePoint::Push => "CP3",
        })
    }
}

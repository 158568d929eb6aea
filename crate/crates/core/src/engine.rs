//! The PDR loop.
//!
//! Frames use a delta encoding: every learned clause carries the highest
//! frame it belongs to, so `F_i = Prop ∪ {C : level(C) ≥ i}` for `i ≥ 1` and
//! `F_0 = Init`. One incremental solver holds `Trans` permanently; `Init`,
//! `Prop`, `¬Prop'` and each learned clause sit behind activation literals
//! that queries assume as needed.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::certs::{
    add_negated_cnf, canonicalize, minimize_invariant, write_witness, Accepted, Certificate, Checker, Trace,
};
use crate::frontend::{AigerCircuit, TransitionSystem};
use crate::logic::{bits_to_string, parse_bits, Clause, Cube, Lit};
use crate::metrics::{scalarize, size_proxy, CostVector, ObjectiveWeights};
use crate::policy::{
    generate_blocker_candidates, obligation_key, order_push_candidates, rank_indices, select_obligation,
    ChoicePoint, CostToGo, FeatureVector, ObligationView, PushView, RankedCandidate, Ranker, RankingEvent,
    DEFAULT_CAND_BUDGET, DEFAULT_FAIRNESS_BOUND,
};
use crate::replay::{RecordKind, ReplayError, ReplayLog, Tape, TapeMode, TOOL_VERSION};
use crate::sat::{SatBackend, SatError, SolveResult, Solver};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    Timeout,
    /// The solver's resource budget ran out.
    Memory,
    CheckerRejected,
    Internal,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("run failed: {0:?}")]
    Fail(FailReason),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("clause was not admitted by the guards")]
    GuardNotEstablished,
    #[error("clauses cannot be inserted into F_0")]
    InsertIntoInit,
}

impl From<SatError> for EngineError {
    fn from(e: SatError) -> Self {
        match e {
            SatError::ResourceBudgetExceeded => EngineError::Fail(FailReason::Memory),
            SatError::UnknownVariable(_) => EngineError::Fail(FailReason::Internal),
        }
    }
}

type Result<T> = std::result::Result<T, EngineError>;

/// Which blockers CP1 may propose.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateMode {
    /// Core-based subcube, single deletions, then the full cube.
    Generalize,
    /// Only the negated target cube.
    FallbackOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub seed: u64,
    pub fairness_bound: u32,
    pub cand_budget: usize,
    pub budget: Option<Duration>,
    pub query_budget: Option<u64>,
    pub conflict_budget: Option<u64>,
    pub minimize: bool,
    pub check_frame_invariants: bool,
    pub candidate_mode: CandidateMode,
    pub ranker: Ranker,
    pub log_events: bool,
    pub objective: ObjectiveWeights,
    /// Free-form settings echoed into the config record.
    pub echo: BTreeMap<String, String>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seed: 0,
            fairness_bound: DEFAULT_FAIRNESS_BOUND,
            cand_budget: DEFAULT_CAND_BUDGET,
            budget: None,
            query_budget: None,
            conflict_budget: None,
            minimize: false,
            check_frame_invariants: false,
            candidate_mode: CandidateMode::Generalize,
            ranker: Ranker::Baseline,
            log_events: false,
            objective: ObjectiveWeights::default(),
            echo: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStats {
    pub queries: u64,
    pub obligations_served: u64,
    /// Blocking episodes, i.e. UNSAT predecessor queries.
    pub blocking_episodes: u64,
    /// Episodes that ended with a committed clause.
    pub episodes_committed: u64,
    pub candidates_tried: u64,
    pub guard_rejections: u64,
    pub push_attempts: u64,
    pub push_successes: u64,
    pub model_extractions: u64,
    pub core_extractions: u64,
    pub invariant_checks: u64,
    pub max_depth: u64,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Safe(Accepted),
    Unsafe(Accepted),
    Fail(FailReason),
}

impl Outcome {
    pub fn verdict(&self) -> &'static str {
        match self {
            Outcome::Safe(_) => "SAFE",
            Outcome::Unsafe(_) => "UNSAFE",
            Outcome::Fail(_) => "FAIL",
        }
    }

    pub fn invariant(&self) -> Option<&[Clause]> {
        match self {
            Outcome::Safe(a) => match a.certificate() {
                Certificate::Safe(inv) => Some(inv),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn trace(&self) -> Option<&Trace> {
        match self {
            Outcome::Unsafe(a) => match a.certificate() {
                Certificate::Unsafe(t) => Some(t),
                _ => None,
            },
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub cost: CostVector,
    pub stats: EngineStats,
    pub events: Vec<RankingEvent>,
    pub log: ReplayLog,
}

/// Answer of the predecessor query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PredResult {
    Sat {
        pred: Cube,
        inputs: Vec<bool>,
    },
    /// The failed target literals, unprimed.
    Unsat {
        core: Cube,
    },
}

/// Proof that a clause passed both insertion guards for a level. Only the
/// engine creates these.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Admission {
    level: usize,
    clause: Clause,
}

impl Admission {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn clause(&self) -> &Clause {
        &self.clause
    }
}

#[derive(Clone, Debug)]
struct Learned {
    clause: Clause,
    level: usize,
    act: Lit,
    push_successes: u32,
    stamp: u64,
    born: u64,
}

#[derive(Clone, Debug)]
struct Node {
    level: usize,
    cube: Cube,
    /// Successor obligation and the input leading to it.
    succ: Option<(usize, Vec<bool>)>,
    stamp: u64,
    queued_at: u64,
    requeues: u32,
    depth: u32,
    skipped: u32,
}

fn cube_json(c: &Cube) -> Value {
    json!(c.to_dimacs())
}

fn cube_from_json(v: &Value) -> Cube {
    Cube::new(
        v.as_array()
            .map(|a| {
                a.iter()
                    .filter_map(|x| x.as_i64().and_then(Lit::from_dimacs))
                    .collect()
            })
            .unwrap_or_default(),
    )
}

fn short_hash(text: &str) -> String {
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

/// SHA-256 of the canonical AIGER text.
pub fn instance_digest(circuit: &AigerCircuit) -> String {
    hex::encode(Sha256::digest(circuit.to_aag().as_bytes()))
}

pub struct Pdr<'a> {
    circuit: &'a AigerCircuit,
    sys: &'a TransitionSystem,
    checker: &'a Checker,
    cfg: EngineConfig,
    solver: Solver,
    act_init: Lit,
    act_prop: Lit,
    act_bad_now: Lit,
    act_bad_next: Lit,
    reset: Vec<bool>,
    learned: Vec<Learned>,
    index: BTreeMap<Clause, usize>,
    k: usize,
    nodes: Vec<Node>,
    queue: Vec<usize>,
    tape: Tape,
    stats: EngineStats,
    events: Vec<RankingEvent>,
    step: u64,
    next_stamp: u64,
    last_conflicts: u64,
    started: Instant,
    wall_budget: bool,
}

fn run_query(
    solver: &mut Solver,
    stats: &mut EngineStats,
    last_conflicts: &mut u64,
    query_budget: Option<u64>,
    assumptions: &[Lit],
) -> Result<SolveResult> {
    if query_budget.is_some_and(|b| stats.queries >= b) {
        return Err(EngineError::Fail(FailReason::Timeout));
    }
    stats.queries += 1;
    let before = solver.stats().num_conflicts;
    let r = solver.solve(assumptions)?;
    *last_conflicts = solver.stats().num_conflicts - before;
    Ok(r)
}

impl<'a> Pdr<'a> {
    /// Engine for `sys`, which must encode `circuit`. The checker is used
    /// only to gate the final answer.
    pub fn new(
        circuit: &'a AigerCircuit,
        sys: &'a TransitionSystem,
        checker: &'a Checker,
        cfg: EngineConfig,
    ) -> Self {
        Self::with_tape(circuit, sys, checker, cfg, Tape::recorder())
    }

    /// Engine driven by a replaying tape. Wall-clock budgets are ignored
    /// since timing does not replay.
    pub fn with_tape(
        circuit: &'a AigerCircuit,
        sys: &'a TransitionSystem,
        checker: &'a Checker,
        cfg: EngineConfig,
        tape: Tape,
    ) -> Self {
        let mut solver = Solver::new(cfg.seed);
        solver.set_conflict_budget(cfg.conflict_budget);
        solver.new_vars(sys.num_vars());
        for c in &sys.trans_cnf {
            solver.add_clause(c.lits()).expect("encoding is in range");
        }
        let act_init = solver.new_var().pos();
        let act_prop = solver.new_var().pos();
        let act_bad_now = solver.new_var().pos();
        let act_bad_next = solver.new_var().pos();
        for c in &sys.init_cnf {
            let mut lits = vec![!act_init];
            lits.extend_from_slice(c.lits());
            solver.add_clause(&lits).unwrap();
        }
        for c in &sys.prop_clause_form {
            let mut lits = vec![!act_prop];
            lits.extend_from_slice(c.lits());
            solver.add_clause(&lits).unwrap();
        }
        add_negated_cnf(&mut solver, &sys.prop_clause_form, Some(act_bad_now), |l| l);
        add_negated_cnf(&mut solver, &sys.prop_clause_form, Some(act_bad_next), |l| {
            sys.prime(l)
        });
        let wall_budget = tape.mode() == TapeMode::Record;
        Pdr {
            circuit,
            sys,
            checker,
            reset: sys.reset_state(),
            cfg,
            solver,
            act_init,
            act_prop,
            act_bad_now,
            act_bad_next,
            learned: Vec::new(),
            index: BTreeMap::new(),
            k: 0,
            nodes: Vec::new(),
            queue: Vec::new(),
            tape,
            stats: EngineStats::default(),
            events: Vec::new(),
            step: 0,
            next_stamp: 0,
            last_conflicts: 0,
            started: Instant::now(),
            wall_budget,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    /// Open the next frame; `F_{k+1}` starts as `Prop`.
    pub fn extend(&mut self) {
        self.k += 1;
        self.stats.max_depth = self.stats.max_depth.max(self.k as u64);
    }

    fn query(&mut self, assumptions: &[Lit]) -> Result<SolveResult> {
        run_query(
            &mut self.solver,
            &mut self.stats,
            &mut self.last_conflicts,
            self.cfg.query_budget,
            assumptions,
        )
    }

    fn frame_assumptions(&self, i: usize) -> Vec<Lit> {
        if i == 0 {
            return vec![self.act_init];
        }
        let mut a = vec![self.act_prop];
        a.extend(self.learned.iter().filter(|l| l.level >= i).map(|l| l.act));
        a
    }

    /// Clauses of `F_i` (`i ≥ 1`): `Prop` plus learned clauses of level ≥ i.
    /// `F_0` is `Init`.
    pub fn frame(&self, i: usize) -> Vec<Clause> {
        if i == 0 {
            return self.sys.init_cnf.clone();
        }
        let mut out = self.sys.prop_clause_form.clone();
        out.extend(
            self.learned
                .iter()
                .filter(|l| l.level >= i)
                .map(|l| l.clause.clone()),
        );
        out
    }

    /// Learned clauses with their levels, in insertion order.
    pub fn learned_clauses(&self) -> Vec<(Clause, usize)> {
        self.learned.iter().map(|l| (l.clause.clone(), l.level)).collect()
    }

    fn intersects_init(&self, cube: &Cube) -> bool {
        // Init is a single state, so Init ∧ cube is SAT iff the cube agrees
        // with the reset values everywhere.
        cube.lits().iter().all(|l| l.eval(&self.reset))
    }

    /// `Init ∧ ¬Prop`. Returns the initial state when it is bad.
    pub fn check_length0(&mut self) -> Result<Option<Trace>> {
        let assumptions = [self.act_init, self.act_bad_now];
        let x_vars = self.sys.x_vars.clone();
        let payload = self.tape.artifact(RecordKind::CtiCube, || {
            let r = run_query(
                &mut self.solver,
                &mut self.stats,
                &mut self.last_conflicts,
                self.cfg.query_budget,
                &assumptions,
            )?;
            Ok::<_, EngineError>(match r {
                SolveResult::Sat(m) => {
                    self.stats.model_extractions += 1;
                    let x: Vec<bool> = x_vars.iter().map(|v| m[v.index()]).collect();
                    json!({"length0": true, "sat": true, "state": bits_to_string(&x), "conflicts": self.last_conflicts})
                }
                SolveResult::Unsat(_) => {
                    json!({"length0": true, "sat": false, "conflicts": self.last_conflicts})
                }
            })
        })?;
        self.last_conflicts = payload["conflicts"].as_u64().unwrap_or(0);
        if payload["sat"].as_bool() != Some(true) {
            return Ok(None);
        }
        let x0 = payload["state"]
            .as_str()
            .and_then(parse_bits)
            .ok_or(EngineError::Fail(FailReason::Internal))?;
        Ok(Some(Trace {
            states: vec![x0],
            inputs: vec![],
        }))
    }

    /// `F_k ∧ Trans ∧ ¬Prop'`. Returns the bad successor state.
    pub fn cti_query(&mut self) -> Result<Option<Cube>> {
        let mut assumptions = self.frame_assumptions(self.k);
        assumptions.push(self.act_bad_next);
        let xp = self.sys.xp_vars.clone();
        let k = self.k;
        let payload = self.tape.artifact(RecordKind::CtiCube, || {
            let r = run_query(
                &mut self.solver,
                &mut self.stats,
                &mut self.last_conflicts,
                self.cfg.query_budget,
                &assumptions,
            )?;
            Ok::<_, EngineError>(match r {
                SolveResult::Sat(m) => {
                    self.stats.model_extractions += 1;
                    let bits: Vec<bool> = xp.iter().map(|v| m[v.index()]).collect();
                    json!({"k": k, "sat": true, "cube": cube_json(&Cube::from_state(&bits)), "conflicts": self.last_conflicts})
                }
                SolveResult::Unsat(_) => {
                    json!({"k": k, "sat": false, "conflicts": self.last_conflicts})
                }
            })
        })?;
        self.last_conflicts = payload["conflicts"].as_u64().unwrap_or(0);
        if payload["sat"].as_bool() != Some(true) {
            return Ok(None);
        }
        Ok(Some(cube_from_json(&payload["cube"])))
    }

    /// `F_{i-1} ∧ Trans ∧ d'` with `d'` as assumptions. Requires `i ≥ 1`.
    pub fn predecessor_query(&mut self, i: usize, d: &Cube) -> Result<PredResult> {
        assert!(i >= 1, "predecessor query needs a level above F_0");
        let mut assumptions = self.frame_assumptions(i - 1);
        let primed: Vec<Lit> = d.lits().iter().map(|&l| self.sys.prime(l)).collect();
        assumptions.extend_from_slice(&primed);
        let x_vars = self.sys.x_vars.clone();
        let u_vars = self.sys.u_vars.clone();
        let sys = self.sys;
        let mut stash: Option<Cube> = None;
        let payload = self.tape.artifact(RecordKind::PredCube, || {
            let r = run_query(
                &mut self.solver,
                &mut self.stats,
                &mut self.last_conflicts,
                self.cfg.query_budget,
                &assumptions,
            )?;
            Ok::<_, EngineError>(match r {
                SolveResult::Sat(m) => {
                    self.stats.model_extractions += 1;
                    let x: Vec<bool> = x_vars.iter().map(|v| m[v.index()]).collect();
                    let u: Vec<bool> = u_vars.iter().map(|v| m[v.index()]).collect();
                    json!({"level": i, "sat": true, "cube": cube_json(&Cube::from_state(&x)), "inputs": bits_to_string(&u), "conflicts": self.last_conflicts})
                }
                SolveResult::Unsat(failed) => {
                    self.stats.core_extractions += 1;
                    stash = Some(Cube::new(
                        failed.iter().filter_map(|&l| sys.unprime(l)).collect(),
                    ));
                    json!({"level": i, "sat": false, "conflicts": self.last_conflicts})
                }
            })
        })?;
        self.last_conflicts = payload["conflicts"].as_u64().unwrap_or(0);
        if payload["sat"].as_bool() == Some(true) {
            let pred = cube_from_json(&payload["cube"]);
            let inputs = payload["inputs"]
                .as_str()
                .and_then(parse_bits)
                .ok_or(EngineError::Fail(FailReason::Internal))?;
            return Ok(PredResult::Sat { pred, inputs });
        }
        let core = self.tape.artifact(RecordKind::UnsatCore, || {
            Ok::<_, EngineError>(json!({"core": cube_json(stash.as_ref().expect("computed above"))}))
        })?;
        Ok(PredResult::Unsat {
            core: cube_from_json(&core["core"]),
        })
    }

    /// `UNSAT(Init ∧ ¬C)`.
    pub fn guard_initiation(&mut self, c: &Clause) -> Result<bool> {
        let mut a = vec![self.act_init];
        a.extend(c.lits().iter().map(|&l| !l));
        Ok(!self.query(&a)?.is_sat())
    }

    /// `UNSAT(F_{i-1} ∧ Trans ∧ ¬C')`. Requires `i ≥ 1`.
    pub fn guard_relative(&mut self, i: usize, c: &Clause) -> Result<bool> {
        assert!(i >= 1);
        let mut a = self.frame_assumptions(i - 1);
        a.extend(c.lits().iter().map(|&l| !self.sys.prime(l)));
        Ok(!self.query(&a)?.is_sat())
    }

    /// Run both guards; an admission is the only way to insert a clause.
    pub fn admit(&mut self, i: usize, c: &Clause) -> Result<Option<Admission>> {
        if i == 0 || c.lits().iter().any(|l| !self.sys.is_state_var(l.var())) {
            return Ok(None);
        }
        let init = self.guard_initiation(c)?;
        let rel = if init {
            Some(self.guard_relative(i, c)?)
        } else {
            None
        };
        self.tape.note(
            RecordKind::GuardOutcome,
            json!({"clause": c.to_dimacs(), "level": i, "init": init, "rel": rel}),
        )?;
        if init && rel == Some(true) {
            Ok(Some(Admission {
                level: i,
                clause: c.clone().canonical(),
            }))
        } else {
            self.stats.guard_rejections += 1;
            Ok(None)
        }
    }

    /// Add an admitted clause to `F_1..F_i`. Re-inserting an existing clause
    /// only raises its level.
    pub fn insert_blocker(&mut self, adm: Admission) -> Result<()> {
        if adm.level == 0 {
            return Err(EngineError::InsertIntoInit);
        }
        if let Some(&idx) = self.index.get(&adm.clause) {
            let l = &mut self.learned[idx];
            l.level = l.level.max(adm.level);
        } else {
            let act = self.solver.new_var().pos();
            let mut lits = vec![!act];
            lits.extend_from_slice(adm.clause.lits());
            self.solver.add_clause(&lits)?;
            self.index.insert(adm.clause.clone(), self.learned.len());
            self.learned.push(Learned {
                clause: adm.clause,
                level: adm.level,
                act,
                push_successes: 0,
                stamp: self.learned.len() as u64,
                born: self.step,
            });
        }
        self.after_commit()
    }

    /// Try to move `C` from `F_i` to `F_{i+1}`.
    pub fn push_clause(&mut self, c: &Clause, i: usize) -> Result<bool> {
        let key = c.clone().canonical();
        let Some(&idx) = self.index.get(&key) else {
            return Ok(false);
        };
        if i == 0 || self.learned[idx].level < i {
            return Ok(false);
        }
        if self.learned[idx].level > i {
            return Ok(true);
        }
        self.stats.push_attempts += 1;
        let mut a = self.frame_assumptions(i);
        a.extend(key.lits().iter().map(|&l| !self.sys.prime(l)));
        let ok = !self.query(&a)?.is_sat();
        self.tape.note(
            RecordKind::GuardOutcome,
            json!({"push": key.to_dimacs(), "level": i, "ok": ok}),
        )?;
        if ok {
            let l = &mut self.learned[idx];
            l.level = i + 1;
            l.push_successes += 1;
            self.stats.push_successes += 1;
            self.after_commit()?;
        }
        Ok(ok)
    }

    /// The first `F_i` (`1 ≤ i ≤ k`) equal to `F_{i+1}` after
    /// canonicalization, as an invariant candidate.
    pub fn fixpoint_check(&self) -> Option<Vec<Clause>> {
        (1..=self.k).find_map(|i| {
            let a = canonicalize(&self.frame(i));
            (a == canonicalize(&self.frame(i + 1))).then_some(a)
        })
    }

    fn after_commit(&mut self) -> Result<()> {
        if self.cfg.check_frame_invariants && !self.frame_invariants_hold() {
            return Err(EngineError::Fail(FailReason::Internal));
        }
        Ok(())
    }

    fn fresh_checker_solver(&self) -> Solver {
        let mut s = Solver::new(0);
        s.new_vars(self.sys.num_vars());
        s
    }

    fn implies(&self, lhs: &[Clause], trans: bool, rhs: &[Clause], primed: bool) -> bool {
        let mut s = self.fresh_checker_solver();
        for c in lhs {
            s.add_clause(c.lits()).unwrap();
        }
        if trans {
            for c in &self.sys.trans_cnf {
                s.add_clause(c.lits()).unwrap();
            }
        }
        if primed {
            add_negated_cnf(&mut s, rhs, None, |l| self.sys.prime(l));
        } else {
            add_negated_cnf(&mut s, rhs, None, |l| l);
        }
        !s.solve(&[]).unwrap().is_sat()
    }

    /// Frame invariants checked on fresh solvers: `F_0 = Init`, monotone
    /// frames, every frame above 0 inside `Prop`, and consecution for the
    /// closed frames below `k`.
    pub fn frame_invariants_hold(&mut self) -> bool {
        self.stats.invariant_checks += 1;
        if self.learned.iter().any(|l| l.level == 0) {
            return false;
        }
        let top = self.k + 1;
        let frames: Vec<Vec<Clause>> = (0..=top + 1).map(|i| self.frame(i)).collect();
        for i in 0..=self.k {
            if !self.implies(&frames[i], false, &frames[i + 1], false) {
                return false;
            }
        }
        for f in frames.iter().take(top + 1).skip(1) {
            if !self.implies(f, false, &self.sys.prop_clause_form, false) {
                return false;
            }
        }
        for i in 0..self.k {
            if !self.implies(&frames[i], true, &frames[i + 1], true) {
                return false;
            }
        }
        true
    }

    fn new_node(&mut self, level: usize, cube: Cube, succ: Option<(usize, Vec<bool>)>, depth: u32) -> usize {
        let stamp = self.next_stamp;
        self.next_stamp += 1;
        self.nodes.push(Node {
            level,
            cube,
            succ,
            stamp,
            queued_at: self.step,
            requeues: 0,
            depth,
            skipped: 0,
        });
        self.nodes.len() - 1
    }

    fn enqueue(&mut self, node: usize) {
        let n = &self.nodes[node];
        let dup = self
            .queue
            .iter()
            .any(|&q| self.nodes[q].level == n.level && self.nodes[q].cube == n.cube);
        if !dup {
            self.queue.push(node);
        }
    }

    fn requeue(&mut self, node: usize) {
        let stamp = self.next_stamp;
        self.next_stamp += 1;
        let n = &mut self.nodes[node];
        n.stamp = stamp;
        n.queued_at = self.step;
        n.requeues += 1;
        n.skipped = 0;
        self.queue.push(node);
    }

    /// Follow successor links from an initial obligation to the bad state.
    pub fn reconstruct_trace(&self, start: usize) -> Trace {
        let nx = self.sys.num_latches();
        let mut states = vec![self.nodes[start].cube.to_state(nx)];
        let mut inputs = Vec::new();
        let mut cur = start;
        while let Some((next, u)) = &self.nodes[cur].succ {
            inputs.push(u.clone());
            states.push(self.nodes[*next].cube.to_state(nx));
            cur = *next;
        }
        Trace { states, inputs }
    }

    fn features(
        &self,
        level: usize,
        lits: usize,
        since: u64,
        requeues: u32,
        depth: u32,
        pushes: u32,
    ) -> FeatureVector {
        [
            level as f64,
            lits as f64,
            self.step.saturating_sub(since) as f64,
            requeues as f64,
            depth as f64,
            self.last_conflicts as f64,
            pushes as f64,
            self.k as f64,
            self.queue.len() as f64,
            1.0,
        ]
    }

    fn log_event(
        &mut self,
        cp: ChoicePoint,
        context: String,
        candidates: Vec<RankedCandidate>,
        chosen: usize,
        guard_outcomes: Vec<Option<bool>>,
    ) {
        if !self.cfg.log_events {
            return;
        }
        self.events.push(RankingEvent {
            cp,
            context_hash: context,
            candidates,
            chosen,
            guard_outcomes,
            cost_to_go: None,
            step: self.step,
            at_secs: self.started.elapsed().as_secs_f64(),
        });
    }

    fn check_budget(&self) -> Result<()> {
        if self.wall_budget {
            if let Some(b) = self.cfg.budget {
                if self.started.elapsed() >= b {
                    return Err(EngineError::Fail(FailReason::Timeout));
                }
            }
        }
        Ok(())
    }

    /// CP2: pick and remove the next obligation.
    fn pop_obligation(&mut self) -> Result<usize> {
        let views: Vec<ObligationView> = self
            .queue
            .iter()
            .map(|&q| {
                let n = &self.nodes[q];
                ObligationView {
                    level: n.level,
                    stamp: n.stamp,
                    cube: &n.cube,
                    skipped: n.skipped,
                    features: self.features(n.level, n.cube.len(), n.queued_at, n.requeues, n.depth, 0),
                }
            })
            .collect();
        let pick = select_obligation(&views, &self.cfg.ranker, self.cfg.fairness_bound)
            .map_err(|_| EngineError::Fail(FailReason::Internal))?;
        let logged = self.cfg.log_events.then(|| {
            let mut keys: Vec<String> = views.iter().map(|v| obligation_key(v.level, v.cube)).collect();
            let cands: Vec<RankedCandidate> = views
                .iter()
                .zip(&keys)
                .map(|(v, k)| RankedCandidate {
                    key: k.clone(),
                    features: v.features,
                })
                .collect();
            keys.sort();
            (short_hash(&format!("CP2|{}", keys.join(";"))), cands)
        });
        drop(views);
        if let Some((ctx, cands)) = logged {
            let n = cands.len();
            self.log_event(ChoicePoint::Obligation, ctx, cands, pick, vec![None; n]);
        }
        let node = self.queue.remove(pick);
        for &q in &self.queue {
            self.nodes[q].skipped += 1;
        }
        let n = &self.nodes[node];
        self.tape.note(
            RecordKind::ActionAttempt,
            json!({"cp": "CP2", "level": n.level, "cube": cube_json(&n.cube)}),
        )?;
        Ok(node)
    }

    /// CP1: commit a blocker for obligation `node` whose predecessor query
    /// was UNSAT with the given core.
    fn block(&mut self, node: usize, core: Cube) -> Result<()> {
        self.stats.blocking_episodes += 1;
        let (i, d, requeues, depth, queued_at) = {
            let n = &self.nodes[node];
            (n.level, n.cube.clone(), n.requeues, n.depth, n.queued_at)
        };
        let mut d_core = core;
        if !d_core.is_subcube_of(&d) || d_core.is_empty() {
            d_core = d.clone();
        }
        if self.intersects_init(&d_core) {
            // The core alone does not exclude the reset state; put back a
            // literal of d that does.
            let fix = d
                .lits()
                .iter()
                .copied()
                .find(|l| !l.eval(&self.reset))
                .expect("d is not the reset state");
            let mut lits = d_core.lits().to_vec();
            lits.push(fix);
            d_core = Cube::new(lits);
        }
        let candidates = match self.cfg.candidate_mode {
            CandidateMode::Generalize => generate_blocker_candidates(&d, Some(&d_core), self.cfg.cand_budget),
            CandidateMode::FallbackOnly => vec![d.negate()],
        };
        let feats: Vec<FeatureVector> = candidates
            .iter()
            .map(|c| {
                let pushes = self
                    .index
                    .get(&c.clone().canonical())
                    .map_or(0, |&j| self.learned[j].push_successes);
                self.features(i, c.len(), queued_at, requeues, depth, pushes)
            })
            .collect();
        let keys: Vec<String> = candidates.iter().map(|c| c.to_string()).collect();
        let scores: Vec<f64> = feats
            .iter()
            .zip(&keys)
            .map(|(f, k)| self.cfg.ranker.score(f, k))
            .collect();
        let order = rank_indices(&scores);
        let context = short_hash(&format!("CP1|{i}|{d}"));
        self.tape
            .note(RecordKind::ContextHash, json!({"cp": "CP1", "hash": context}))?;
        self.tape.note(
            RecordKind::CandidateSet,
            json!({"level": i, "target": cube_json(&d), "candidates": order.iter().map(|&j| candidates[j].to_dimacs()).collect::<Vec<_>>()}),
        )?;
        let mut outcomes: Vec<Option<bool>> = vec![None; candidates.len()];
        for &j in &order {
            self.stats.candidates_tried += 1;
            self.tape
                .note(RecordKind::ActionAttempt, json!({"cp": "CP1", "index": j}))?;
            let adm = self.admit(i, &candidates[j])?;
            outcomes[j] = Some(adm.is_some());
            if let Some(adm) = adm {
                self.insert_blocker(adm)?;
                self.stats.episodes_committed += 1;
                let cands = keys
                    .into_iter()
                    .zip(feats)
                    .map(|(key, features)| RankedCandidate { key, features })
                    .collect();
                self.log_event(ChoicePoint::Blocker, context, cands, j, outcomes);
                return Ok(());
            }
        }
        // The negated target always passes both guards here, so reaching
        // this point means the engine state is inconsistent.
        Err(EngineError::Fail(FailReason::Internal))
    }

    /// CP3: push every clause of `F_1..F_k` as far as it goes, level by level.
    fn push_phase(&mut self) -> Result<()> {
        for i in 1..=self.k {
            let at_level: Vec<usize> = (0..self.learned.len())
                .filter(|&j| self.learned[j].level == i)
                .collect();
            if at_level.is_empty() {
                continue;
            }
            let feats: Vec<FeatureVector> = at_level
                .iter()
                .map(|&j| {
                    let l = &self.learned[j];
                    self.features(i, l.clause.len(), l.born, 0, 0, l.push_successes)
                })
                .collect();
            let order = {
                let views: Vec<PushView> = at_level
                    .iter()
                    .zip(&feats)
                    .map(|(&j, f)| PushView {
                        clause: &self.learned[j].clause,
                        level: i,
                        stamp: self.learned[j].stamp,
                        features: *f,
                    })
                    .collect();
                order_push_candidates(&views, &self.cfg.ranker)
            };
            let mut outcomes = vec![None; at_level.len()];
            for &o in &order {
                let clause = self.learned[at_level[o]].clause.clone();
                self.tape.note(
                    RecordKind::ActionAttempt,
                    json!({"cp": "CP3", "level": i, "clause": clause.to_dimacs()}),
                )?;
                outcomes[o] = Some(self.push_clause(&clause, i)?);
            }
            if self.cfg.log_events {
                let mut keys: Vec<String> = at_level
                    .iter()
                    .map(|&j| crate::policy::push_key(i, &self.learned[j].clause))
                    .collect();
                let cands = keys
                    .iter()
                    .zip(&feats)
                    .map(|(k, f)| RankedCandidate {
                        key: k.clone(),
                        features: *f,
                    })
                    .collect();
                keys.sort();
                let ctx = short_hash(&format!("CP3|{}", keys.join(";")));
                self.log_event(ChoicePoint::Push, ctx, cands, order[0], outcomes);
            }
        }
        Ok(())
    }

    fn config_payload(&self) -> Value {
        json!({
            "tool_version": TOOL_VERSION,
            "instance": instance_digest(self.circuit),
            "latches": self.sys.num_latches(),
            "inputs": self.sys.num_inputs(),
            "config": serde_json::to_value(&self.cfg).expect("config serializes"),
        })
    }

    fn certify(&mut self, cert: Certificate) -> Result<Accepted> {
        self.checker
            .certify(cert)
            .map_err(|_| EngineError::Fail(FailReason::CheckerRejected))
    }

    fn search(&mut self) -> Result<Accepted> {
        self.tape.note(RecordKind::Config, self.config_payload())?;
        self.tape.note(RecordKind::Seed, json!({"seed": self.cfg.seed}))?;
        self.check_budget()?;
        if let Some(trace) = self.check_length0()? {
            return self.certify(Certificate::Unsafe(trace));
        }
        loop {
            self.check_budget()?;
            if let Some(d) = self.cti_query()? {
                let root = self.new_node(self.k + 1, d, None, 0);
                self.enqueue(root);
                while !self.queue.is_empty() {
                    self.check_budget()?;
                    self.step += 1;
                    self.stats.obligations_served += 1;
                    let node = self.pop_obligation()?;
                    let (i, d) = (self.nodes[node].level, self.nodes[node].cube.clone());
                    if i == 0 || self.intersects_init(&d) {
                        let trace = self.reconstruct_trace(node);
                        return self.certify(Certificate::Unsafe(trace));
                    }
                    match self.predecessor_query(i, &d)? {
                        PredResult::Sat { pred, inputs } => {
                            let depth = self.nodes[node].depth + 1;
                            self.requeue(node);
                            let p = self.new_node(i - 1, pred, Some((node, inputs)), depth);
                            self.enqueue(p);
                        }
                        PredResult::Unsat { core } => self.block(node, core)?,
                    }
                }
            } else {
                self.step += 1;
                self.push_phase()?;
                if let Some(inv) = self.fixpoint_check() {
                    let inv = if self.cfg.minimize {
                        minimize_invariant(self.checker, &inv)
                            .map_err(|_| EngineError::Fail(FailReason::CheckerRejected))?
                    } else {
                        inv
                    };
                    return self.certify(Certificate::Safe(inv));
                }
                self.extend();
            }
        }
    }

    /// Run to a checker-accepted answer or a failure.
    pub fn run(self) -> std::result::Result<RunResult, ReplayError> {
        self.run_with_tape().map(|(r, _)| r).map_err(|(e, _, _)| e)
    }

    /// Like [`Pdr::run`], also handing back the tape. On divergence the
    /// error comes with the tape position and the statistics so far.
    #[allow(clippy::result_large_err)]
    pub fn run_with_tape(
        mut self,
    ) -> std::result::Result<(RunResult, Tape), (ReplayError, usize, EngineStats)> {
        let result = self.search();
        let t_total = self.started.elapsed();
        let outcome = match result {
            Ok(acc) => match acc.certificate() {
                Certificate::Safe(_) => Outcome::Safe(acc),
                Certificate::Unsafe(_) => Outcome::Unsafe(acc),
            },
            Err(EngineError::Fail(r)) => Outcome::Fail(r),
            Err(EngineError::Replay(e)) => return Err((e, self.tape.position(), self.stats)),
            Err(_) => Outcome::Fail(FailReason::Internal),
        };
        let cost = match &outcome {
            Outcome::Safe(a) | Outcome::Unsafe(a) => {
                let t_chk = a.verdict().checker_time;
                CostVector {
                    t: t_total.saturating_sub(t_chk).as_secs_f64(),
                    size: size_proxy(a.certificate()),
                    t_chk: t_chk.as_secs_f64(),
                }
            }
            Outcome::Fail(_) => CostVector {
                t: t_total.as_secs_f64(),
                size: 0,
                t_chk: 0.0,
            },
        };
        if self.tape.mode() == TapeMode::Record {
            self.tape
                .note(RecordKind::Certificate, certificate_payload(&outcome, &cost))
                .expect("recording never diverges");
        }
        let mut events = std::mem::take(&mut self.events);
        let failed = matches!(outcome, Outcome::Fail(_));
        for e in &mut events {
            e.cost_to_go = Some(if failed {
                CostToGo::Failed
            } else {
                let remaining = CostVector {
                    t: (t_total.as_secs_f64() - e.at_secs).max(0.0),
                    ..cost
                };
                CostToGo::Observed(scalarize(&remaining, &self.cfg.objective))
            });
        }
        let stats = self.stats;
        let mut tape = self.tape;
        let log = if tape.mode() == TapeMode::Record {
            let log = tape.clone().into_log();
            tape = Tape::recorder();
            log
        } else {
            ReplayLog::default()
        };
        Ok((
            RunResult {
                outcome,
                cost,
                stats,
                events,
                log,
            },
            tape,
        ))
    }
}

/// Payload of the closing certificate record.
pub fn certificate_payload(outcome: &Outcome, cost: &CostVector) -> Value {
    match outcome {
        Outcome::Safe(a) => {
            let inv = match a.certificate() {
                Certificate::Safe(inv) => canonicalize(inv),
                _ => unreachable!(),
            };
            json!({
                "verdict": "SAFE",
                "invariant": inv.iter().map(Clause::to_dimacs).collect::<Vec<_>>(),
                "size": cost.size,
                "t": cost.t,
                "t_chk": cost.t_chk,
            })
        }
        Outcome::Unsafe(a) => {
            let witness = match a.certificate() {
                Certificate::Unsafe(t) => write_witness(t),
                _ => unreachable!(),
            };
            json!({
                "verdict": "UNSAFE",
                "witness": witness,
                "size": cost.size,
                "t": cost.t,
                "t_chk": cost.t_chk,
            })
        }
        Outcome::Fail(r) => json!({"verdict": "FAIL", "reason": r, "size": 0, "t": cost.t, "t_chk": 0.0}),
    }
}

/// Convenience wrapper: encode nothing twice, run once with a fresh tape.
pub fn solve(
    circuit: &AigerCircuit,
    sys: &TransitionSystem,
    checker: &Checker,
    cfg: EngineConfig,
) -> RunResult {
    Pdr::new(circuit, sys, checker, cfg)
        .run()
        .expect("recording never diverges")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load;

    const TOY_A_BAD: &str = "aag 1 0 1 1 0\n2 2 0\n3\n";
    const TOY_A_SAFE: &str = "aag 1 0 1 1 0\n2 2 0\n2\n";
    const TOY_B: &str = "aag 6 0 2 0 4 1\n2 3\n4 11\n12\n6 4 3\n8 5 2\n10 7 9\n12 4 2\n";
    const CONST_BAD: &str = "aag 0 0 0 1 0\n1\n";
    const CONST_SAFE: &str = "aag 1 0 1 1 0\n2 3 0\n0\n";

    fn clause(lits: &[i64]) -> Clause {
        Clause::new(lits.iter().map(|&v| Lit::from_dimacs(v).unwrap()).collect())
    }

    fn cube(lits: &[i64]) -> Cube {
        Cube::new(lits.iter().map(|&v| Lit::from_dimacs(v).unwrap()).collect())
    }

    fn with_engine<R>(text: &str, f: impl FnOnce(&mut Pdr) -> R) -> R {
        let (c, s) = load(text).unwrap();
        let ck = Checker::from_aiger_text(text).unwrap();
        let cfg = EngineConfig {
            check_frame_invariants: true,
            ..EngineConfig::default()
        };
        let mut p = Pdr::new(&c, &s, &ck, cfg);
        f(&mut p)
    }

    fn run(text: &str) -> RunResult {
        let (c, s) = load(text).unwrap();
        let ck = Checker::from_aiger_text(text).unwrap();
        solve(
            &c,
            &s,
            &ck,
            EngineConfig {
                check_frame_invariants: true,
                ..Default::default()
            },
        )
    }

    #[test]
    fn length0_examples() {
        let t = with_engine(TOY_A_BAD, |p| p.check_length0().unwrap()).unwrap();
        assert_eq!(t.states, vec![vec![false]]);
        assert!(with_engine(TOY_B, |p| p.check_length0().unwrap()).is_none());
        let t = with_engine(CONST_BAD, |p| p.check_length0().unwrap()).unwrap();
        assert_eq!(t.len(), 0);
    }

    #[test]
    fn toy_b_queries() {
        // state vector [b0, b1]; 11 is bad, 10 (b1=1, b0=0) precedes it
        with_engine(TOY_B, |p| {
            assert_eq!(p.cti_query().unwrap(), None);
            p.extend();
            let d = p.cti_query().unwrap().unwrap();
            assert_eq!(d, cube(&[1, 2]));
            match p.predecessor_query(1, &d).unwrap() {
                PredResult::Unsat { core } => assert!(core.is_subcube_of(&d)),
                other => panic!("{other:?}"),
            }
            let c = clause(&[-1, -2]);
            assert!(p.guard_initiation(&c).unwrap());
            assert!(p.guard_relative(1, &c).unwrap());
            assert!(!p.guard_initiation(&clause(&[1])).unwrap());
            let adm = p.admit(1, &c).unwrap().unwrap();
            p.insert_blocker(adm.clone()).unwrap();
            p.insert_blocker(adm).unwrap();
            assert_eq!(p.learned_clauses(), vec![(c.clone(), 1)]);
            assert!(p.frame_invariants_hold());
            // F_1 now admits 10; its successor is 11
            let d2 = p.cti_query().unwrap().unwrap();
            assert_eq!(d2, cube(&[1, 2]));
            let pred = cube(&[-1, 2]);
            p.extend();
            match p.predecessor_query(2, &d2).unwrap() {
                PredResult::Sat { pred: got, inputs } => {
                    assert_eq!(got, pred);
                    assert!(inputs.is_empty());
                }
                other => panic!("{other:?}"),
            }
        });
    }

    #[test]
    fn unreachable_target_gives_core() {
        // x' = 0 always: x = 1 has no predecessor
        let text = "aag 1 0 1 0 0 1\n2 0 0\n2\n";
        with_engine(text, |p| match p.predecessor_query(1, &cube(&[1])).unwrap() {
            PredResult::Unsat { core } => assert_eq!(core, cube(&[1])),
            other => panic!("{other:?}"),
        });
    }

    #[test]
    fn insertion_rules() {
        with_engine(TOY_B, |p| {
            assert!(p.admit(0, &clause(&[-1, -2])).unwrap().is_none());
            let bad = Admission {
                level: 0,
                clause: clause(&[-1]),
            };
            assert_eq!(p.insert_blocker(bad), Err(EngineError::InsertIntoInit));
            // not relatively inductive: 00 -> 01 violates ¬b0
            assert!(p.admit(1, &clause(&[-1])).unwrap().is_none());
            assert!(p.learned_clauses().is_empty());
        });
    }

    #[test]
    fn push_examples() {
        with_engine(TOY_B, |p| {
            p.extend();
            let c = clause(&[-1, -2]);
            let adm = p.admit(1, &c).unwrap().unwrap();
            p.insert_blocker(adm).unwrap();
            // F_1 still admits 10 whose successor is 11
            assert!(!p.push_clause(&c, 1).unwrap());
            // block 10 in F_1 as well, then 11 pushes
            let c2 = clause(&[1, -2]);
            let adm = p.admit(1, &c2).unwrap().unwrap();
            p.insert_blocker(adm).unwrap();
            assert!(p.push_clause(&c, 1).unwrap());
            assert!(p.push_clause(&c, 1).unwrap());
            assert_eq!(p.learned_clauses().iter().filter(|(x, _)| *x == c).count(), 1);
        });
    }

    #[test]
    fn fixpoint_examples() {
        with_engine(CONST_SAFE, |p| {
            assert_eq!(p.fixpoint_check(), None);
            p.extend();
            assert_eq!(p.fixpoint_check(), Some(vec![]));
        });
        with_engine(TOY_B, |p| {
            p.extend();
            // blocks 10; differs from Prop, so F_1 and F_2 differ
            let adm = p.admit(1, &clause(&[1, -2])).unwrap().unwrap();
            p.insert_blocker(adm).unwrap();
            assert_eq!(p.fixpoint_check(), None);
        });
    }

    #[test]
    fn run_examples() {
        let r = run(TOY_A_SAFE);
        assert_eq!(r.outcome.verdict(), "SAFE");
        assert!(r.outcome.invariant().unwrap().contains(&clause(&[-1])));

        let r = run(TOY_B);
        assert_eq!(r.outcome.verdict(), "UNSAFE");
        let t = r.outcome.trace().unwrap();
        assert_eq!(
            t.states,
            vec![
                vec![false, false],
                vec![true, false],
                vec![false, true],
                vec![true, true]
            ]
        );

        let r = run(TOY_A_BAD);
        assert_eq!(r.outcome.trace().unwrap().len(), 0);
        let r = run(CONST_BAD);
        assert_eq!(r.outcome.verdict(), "UNSAFE");
    }

    #[test]
    fn zero_budget_fails() {
        let (c, s) = load(TOY_B).unwrap();
        let ck = Checker::from_aiger_text(TOY_B).unwrap();
        let r = solve(
            &c,
            &s,
            &ck,
            EngineConfig {
                budget: Some(Duration::ZERO),
                ..Default::default()
            },
        );
        assert!(matches!(r.outcome, Outcome::Fail(FailReason::Timeout)));
        let r = solve(
            &c,
            &s,
            &ck,
            EngineConfig {
                query_budget: Some(1),
                ..Default::default()
            },
        );
        assert!(matches!(r.outcome, Outcome::Fail(FailReason::Timeout)));
    }
}

//! Incremental CDCL solver with assumptions and failed-assumption cores.
//!
//! Two-watched-literal propagation, first-UIP learning, VSIDS branching with
//! phase saving and Luby restarts. All tie-breaking derives from the seed, so
//! an identical sequence of clauses and queries reproduces identical models
//! and cores.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::logic::{Lit, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SatError {
    #[error("literal {0} references an unallocated variable")]
    UnknownVariable(i64),
    #[error("conflict budget exhausted")]
    ResourceBudgetExceeded,
}

/// Answer to a satisfiability query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    /// A total assignment, indexed by variable.
    Sat(Vec<bool>),
    /// A subset of the assumptions that is already inconsistent with the
    /// clause store. Not necessarily minimal.
    Unsat(Vec<Lit>),
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub num_queries: u64,
    pub num_conflicts: u64,
    pub cumulative_decisions: u64,
    pub num_propagations: u64,
}

/// The contract the engine and checker need from a SAT backend.
pub trait SatBackend {
    fn new_var(&mut self) -> Var;
    fn num_vars(&self) -> usize;
    fn add_clause(&mut self, lits: &[Lit]) -> Result<(), SatError>;
    fn solve(&mut self, assumptions: &[Lit]) -> Result<SolveResult, SatError>;
    fn stats(&self) -> SolverStats;
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Value {
    True,
    False,
    Undef,
}

#[derive(Clone, Debug)]
struct StoredClause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    lbd: u32,
}

/// Binary max-heap over variables keyed by activity, smaller index first on
/// ties.
#[derive(Clone, Debug, Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn better(act: &[f64], a: u32, b: u32) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn grow(&mut self, n: usize) {
        self.pos.resize(n, None);
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize].is_some()
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v as usize] = Some(i);
        self.sift_up(i, act);
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.sift_up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.pos[self.heap[0] as usize] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if !Self::better(act, v, p) {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && Self::better(act, self.heap[r], self.heap[l]) {
                r
            } else {
                l
            };
            if !Self::better(act, self.heap[child], v) {
                break;
            }
            self.heap[i] = self.heap[child];
            self.pos[self.heap[i] as usize] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

const RESTART_BASE: f64 = 100.0;
const VAR_DECAY: f64 = 0.95;

/// Built-in incremental CDCL solver.
#[derive(Clone, Debug)]
pub struct Solver {
    clauses: Vec<StoredClause>,
    watches: Vec<Vec<usize>>,
    assigns: Vec<Value>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    phase: Vec<bool>,
    seen: Vec<bool>,
    order: VarHeap,
    ok: bool,
    rng: ChaCha8Rng,
    stats: SolverStats,
    conflict_budget: Option<u64>,
    num_learnts: usize,
    max_learnts: usize,
    seed: u64,
}

enum SearchOutcome {
    Sat,
    Unsat(Vec<Lit>),
    Restart,
}

impl Solver {
    pub fn new(seed: u64) -> Self {
        Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            phase: Vec::new(),
            seen: Vec::new(),
            order: VarHeap::default(),
            ok: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
            stats: SolverStats::default(),
            conflict_budget: None,
            num_learnts: 0,
            max_learnts: 2000,
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Limit the number of conflicts per `solve` call.
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }

    /// Allocate `n` fresh variables and return the first one.
    pub fn new_vars(&mut self, n: usize) -> Var {
        let first = Var(self.assigns.len() as u32);
        for _ in 0..n {
            self.new_var();
        }
        first
    }

    fn value(&self, lit: Lit) -> Value {
        match self.assigns[lit.var().index()] {
            Value::Undef => Value::Undef,
            Value::True if lit.is_positive() => Value::True,
            Value::False if !lit.is_positive() => Value::True,
            _ => Value::False,
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn check_lit(&self, lit: Lit) -> Result<(), SatError> {
        if lit.var().index() >= self.assigns.len() {
            Err(SatError::UnknownVariable(lit.to_dimacs()))
        } else {
            Ok(())
        }
    }

    fn enqueue(&mut self, lit: Lit, reason: Option<usize>) {
        let v = lit.var().index();
        debug_assert_eq!(self.assigns[v], Value::Undef);
        self.assigns[v] = if lit.is_positive() {
            Value::True
        } else {
            Value::False
        };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool, lbd: u32) -> usize {
        let cr = self.clauses.len();
        self.watches[lits[0].code()].push(cr);
        self.watches[lits[1].code()].push(cr);
        self.clauses.push(StoredClause {
            lits,
            learnt,
            deleted: false,
            lbd,
        });
        if learnt {
            self.num_learnts += 1;
        }
        cr
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level];
        for i in (lim..self.trail.len()).rev() {
            let lit = self.trail[i];
            let v = lit.var().index();
            self.phase[v] = lit.is_positive();
            self.assigns[v] = Value::Undef;
            self.reason[v] = None;
            self.order.insert(v as u32, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level);
        self.qhead = self.trail.len();
    }

    /// Unit propagation; returns a conflicting clause if one arises.
    fn propagate(&mut self) -> Option<usize> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.num_propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let cr = ws[i];
                i += 1;
                if self.clauses[cr].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cr].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cr].lits[0];
                if self.value(first) == Value::True {
                    ws[j] = cr;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..self.clauses[cr].lits.len() {
                    let cand = self.clauses[cr].lits[k];
                    if self.value(cand) != Value::False {
                        self.clauses[cr].lits.swap(1, k);
                        self.watches[cand.code()].push(cr);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = cr;
                j += 1;
                if self.value(first) == Value::False {
                    conflict = Some(cr);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(cr));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                break;
            }
        }
        conflict
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.bumped(v as u32, &self.activity);
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit::new(Var(0), true)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let current = self.decision_level() as u32;
        loop {
            let start = usize::from(p.is_some());
            let lits = self.clauses[confl].lits.clone();
            for &q in &lits[start..] {
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump(v);
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var().index()] {
                    break;
                }
            }
            let lit = self.trail[idx];
            p = Some(lit);
            self.seen[lit.var().index()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[lit.var().index()].expect("implied literal has a reason");
        }
        learnt[0] = !p.unwrap();
        for l in &learnt[1..] {
            self.seen[l.var().index()] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var().index()] as usize;
        }
        (learnt, bt)
    }

    /// Collect the assumptions responsible for `failed` (an assumption that
    /// is currently false).
    fn analyze_final(&mut self, failed: Lit) -> Vec<Lit> {
        let mut core = vec![failed];
        let v0 = failed.var().index();
        if self.level[v0] == 0 {
            return core;
        }
        self.seen[v0] = true;
        let start = self.trail_lim[0];
        for i in (start..self.trail.len()).rev() {
            let lit = self.trail[i];
            let v = lit.var().index();
            if !self.seen[v] {
                continue;
            }
            match self.reason[v] {
                // every decision below the search phase is an assumption
                None => core.push(lit),
                Some(cr) => {
                    for k in 1..self.clauses[cr].lits.len() {
                        let q = self.clauses[cr].lits[k];
                        if self.level[q.var().index()] > 0 {
                            self.seen[q.var().index()] = true;
                        }
                    }
                }
            }
            self.seen[v] = false;
        }
        self.seen[v0] = false;
        core
    }

    fn lbd(&self, lits: &[Lit]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|l| self.level[l.var().index()]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    /// Drop half of the long, high-LBD learnt clauses. Only called at level 0.
    fn reduce_db(&mut self) {
        debug_assert_eq!(self.decision_level(), 0);
        let mut cands: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| {
                let c = &self.clauses[i];
                c.learnt && !c.deleted && c.lbd > 2
            })
            .collect();
        cands.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a], &self.clauses[b]);
            (cb.lbd, cb.lits.len(), a).cmp(&(ca.lbd, ca.lits.len(), b))
        });
        for &cr in cands.iter().take(cands.len() / 2) {
            self.clauses[cr].deleted = true;
            self.clauses[cr].lits.clear();
            self.num_learnts -= 1;
        }
        for r in self.reason.iter_mut() {
            if let Some(cr) = *r {
                if self.clauses[cr].deleted {
                    *r = None;
                }
            }
        }
        for ws in self.watches.iter_mut() {
            ws.retain(|&cr| !self.clauses[cr].deleted);
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.assigns[v as usize] == Value::Undef {
                return Some(Lit::new(Var(v), self.phase[v as usize]));
            }
        }
        None
    }

    fn search(
        &mut self,
        assumptions: &[Lit],
        limit: u64,
        spent: &mut u64,
    ) -> Result<SearchOutcome, SatError> {
        let mut conflicts_here = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.num_conflicts += 1;
                conflicts_here += 1;
                *spent += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Ok(SearchOutcome::Unsat(Vec::new()));
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let lbd = self.lbd(&learnt);
                    let first = learnt[0];
                    let cr = self.attach(learnt, true, lbd);
                    self.enqueue(first, Some(cr));
                }
                self.var_inc /= VAR_DECAY;
                if let Some(budget) = self.conflict_budget {
                    if *spent >= budget {
                        self.cancel_until(0);
                        return Err(SatError::ResourceBudgetExceeded);
                    }
                }
            } else {
                if conflicts_here >= limit {
                    self.cancel_until(0);
                    return Ok(SearchOutcome::Restart);
                }
                let mut next = None;
                while self.decision_level() < assumptions.len() {
                    let a = assumptions[self.decision_level()];
                    match self.value(a) {
                        Value::True => self.trail_lim.push(self.trail.len()),
                        Value::False => {
                            let core = self.analyze_final(a);
                            return Ok(SearchOutcome::Unsat(core));
                        }
                        Value::Undef => {
                            next = Some(a);
                            break;
                        }
                    }
                }
                let lit = match next {
                    Some(l) => l,
                    None => {
                        self.stats.cumulative_decisions += 1;
                        match self.pick_branch() {
                            Some(l) => l,
                            None => return Ok(SearchOutcome::Sat),
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(lit, None);
            }
        }
    }

    /// Write the clause store plus the assumptions (as unit clauses) in
    /// DIMACS CNF, for cross-checking a query with an external solver.
    pub fn to_dimacs(&self, assumptions: &[Lit]) -> String {
        let mut units: Vec<Lit> = self
            .trail
            .iter()
            .take(self.trail_lim.first().copied().unwrap_or(self.trail.len()))
            .copied()
            .collect();
        units.extend_from_slice(assumptions);
        let live: Vec<&StoredClause> = self.clauses.iter().filter(|c| !c.deleted && !c.learnt).collect();
        let mut out = String::new();
        let nclauses = live.len() + units.len() + usize::from(!self.ok);
        writeln!(out, "p cnf {} {}", self.assigns.len(), nclauses).unwrap();
        if !self.ok {
            out.push_str("0\n");
        }
        for l in units {
            writeln!(out, "{} 0", l.to_dimacs()).unwrap();
        }
        for c in live {
            for l in &c.lits {
                write!(out, "{} ", l.to_dimacs()).unwrap();
            }
            out.push_str("0\n");
        }
        out
    }
}

impl SatBackend for Solver {
    fn new_var(&mut self) -> Var {
        let v = Var(self.assigns.len() as u32);
        self.assigns.push(Value::Undef);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(self.rng.gen::<f64>() * 1e-3);
        self.phase.push(self.rng.gen::<bool>());
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.order.grow(self.assigns.len());
        self.order.insert(v.0, &self.activity);
        v
    }

    fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    fn add_clause(&mut self, lits: &[Lit]) -> Result<(), SatError> {
        for &l in lits {
            self.check_lit(l)?;
        }
        if !self.ok {
            return Ok(());
        }
        debug_assert_eq!(self.decision_level(), 0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return Ok(());
        }
        if c.iter().any(|&l| self.value(l) == Value::True) {
            return Ok(());
        }
        c.retain(|&l| self.value(l) != Value::False);
        match c.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(c, false, 0);
            }
        }
        Ok(())
    }

    fn solve(&mut self, assumptions: &[Lit]) -> Result<SolveResult, SatError> {
        for &l in assumptions {
            self.check_lit(l)?;
        }
        self.stats.num_queries += 1;
        if !self.ok {
            return Ok(SolveResult::Unsat(Vec::new()));
        }
        let mut spent = 0u64;
        let mut restarts = 0u64;
        let result = loop {
            if self.num_learnts >= self.max_learnts + self.trail.len() {
                self.reduce_db();
                self.max_learnts += self.max_learnts / 10;
            }
            let limit = (luby(2.0, restarts) * RESTART_BASE) as u64;
            match self.search(assumptions, limit, &mut spent)? {
                SearchOutcome::Restart => restarts += 1,
                SearchOutcome::Sat => {
                    let model = self.assigns.iter().map(|&v| v == Value::True).collect();
                    break SolveResult::Sat(model);
                }
                SearchOutcome::Unsat(core) => break SolveResult::Unsat(core),
            }
        };
        self.cancel_until(0);
        Ok(result)
    }

    fn stats(&self) -> SolverStats {
        self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: i64) -> Lit {
        Lit::from_dimacs(v).unwrap()
    }

    fn solver_with(nvars: usize, clauses: &[&[i64]]) -> Solver {
        let mut s = Solver::new(0);
        s.new_vars(nvars);
        for c in clauses {
            let c: Vec<Lit> = c.iter().map(|&v| lit(v)).collect();
            s.add_clause(&c).unwrap();
        }
        s
    }

    #[test]
    fn unit_clause_is_sat_with_model() {
        let mut s = solver_with(1, &[&[1]]);
        assert_eq!(s.solve(&[]).unwrap(), SolveResult::Sat(vec![true]));
    }

    #[test]
    fn contradictory_units_are_unsat() {
        let mut s = solver_with(1, &[&[1], &[-1]]);
        assert!(!s.solve(&[]).unwrap().is_sat());
    }

    #[test]
    fn assumption_forces_other_disjunct() {
        let mut s = solver_with(2, &[&[1, 2]]);
        match s.solve(&[lit(-1)]).unwrap() {
            SolveResult::Sat(m) => assert!(!m[0] && m[1]),
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn failed_assumptions_form_a_core() {
        let mut s = solver_with(2, &[&[-1, -2]]);
        let SolveResult::Unsat(core) = s.solve(&[lit(1), lit(2)]).unwrap() else {
            panic!("expected UNSAT");
        };
        assert!(!core.is_empty());
        assert!(core.iter().all(|l| [lit(1), lit(2)].contains(l)));
        let mut check = solver_with(2, &[&[-1, -2]]);
        for &l in &core {
            check.add_clause(&[l]).unwrap();
        }
        assert!(!check.solve(&[]).unwrap().is_sat());
    }

    #[test]
    fn empty_store_with_assumption() {
        let mut s = solver_with(1, &[]);
        assert_eq!(s.solve(&[lit(1)]).unwrap(), SolveResult::Sat(vec![true]));
    }

    #[test]
    fn assumption_against_unit_fails_alone() {
        let mut s = solver_with(1, &[&[1]]);
        assert_eq!(s.solve(&[lit(-1)]).unwrap(), SolveResult::Unsat(vec![lit(-1)]));
    }

    #[test]
    fn unknown_variable_is_rejected() {
        let mut s = solver_with(1, &[]);
        assert_eq!(s.add_clause(&[lit(3)]), Err(SatError::UnknownVariable(3)));
        assert_eq!(s.solve(&[lit(-2)]), Err(SatError::UnknownVariable(-2)));
    }

    #[test]
    fn incremental_queries_keep_working() {
        // pigeonhole 3 into 2 is UNSAT; before the last clause it is SAT
        let p = |i: i64, h: i64| i * 2 + h + 1;
        let mut s = Solver::new(3);
        s.new_vars(6);
        for i in 0..3 {
            s.add_clause(&[lit(p(i, 0)), lit(p(i, 1))]).unwrap();
        }
        assert!(s.solve(&[]).unwrap().is_sat());
        for h in 0..2 {
            for i in 0..3 {
                for j in i + 1..3 {
                    s.add_clause(&[lit(-p(i, h)), lit(-p(j, h))]).unwrap();
                }
            }
        }
        assert!(!s.solve(&[]).unwrap().is_sat());
    }

    #[test]
    fn conflict_budget_is_reported() {
        let p = |i: i64, h: i64| i * 5 + h + 1;
        let mut s = Solver::new(1);
        s.new_vars(30);
        for i in 0..6 {
            let c: Vec<Lit> = (0..5).map(|h| lit(p(i, h))).collect();
            s.add_clause(&c).unwrap();
        }
        for h in 0..5 {
            for i in 0..6 {
                for j in i + 1..6 {
                    s.add_clause(&[lit(-p(i, h)), lit(-p(j, h))]).unwrap();
                }
            }
        }
        s.set_conflict_budget(Some(3));
        assert_eq!(s.solve(&[]), Err(SatError::ResourceBudgetExceeded));
        s.set_conflict_budget(None);
        assert!(!s.solve(&[]).unwrap().is_sat());
    }

    #[test]
    fn dimacs_export_lists_store_and_assumptions() {
        let s = solver_with(2, &[&[1, 2]]);
        assert_eq!(s.to_dimacs(&[lit(-1)]), "p cnf 2 2\n-1 0\n1 2 0\n");
    }

    #[test]
    fn luby_sequence_prefix() {
        let seq: Vec<f64> = (0..7).map(|i| luby(2.0, i)).collect();
        assert_eq!(seq, vec![1.0, 1.0, 2.0, 1.0, 1.0, 2.0, 4.0]);
    }
}

//! Certificates and their independent checkers.
//!
//! The checker is the trusted part of the tool. It parses and encodes the
//! circuit itself, answers every SAFE query on a fresh solver and validates
//! UNSAFE traces by simulation. Nothing from the engine is reused.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{self, AigerCircuit, FrontendError, TransitionSystem};
use crate::logic::{bits_to_string, parse_bits, Clause, Lit, Var};
use crate::sat::{SatBackend, Solver};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error("trace has {states} states but {inputs} input vectors")]
    MalformedTrace { states: usize, inputs: usize },
    #[error("invariant is not accepted by the checker")]
    PreconditionViolated,
    #[error("certificate file, line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A finite execution `x_0, u_0, x_1, …, u_{k-1}, x_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub states: Vec<Vec<bool>>,
    pub inputs: Vec<Vec<bool>>,
}

impl Trace {
    /// Number of transitions `k`.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// Inductive invariant over the latch variables.
    Safe(Vec<Clause>),
    /// Counterexample trace.
    Unsafe(Trace),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailingCondition {
    /// `Init ∧ ¬Inv` is satisfiable.
    Init,
    /// `Inv ∧ Trans ∧ ¬Inv'` is satisfiable.
    Step,
    /// `Inv ∧ ¬Prop` is satisfiable.
    Prop,
    /// The invariant mentions a variable that is not a latch.
    OutOfScope,
    TraceInit,
    TraceStep(usize),
    TraceFinal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckVerdict {
    pub accepted: bool,
    pub failing_condition: Option<FailingCondition>,
    pub checker_time: Duration,
}

impl CheckVerdict {
    fn new(failing: Option<FailingCondition>, started: Instant) -> Self {
        CheckVerdict {
            accepted: failing.is_none(),
            failing_condition: failing,
            checker_time: started.elapsed(),
        }
    }
}

/// A certificate together with the verdict that accepted it. Only the
/// checker can construct one.
#[derive(Clone, Debug)]
pub struct Accepted {
    certificate: Certificate,
    verdict: CheckVerdict,
}

impl Accepted {
    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn verdict(&self) -> &CheckVerdict {
        &self.verdict
    }

    pub fn into_certificate(self) -> Certificate {
        self.certificate
    }
}

/// Sort literals within each clause, drop repeated literals and duplicate
/// clauses. The result is sorted, so equal sets compare equal.
pub fn canonicalize(inv: &[Clause]) -> Vec<Clause> {
    let mut out: Vec<Clause> = inv.iter().cloned().map(Clause::canonical).collect();
    out.sort();
    out.dedup();
    out
}

/// `Σ |C|` over the clauses as given.
pub fn lit_count(inv: &[Clause]) -> usize {
    inv.iter().map(Clause::len).sum()
}

/// Conjoin `¬(∧ clauses)` with fresh selector variables: one selector per
/// clause implying the clause is falsified, plus a clause asking for some
/// selector. Literals are mapped through `map` first.
pub(crate) fn add_negated_cnf<S: SatBackend>(
    solver: &mut S,
    clauses: &[Clause],
    guard: Option<Lit>,
    map: impl Fn(Lit) -> Lit,
) {
    let mut any: Vec<Lit> = Vec::with_capacity(clauses.len() + 1);
    if let Some(g) = guard {
        any.push(!g);
    }
    for c in clauses {
        let t = solver.new_var();
        for &l in c.lits() {
            solver.add_clause(&[t.neg(), !map(l)]).expect("fresh selector");
        }
        any.push(t.pos());
    }
    solver.add_clause(&any).expect("fresh selector");
}

/// The independent checker for one circuit.
#[derive(Clone, Debug)]
pub struct Checker {
    circuit: AigerCircuit,
    sys: TransitionSystem,
}

impl Checker {
    /// Parse and encode the circuit from its original text.
    pub fn from_aiger_text(text: &str) -> Result<Self, CertError> {
        let (circuit, sys) = frontend::load(text)?;
        Ok(Checker { circuit, sys })
    }

    /// Re-encode a parsed circuit.
    pub fn from_circuit(circuit: &AigerCircuit) -> Result<Self, CertError> {
        let sys = frontend::encode(circuit)?;
        Ok(Checker {
            circuit: circuit.clone(),
            sys,
        })
    }

    pub fn circuit(&self) -> &AigerCircuit {
        &self.circuit
    }

    pub fn system(&self) -> &TransitionSystem {
        &self.sys
    }

    fn fresh_solver(&self) -> Solver {
        let mut s = Solver::new(0);
        s.new_vars(self.sys.num_vars());
        s
    }

    fn add_all(solver: &mut Solver, clauses: &[Clause], map: impl Fn(Lit) -> Lit) {
        for c in clauses {
            let lits: Vec<Lit> = c.lits().iter().map(|&l| map(l)).collect();
            solver.add_clause(&lits).expect("variables allocated");
        }
    }

    fn sat(solver: &mut Solver) -> bool {
        solver.solve(&[]).expect("checker runs without budget").is_sat()
    }

    /// `Init ∧ ¬Inv`, `Inv ∧ Trans ∧ ¬Inv'` and `Inv ∧ ¬Prop` must all be
    /// UNSAT, each on its own solver.
    pub fn check_safe(&self, inv: &[Clause]) -> CheckVerdict {
        let started = Instant::now();
        let nx = self.sys.num_latches();
        if inv.iter().flat_map(|c| c.lits()).any(|l| l.var().index() >= nx) {
            return CheckVerdict::new(Some(FailingCondition::OutOfScope), started);
        }
        let id = |l: Lit| l;

        let mut s = self.fresh_solver();
        Self::add_all(&mut s, &self.sys.init_cnf, id);
        add_negated_cnf(&mut s, inv, None, id);
        if Self::sat(&mut s) {
            return CheckVerdict::new(Some(FailingCondition::Init), started);
        }

        let mut s = self.fresh_solver();
        Self::add_all(&mut s, inv, id);
        Self::add_all(&mut s, &self.sys.trans_cnf, id);
        add_negated_cnf(&mut s, inv, None, |l| self.sys.prime(l));
        if Self::sat(&mut s) {
            return CheckVerdict::new(Some(FailingCondition::Step), started);
        }

        let mut s = self.fresh_solver();
        Self::add_all(&mut s, inv, id);
        add_negated_cnf(&mut s, &self.sys.prop_clause_form, None, id);
        if Self::sat(&mut s) {
            return CheckVerdict::new(Some(FailingCondition::Prop), started);
        }
        CheckVerdict::new(None, started)
    }

    /// Replay the trace on the circuit: reset state first, every step by
    /// simulation, bad at the end.
    pub fn check_unsafe(&self, trace: &Trace) -> Result<CheckVerdict, CertError> {
        let started = Instant::now();
        if trace.states.len() != trace.inputs.len() + 1 {
            return Err(CertError::MalformedTrace {
                states: trace.states.len(),
                inputs: trace.inputs.len(),
            });
        }
        let nx = self.circuit.num_latches();
        let nu = self.circuit.num_inputs;
        for s in &trace.states {
            if s.len() != nx {
                return Err(FrontendError::WidthMismatch {
                    expected: nx,
                    got: s.len(),
                }
                .into());
            }
        }
        for u in &trace.inputs {
            if u.len() != nu {
                return Err(FrontendError::WidthMismatch {
                    expected: nu,
                    got: u.len(),
                }
                .into());
            }
        }
        if trace.states[0] != self.circuit.reset_state() {
            return Ok(CheckVerdict::new(Some(FailingCondition::TraceInit), started));
        }
        for (j, u) in trace.inputs.iter().enumerate() {
            let (next, _) = self.circuit.simulate_step(&trace.states[j], u)?;
            if next != trace.states[j + 1] {
                return Ok(CheckVerdict::new(Some(FailingCondition::TraceStep(j)), started));
            }
        }
        let last = trace.states.last().expect("at least one state");
        if !self.circuit.is_bad(last)? {
            return Ok(CheckVerdict::new(Some(FailingCondition::TraceFinal), started));
        }
        Ok(CheckVerdict::new(None, started))
    }

    /// Run the matching checker and wrap the certificate on acceptance.
    pub fn certify(&self, certificate: Certificate) -> Result<Accepted, CheckVerdict> {
        let verdict = match &certificate {
            Certificate::Safe(inv) => self.check_safe(inv),
            Certificate::Unsafe(trace) => match self.check_unsafe(trace) {
                Ok(v) => v,
                Err(_) => CheckVerdict {
                    accepted: false,
                    failing_condition: Some(FailingCondition::TraceInit),
                    checker_time: Duration::ZERO,
                },
            },
        };
        if verdict.accepted {
            Ok(Accepted { certificate, verdict })
        } else {
            Err(verdict)
        }
    }

    /// Rebuild a full trace from an AIGER-style witness: the initial state
    /// and one input vector per step, successor states by simulation.
    pub fn trace_from_witness(&self, text: &str) -> Result<Trace, CertError> {
        let (x0, inputs) = parse_witness(text)?;
        let nx = self.circuit.num_latches();
        if x0.len() != nx {
            return Err(FrontendError::WidthMismatch {
                expected: nx,
                got: x0.len(),
            }
            .into());
        }
        let mut states = vec![x0];
        for u in &inputs {
            let (next, _) = self.circuit.simulate_step(states.last().unwrap(), u)?;
            states.push(next);
        }
        Ok(Trace { states, inputs })
    }
}

/// Greedy invariant minimization. Drops duplicate and subsumed clauses,
/// then tries clause deletions in canonical order, then literal deletions in
/// variable order. An edit is kept only if the checker still accepts.
pub fn minimize_invariant(checker: &Checker, inv: &[Clause]) -> Result<Vec<Clause>, CertError> {
    if !checker.check_safe(inv).accepted {
        return Err(CertError::PreconditionViolated);
    }
    let canon = canonicalize(inv);
    let mut cur: Vec<Clause> = Vec::with_capacity(canon.len());
    for (i, c) in canon.iter().enumerate() {
        let subsumed = canon
            .iter()
            .enumerate()
            .any(|(j, d)| j != i && d.len() < c.len() && d.subsumes(c));
        if !subsumed {
            cur.push(c.clone());
        }
    }

    let mut i = 0;
    while i < cur.len() {
        let mut trial = cur.clone();
        trial.remove(i);
        if checker.check_safe(&trial).accepted {
            cur = trial;
        } else {
            i += 1;
        }
    }

    for ci in 0..cur.len() {
        let mut li = 0;
        while li < cur[ci].len() {
            if cur[ci].len() == 1 {
                break;
            }
            let mut lits = cur[ci].lits().to_vec();
            lits.remove(li);
            let mut trial = cur.clone();
            trial[ci] = Clause::new(lits);
            if checker.check_safe(&trial).accepted {
                cur = trial;
            } else {
                li += 1;
            }
        }
    }
    let out = canonicalize(&cur);
    debug_assert!(checker.check_safe(&out).accepted);
    Ok(out)
}

/// SAFE certificate file: `p inv <latches> <clauses>` followed by one
/// zero-terminated clause per line, variable `i` being latch `i`.
pub fn write_safe_certificate(num_latches: usize, inv: &[Clause]) -> String {
    let mut out = format!("p inv {} {}\n", num_latches, inv.len());
    for c in inv {
        for l in c.lits() {
            write!(out, "{} ", l.to_dimacs()).unwrap();
        }
        out.push_str("0\n");
    }
    out
}

/// Parse a SAFE certificate file into `(latch count, clauses)`.
pub fn parse_safe_certificate(text: &str) -> Result<(usize, Vec<Clause>), CertError> {
    let err = |line: usize, msg: &str| CertError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut header = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('c') {
            continue;
        }
        if t.starts_with('p') {
            let f: Vec<&str> = t.split_whitespace().collect();
            if header.is_some() || f.len() != 4 || f[1] != "inv" {
                return Err(err(idx + 1, "bad header"));
            }
            let nx: usize = f[2].parse().map_err(|_| err(idx + 1, "bad latch count"))?;
            let nc: usize = f[3].parse().map_err(|_| err(idx + 1, "bad clause count"))?;
            header = Some((nx, nc));
            continue;
        }
        let Some((nx, _)) = header else {
            return Err(err(idx + 1, "clause before header"));
        };
        for tok in t.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| err(idx + 1, "bad literal"))?;
            match Lit::from_dimacs(v) {
                None => clauses.push(Clause::new(std::mem::take(&mut current))),
                Some(l) => {
                    if l.var().index() >= nx {
                        return Err(err(idx + 1, "literal out of range"));
                    }
                    current.push(l)
                }
            }
        }
    }
    let (nx, nc) = header.ok_or_else(|| err(0, "missing header"))?;
    if !current.is_empty() {
        return Err(err(0, "unterminated clause"));
    }
    if clauses.len() != nc {
        return Err(err(0, "clause count does not match header"));
    }
    Ok((nx, clauses))
}

/// UNSAFE certificate: `1`, `b0`, the initial state, one input line per
/// step, then `.`.
pub fn write_witness(trace: &Trace) -> String {
    let mut out = String::from("1\nb0\n");
    out.push_str(&bits_to_string(&trace.states[0]));
    out.push('\n');
    for u in &trace.inputs {
        out.push_str(&bits_to_string(u));
        out.push('\n');
    }
    out.push_str(".\n");
    out
}

/// Returns the initial state and the input vectors.
pub fn parse_witness(text: &str) -> Result<(Vec<bool>, Vec<Vec<bool>>), CertError> {
    let err = |line: usize, msg: &str| CertError::Parse {
        line,
        msg: msg.to_string(),
    };
    let lines: Vec<&str> = text.lines().collect();
    if lines.first().map(|l| l.trim()) != Some("1") {
        return Err(err(1, "expected '1'"));
    }
    if lines.get(1).map(|l| l.trim()) != Some("b0") {
        return Err(err(2, "expected 'b0'"));
    }
    let x0 = lines
        .get(2)
        .and_then(|l| parse_bits(l.trim()))
        .ok_or_else(|| err(3, "expected initial state bits"))?;
    let mut inputs = Vec::new();
    for (idx, line) in lines.iter().enumerate().skip(3) {
        let t = line.trim();
        if t == "." {
            return Ok((x0, inputs));
        }
        inputs.push(parse_bits(t).ok_or_else(|| err(idx + 1, "expected input bits"))?);
    }
    Err(err(lines.len(), "missing '.' terminator"))
}

/// State variable `i` as a literal; convenience for building invariants.
pub fn state_lit(i: usize, positive: bool) -> Lit {
    Lit::new(Var(i as u32), positive)
}

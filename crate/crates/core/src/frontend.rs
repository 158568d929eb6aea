//! ASCII AIGER (`aag`) frontend: parsing, CNF encoding of the transition
//! relation and gate-level simulation.
//!
//! Only single-property safety instances are accepted. After parsing, the
//! variables are renumbered into the canonical binary-AIGER order (inputs,
//! latches, then AND gates in topological order) so every AND gate's output
//! literal is larger than both of its inputs.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::logic::{Clause, Lit, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: literal {lit} out of range (maxvar {maxvar})")]
    LiteralOutOfRange { line: usize, lit: u64, maxvar: u64 },
    #[error("literal {0} is used but never defined")]
    UndefinedLiteral(u32),
    #[error("variable {0} defined more than once")]
    Redefined(u32),
    #[error("combinational cycle through variable {0}")]
    CombinationalCycle(u32),
    #[error("only single-property files are supported ({0} properties found)")]
    MultipleProperties(usize),
    #[error("no bad-state or output literal")]
    NoProperty,
    #[error("unsupported section: {0}")]
    UnsupportedSection(String),
    #[error("latch {0} has no constant reset value")]
    UninitializedLatch(usize),
    #[error("the bad-state signal depends on primary inputs")]
    InputDependentProperty,
    #[error("clausal form of the property exceeds {0} clauses")]
    PropertyTooLarge(usize),
    #[error("expected {expected} bits, got {got}")]
    WidthMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, FrontendError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Latch {
    pub lit: u32,
    pub next: u32,
    pub reset: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AndGate {
    pub lhs: u32,
    pub rhs0: u32,
    pub rhs1: u32,
}

/// A bit-level single-property circuit in canonical AIGER numbering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AigerCircuit {
    pub maxvar: u32,
    pub num_inputs: usize,
    pub latches: Vec<Latch>,
    pub and_gates: Vec<AndGate>,
    /// The bad-state signal; the property is its negation.
    pub bad_literal: u32,
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<u64>)> {
        let (idx, line) = self.inner.next().ok_or_else(|| FrontendError::Malformed {
            line: 0,
            msg: format!("unexpected end of file, expected {what}"),
        })?;
        let nums = line
            .split_whitespace()
            .map(|t| t.parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| FrontendError::Malformed {
                line: idx + 1,
                msg: format!("expected {what}, found {line:?}"),
            })?;
        Ok((idx + 1, nums))
    }
}

fn check_lit(lit: u64, maxvar: u64, line: usize) -> Result<u32> {
    if lit > 2 * maxvar + 1 {
        return Err(FrontendError::LiteralOutOfRange { line, lit, maxvar });
    }
    Ok(lit as u32)
}

fn expect_len(nums: &[u64], allowed: &[usize], line: usize, what: &str) -> Result<()> {
    if allowed.contains(&nums.len()) {
        Ok(())
    } else {
        Err(FrontendError::Malformed {
            line,
            msg: format!("{what} line has {} fields", nums.len()),
        })
    }
}

/// Parse an ASCII AIGER document.
pub fn parse_aiger(text: &str) -> Result<AigerCircuit> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, header) = lines
        .inner
        .next()
        .ok_or_else(|| FrontendError::MalformedHeader("empty input".into()))?;
    let mut fields = header.split_whitespace();
    match fields.next() {
        Some("aag") => {}
        Some("aig") => {
            return Err(FrontendError::MalformedHeader(
                "binary AIGER is not supported, convert to aag".into(),
            ))
        }
        _ => return Err(FrontendError::MalformedHeader(header.to_string())),
    }
    let counts = fields
        .map(|t| t.parse::<u64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| FrontendError::MalformedHeader(header.to_string()))?;
    if counts.len() < 5 || counts.len() > 9 {
        return Err(FrontendError::MalformedHeader(header.to_string()));
    }
    let get = |i: usize| counts.get(i).copied().unwrap_or(0);
    let (m, ni, nl, no, na) = (get(0), get(1), get(2), get(3), get(4));
    let (nb, nc, nj, nf) = (get(5), get(6), get(7), get(8));
    if ni + nl + na > m {
        return Err(FrontendError::MalformedHeader(format!(
            "M={m} is smaller than I+L+A={}",
            ni + nl + na
        )));
    }
    if m > u32::MAX as u64 / 2 - 1 {
        return Err(FrontendError::MalformedHeader("M too large".into()));
    }
    if nc > 0 {
        return Err(FrontendError::UnsupportedSection("invariant constraints".into()));
    }
    if nj > 0 {
        return Err(FrontendError::UnsupportedSection("justice properties".into()));
    }
    if nf > 0 {
        return Err(FrontendError::UnsupportedSection("fairness constraints".into()));
    }
    if nb > 1 {
        return Err(FrontendError::MultipleProperties(nb as usize));
    }
    if nb == 0 && no > 1 {
        return Err(FrontendError::MultipleProperties(no as usize));
    }
    if nb == 0 && no == 0 {
        return Err(FrontendError::NoProperty);
    }

    // original variable -> definition
    #[derive(Clone, Copy)]
    enum Def {
        Input,
        Latch,
        And(u32, u32),
    }
    let mut defs: BTreeMap<u32, Def> = BTreeMap::new();
    let mut define = |var: u32, def: Def, line: usize| -> Result<()> {
        if var == 0 {
            return Err(FrontendError::Malformed {
                line,
                msg: "constant cannot be redefined".into(),
            });
        }
        if defs.insert(var, def).is_some() {
            return Err(FrontendError::Redefined(var));
        }
        Ok(())
    };
    let even = |lit: u32, line: usize| -> Result<()> {
        if lit & 1 == 1 {
            Err(FrontendError::Malformed {
                line,
                msg: format!("defining literal {lit} must be even"),
            })
        } else {
            Ok(())
        }
    };

    let mut inputs = Vec::with_capacity(ni as usize);
    for _ in 0..ni {
        let (line, nums) = lines.next_numbers("input literal")?;
        expect_len(&nums, &[1], line, "input")?;
        let lit = check_lit(nums[0], m, line)?;
        even(lit, line)?;
        define(lit >> 1, Def::Input, line)?;
        inputs.push(lit);
    }
    let mut raw_latches = Vec::with_capacity(nl as usize);
    for i in 0..nl as usize {
        let (line, nums) = lines.next_numbers("latch definition")?;
        expect_len(&nums, &[2, 3], line, "latch")?;
        let lit = check_lit(nums[0], m, line)?;
        even(lit, line)?;
        let next = check_lit(nums[1], m, line)?;
        let reset = match nums.get(2).copied() {
            None | Some(0) => false,
            Some(1) => true,
            Some(_) => return Err(FrontendError::UninitializedLatch(i)),
        };
        define(lit >> 1, Def::Latch, line)?;
        raw_latches.push((lit, next, reset));
    }
    let mut outputs = Vec::new();
    for _ in 0..no {
        let (line, nums) = lines.next_numbers("output literal")?;
        expect_len(&nums, &[1], line, "output")?;
        outputs.push(check_lit(nums[0], m, line)?);
    }
    let mut bads = Vec::new();
    for _ in 0..nb {
        let (line, nums) = lines.next_numbers("bad-state literal")?;
        expect_len(&nums, &[1], line, "bad")?;
        bads.push(check_lit(nums[0], m, line)?);
    }
    for _ in 0..na {
        let (line, nums) = lines.next_numbers("AND gate")?;
        expect_len(&nums, &[3], line, "AND")?;
        let lhs = check_lit(nums[0], m, line)?;
        even(lhs, line)?;
        let r0 = check_lit(nums[1], m, line)?;
        let r1 = check_lit(nums[2], m, line)?;
        define(lhs >> 1, Def::And(r0, r1), line)?;
    }
    // Remaining lines are the symbol table and comment section.
    for (idx, line) in lines.inner {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t == "c" || t.starts_with("c ") {
            break;
        }
        let kind = t.as_bytes()[0];
        if !matches!(kind, b'i' | b'l' | b'o' | b'b' | b'c' | b'j' | b'f') {
            return Err(FrontendError::Malformed {
                line: idx + 1,
                msg: format!("unexpected trailing line {t:?}"),
            });
        }
    }
    let bad_orig = if nb == 1 { bads[0] } else { outputs[0] };

    // Topological order of AND gates reachable from anything.
    let mut order: Vec<u32> = Vec::new();
    let mut state: HashMap<u32, u8> = HashMap::new(); // 1 = visiting, 2 = done
    let and_vars: Vec<u32> = defs
        .iter()
        .filter(|(_, d)| matches!(d, Def::And(..)))
        .map(|(&v, _)| v)
        .collect();
    for root in and_vars {
        if state.get(&root) == Some(&2) {
            continue;
        }
        let mut stack = vec![(root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                state.insert(v, 2);
                order.push(v);
                continue;
            }
            match state.get(&v) {
                Some(2) => continue,
                Some(1) => return Err(FrontendError::CombinationalCycle(v)),
                _ => {}
            }
            state.insert(v, 1);
            stack.push((v, true));
            if let Some(Def::And(a, b)) = defs.get(&v) {
                for child in [a >> 1, b >> 1] {
                    if let Some(Def::And(..)) = defs.get(&child) {
                        match state.get(&child) {
                            Some(2) => {}
                            Some(1) => return Err(FrontendError::CombinationalCycle(child)),
                            _ => stack.push((child, false)),
                        }
                    }
                }
            }
        }
    }

    let mut remap: HashMap<u32, u32> = HashMap::new();
    remap.insert(0, 0);
    let mut next_var = 1u32;
    for &lit in &inputs {
        remap.insert(lit >> 1, next_var);
        next_var += 1;
    }
    for &(lit, _, _) in &raw_latches {
        remap.insert(lit >> 1, next_var);
        next_var += 1;
    }
    for &v in &order {
        remap.insert(v, next_var);
        next_var += 1;
    }
    let map_lit = |lit: u32| -> Result<u32> {
        let v = remap
            .get(&(lit >> 1))
            .ok_or(FrontendError::UndefinedLiteral(lit))?;
        Ok(v << 1 | (lit & 1))
    };

    let latches = raw_latches
        .iter()
        .map(|&(lit, next, reset)| {
            Ok(Latch {
                lit: map_lit(lit)?,
                next: map_lit(next)?,
                reset,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let and_gates = order
        .iter()
        .map(|v| {
            let Def::And(a, b) = defs[v] else { unreachable!() };
            Ok(AndGate {
                lhs: remap[v] << 1,
                rhs0: map_lit(a)?,
                rhs1: map_lit(b)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let circuit = AigerCircuit {
        maxvar: next_var - 1,
        num_inputs: inputs.len(),
        latches,
        and_gates,
        bad_literal: map_lit(bad_orig)?,
    };
    if circuit.cone_has_input(circuit.bad_literal) {
        return Err(FrontendError::InputDependentProperty);
    }
    Ok(circuit)
}

impl AigerCircuit {
    pub fn num_latches(&self) -> usize {
        self.latches.len()
    }

    pub fn reset_state(&self) -> Vec<bool> {
        self.latches.iter().map(|l| l.reset).collect()
    }

    fn first_latch_var(&self) -> u32 {
        self.num_inputs as u32 + 1
    }

    fn first_and_var(&self) -> u32 {
        self.first_latch_var() + self.latches.len() as u32
    }

    fn gate(&self, var: u32) -> Option<&AndGate> {
        let first = self.first_and_var();
        (var >= first).then(|| &self.and_gates[(var - first) as usize])
    }

    fn cone_has_input(&self, lit: u32) -> bool {
        let mut stack = vec![lit >> 1];
        let mut seen = vec![false; self.maxvar as usize + 1];
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v as usize], true) {
                continue;
            }
            if v >= 1 && v <= self.num_inputs as u32 {
                return true;
            }
            if let Some(g) = self.gate(v) {
                stack.push(g.rhs0 >> 1);
                stack.push(g.rhs1 >> 1);
            }
        }
        false
    }

    /// Evaluate every variable for one time frame.
    fn evaluate(&self, state: &[bool], input: &[bool]) -> Vec<bool> {
        let mut vals = vec![false; self.maxvar as usize + 1];
        for (i, &b) in input.iter().enumerate() {
            vals[i + 1] = b;
        }
        let first_latch = self.first_latch_var() as usize;
        for (i, &b) in state.iter().enumerate() {
            vals[first_latch + i] = b;
        }
        let lit_val = |vals: &[bool], lit: u32| vals[(lit >> 1) as usize] ^ (lit & 1 == 1);
        for g in &self.and_gates {
            vals[(g.lhs >> 1) as usize] = lit_val(&vals, g.rhs0) && lit_val(&vals, g.rhs1);
        }
        vals
    }

    /// One clock step: next-state vector and the bad signal of the current
    /// state.
    pub fn simulate_step(&self, state: &[bool], input: &[bool]) -> Result<(Vec<bool>, bool)> {
        if state.len() != self.latches.len() {
            return Err(FrontendError::WidthMismatch {
                expected: self.latches.len(),
                got: state.len(),
            });
        }
        if input.len() != self.num_inputs {
            return Err(FrontendError::WidthMismatch {
                expected: self.num_inputs,
                got: input.len(),
            });
        }
        let vals = self.evaluate(state, input);
        let lit_val = |lit: u32| vals[(lit >> 1) as usize] ^ (lit & 1 == 1);
        let next = self.latches.iter().map(|l| lit_val(l.next)).collect();
        Ok((next, lit_val(self.bad_literal)))
    }

    /// The bad signal of a state (inputs cannot influence it).
    pub fn is_bad(&self, state: &[bool]) -> Result<bool> {
        let zeros = vec![false; self.num_inputs];
        Ok(self.simulate_step(state, &zeros)?.1)
    }

    /// Write the circuit back as ASCII AIGER in canonical numbering, with
    /// the property in a `B` section.
    pub fn to_aag(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "aag {} {} {} 0 {} 1",
            self.maxvar,
            self.num_inputs,
            self.latches.len(),
            self.and_gates.len()
        )
        .unwrap();
        for i in 0..self.num_inputs {
            writeln!(out, "{}", 2 * (i + 1)).unwrap();
        }
        for l in &self.latches {
            writeln!(out, "{} {} {}", l.lit, l.next, u8::from(l.reset)).unwrap();
        }
        writeln!(out, "{}", self.bad_literal).unwrap();
        for g in &self.and_gates {
            writeln!(out, "{} {} {}", g.lhs, g.rhs0, g.rhs1).unwrap();
        }
        out
    }
}

/// `(Init(X), Trans(X, U, X'), Prop(X))` as clause sets over one variable
/// space. Layout: state variables first, then inputs, then next-state copies,
/// then Tseitin auxiliaries. State variable `i` is latch `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSystem {
    pub x_vars: Vec<Var>,
    pub u_vars: Vec<Var>,
    pub xp_vars: Vec<Var>,
    pub aux_vars: Vec<Var>,
    pub init_cnf: Vec<Clause>,
    pub trans_cnf: Vec<Clause>,
    pub prop_clause_form: Vec<Clause>,
}

/// Upper bound on the clausal form of `¬bad`.
pub const MAX_PROP_CLAUSES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Folded {
    Const(bool),
    Lit(Lit),
}

impl std::ops::Not for Folded {
    type Output = Folded;
    fn not(self) -> Folded {
        match self {
            Folded::Const(b) => Folded::Const(!b),
            Folded::Lit(l) => Folded::Lit(!l),
        }
    }
}

type Cnf = Vec<Vec<Lit>>;

/// Drop tautologies, duplicates and subsumed clauses.
fn simplify_cnf(mut cnf: Cnf) -> Cnf {
    for c in cnf.iter_mut() {
        c.sort_unstable();
        c.dedup();
    }
    cnf.retain(|c| !c.windows(2).any(|w| w[0] == !w[1]));
    cnf.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    cnf.dedup();
    let mut kept: Cnf = Vec::with_capacity(cnf.len());
    for c in cnf {
        if !kept.iter().any(|k| k.iter().all(|l| c.binary_search(l).is_ok())) {
            kept.push(c);
        }
    }
    kept
}

struct PropBuilder<'a> {
    circuit: &'a AigerCircuit,
    memo: HashMap<u32, Cnf>,
}

impl PropBuilder<'_> {
    /// Clausal form (over latch variables) of the function at `lit`.
    fn cnf(&mut self, lit: u32) -> Result<Cnf> {
        if let Some(c) = self.memo.get(&lit) {
            return Ok(c.clone());
        }
        let var = lit >> 1;
        let negated = lit & 1 == 1;
        let out = if var == 0 {
            if negated {
                vec![]
            } else {
                vec![vec![]]
            }
        } else if let Some(g) = self.circuit.gate(var).copied() {
            if !negated {
                let mut c = self.cnf(g.rhs0)?;
                c.extend(self.cnf(g.rhs1)?);
                simplify_cnf(c)
            } else {
                let a = self.cnf(g.rhs0 ^ 1)?;
                let b = self.cnf(g.rhs1 ^ 1)?;
                if a.len().saturating_mul(b.len()) > MAX_PROP_CLAUSES * 4 {
                    return Err(FrontendError::PropertyTooLarge(MAX_PROP_CLAUSES));
                }
                let mut prod = Vec::with_capacity(a.len() * b.len());
                for ca in &a {
                    for cb in &b {
                        let mut c = ca.clone();
                        c.extend_from_slice(cb);
                        prod.push(c);
                    }
                }
                simplify_cnf(prod)
            }
        } else {
            let latch = var - self.circuit.first_latch_var();
            vec![vec![Lit::new(Var(latch), !negated)]]
        };
        if out.len() > MAX_PROP_CLAUSES {
            return Err(FrontendError::PropertyTooLarge(MAX_PROP_CLAUSES));
        }
        self.memo.insert(lit, out.clone());
        Ok(out)
    }
}

/// Tseitin-encode the circuit as a transition system.
pub fn encode(circuit: &AigerCircuit) -> Result<TransitionSystem> {
    let nx = circuit.latches.len();
    let nu = circuit.num_inputs;
    let x_vars: Vec<Var> = (0..nx).map(|i| Var(i as u32)).collect();
    let u_vars: Vec<Var> = (0..nu).map(|i| Var((nx + i) as u32)).collect();
    let xp_vars: Vec<Var> = (0..nx).map(|i| Var((nx + nu + i) as u32)).collect();
    let mut next_var = (2 * nx + nu) as u32;
    let mut aux_vars = Vec::new();

    let mut val: Vec<Folded> = vec![Folded::Const(false); circuit.maxvar as usize + 1];
    for (i, v) in u_vars.iter().enumerate() {
        val[i + 1] = Folded::Lit(v.pos());
    }
    let first_latch = circuit.first_latch_var() as usize;
    for (i, v) in x_vars.iter().enumerate() {
        val[first_latch + i] = Folded::Lit(v.pos());
    }
    let lit_of = |val: &[Folded], lit: u32| {
        let f = val[(lit >> 1) as usize];
        if lit & 1 == 1 {
            !f
        } else {
            f
        }
    };

    let mut trans_cnf = Vec::new();
    for g in &circuit.and_gates {
        let a = lit_of(&val, g.rhs0);
        let b = lit_of(&val, g.rhs1);
        let out = match (a, b) {
            (Folded::Const(false), _) | (_, Folded::Const(false)) => Folded::Const(false),
            (Folded::Const(true), o) | (o, Folded::Const(true)) => o,
            (Folded::Lit(x), Folded::Lit(y)) if x == y => Folded::Lit(x),
            (Folded::Lit(x), Folded::Lit(y)) if x == !y => Folded::Const(false),
            (Folded::Lit(x), Folded::Lit(y)) => {
                let g = Var(next_var);
                next_var += 1;
                aux_vars.push(g);
                trans_cnf.push(Clause::new(vec![g.neg(), x]));
                trans_cnf.push(Clause::new(vec![g.neg(), y]));
                trans_cnf.push(Clause::new(vec![g.pos(), !x, !y]));
                Folded::Lit(g.pos())
            }
        };
        val[(g.lhs >> 1) as usize] = out;
    }
    for (latch, xp) in circuit.latches.iter().zip(&xp_vars) {
        match lit_of(&val, latch.next) {
            Folded::Const(b) => trans_cnf.push(Clause::new(vec![Lit::new(*xp, b)])),
            Folded::Lit(l) => {
                trans_cnf.push(Clause::new(vec![xp.neg(), l]));
                trans_cnf.push(Clause::new(vec![xp.pos(), !l]));
            }
        }
    }
    let init_cnf = circuit
        .latches
        .iter()
        .zip(&x_vars)
        .map(|(l, v)| Clause::new(vec![Lit::new(*v, l.reset)]))
        .collect();
    let mut builder = PropBuilder {
        circuit,
        memo: HashMap::new(),
    };
    let prop_clause_form = builder
        .cnf(circuit.bad_literal ^ 1)?
        .into_iter()
        .map(Clause::new)
        .collect();
    Ok(TransitionSystem {
        x_vars,
        u_vars,
        xp_vars,
        aux_vars,
        init_cnf,
        trans_cnf,
        prop_clause_form,
    })
}

/// Parse and encode in one go.
pub fn load(text: &str) -> Result<(AigerCircuit, TransitionSystem)> {
    let circuit = parse_aiger(text)?;
    let sys = encode(&circuit)?;
    Ok((circuit, sys))
}

impl TransitionSystem {
    pub fn num_latches(&self) -> usize {
        self.x_vars.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.u_vars.len()
    }

    pub fn num_vars(&self) -> usize {
        self.x_vars.len() * 2 + self.u_vars.len() + self.aux_vars.len()
    }

    /// Map a literal over `X` to the same literal over `X'`.
    pub fn prime(&self, lit: Lit) -> Lit {
        lit.with_var(self.xp_vars[lit.var().index()])
    }

    /// Map a literal over `X'` back to `X`.
    pub fn unprime(&self, lit: Lit) -> Option<Lit> {
        let v = lit.var().index();
        let base = self.xp_vars.first()?.index();
        (v >= base && v < base + self.xp_vars.len()).then(|| lit.with_var(self.x_vars[v - base]))
    }

    pub fn is_state_var(&self, var: Var) -> bool {
        var.index() < self.x_vars.len()
    }

    /// The reset state, read off the unit clauses of `init_cnf`.
    pub fn reset_state(&self) -> Vec<bool> {
        let mut bits = vec![false; self.x_vars.len()];
        for c in &self.init_cnf {
            let l = c.lits()[0];
            bits[l.var().index()] = l.is_positive();
        }
        bits
    }

    /// Whether a concrete state satisfies `Prop`.
    pub fn prop_holds(&self, state: &[bool]) -> bool {
        self.prop_clause_form.iter().all(|c| c.is_satisfied_by(state))
    }

    /// DIMACS dump of the transition relation. Comment lines map latch `i`
    /// to its current (`c x`), input (`c u`) and next-state (`c xp`)
    /// variables and list `Init`/`Prop` clauses.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.x_vars.iter().enumerate() {
            writeln!(out, "c x {i} {}", v.0 + 1).unwrap();
        }
        for (i, v) in self.u_vars.iter().enumerate() {
            writeln!(out, "c u {i} {}", v.0 + 1).unwrap();
        }
        for (i, v) in self.xp_vars.iter().enumerate() {
            writeln!(out, "c xp {i} {}", v.0 + 1).unwrap();
        }
        for c in &self.init_cnf {
            writeln!(out, "c init {c} 0").unwrap();
        }
        for c in &self.prop_clause_form {
            if c.is_empty() {
                out.push_str("c prop 0\n");
            } else {
                writeln!(out, "c prop {c} 0").unwrap();
            }
        }
        writeln!(out, "p cnf {} {}", self.num_vars(), self.trans_cnf.len()).unwrap();
        for c in &self.trans_cnf {
            writeln!(out, "{c} 0").unwrap();
        }
        out
    }
}

//! Shared helpers for integration tests: toy circuits, a random circuit
//! generator and an explicit-state reachability oracle that evaluates the
//! gate list on its own.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use capdr::engine::Pdr;
use capdr::frontend::AigerCircuit;
use capdr::logic::{Clause, Cube, Lit, Var};
use rand::Rng;

pub const TOY_A_BAD: &str = "aag 1 0 1 1 0\n2 2 0\n3\n";
pub const TOY_A_SAFE: &str = "aag 1 0 1 1 0\n2 2 0\n2\n";
pub const TOY_B: &str = "aag 6 0 2 0 4 1\n2 3\n4 11\n12\n6 4 3\n8 5 2\n10 7 9\n12 4 2\n";
pub const TOY_C: &str = "aag 2 1 1 0 0 1\n2\n4 2\n4\n";
pub const CONST_BAD: &str = "aag 0 0 0 1 0\n1\n";
/// Two latches stuck at their reset 0; bad = x. Used for subsumption tests.
pub const TOY_A_SAFE_EXT: &str = "aag 2 0 2 1 0\n2 2 0\n4 4 0\n2\n";

fn eval_lit(vals: &[bool], lit: u32) -> bool {
    vals[(lit >> 1) as usize] ^ (lit & 1 == 1)
}

/// Independent gate evaluation straight from the parsed gate list.
pub fn oracle_step(c: &AigerCircuit, state: &[bool], input: &[bool]) -> (Vec<bool>, bool) {
    let mut vals = vec![false; c.maxvar as usize + 1];
    let mut defined = vec![false; c.maxvar as usize + 1];
    defined[0] = true;
    for (i, &b) in input.iter().enumerate() {
        vals[i + 1] = b;
        defined[i + 1] = true;
    }
    for (l, &b) in c.latches.iter().zip(state) {
        vals[(l.lit >> 1) as usize] = b;
        defined[(l.lit >> 1) as usize] = true;
    }
    // fixpoint evaluation, independent of gate order
    let mut pending: Vec<_> = c.and_gates.clone();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|g| {
            let (a, b) = ((g.rhs0 >> 1) as usize, (g.rhs1 >> 1) as usize);
            if defined[a] && defined[b] {
                vals[(g.lhs >> 1) as usize] = eval_lit(&vals, g.rhs0) && eval_lit(&vals, g.rhs1);
                defined[(g.lhs >> 1) as usize] = true;
                false
            } else {
                true
            }
        });
        assert!(pending.len() < before, "cyclic gate list");
    }
    let next = c.latches.iter().map(|l| eval_lit(&vals, l.next)).collect();
    (next, eval_lit(&vals, c.bad_literal))
}

pub fn all_bits(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..1 << n).map(move |b| (0..n).map(|i| b >> i & 1 == 1).collect())
}

/// Explicit-state BFS. Returns the length of the shortest counterexample, or
/// `None` when no bad state is reachable.
pub fn bfs_shortest_cex(c: &AigerCircuit) -> Option<usize> {
    let init = c.reset_state();
    let inputs: Vec<Vec<bool>> = all_bits(c.num_inputs).collect();
    let zeros = vec![false; c.num_inputs];
    let mut dist: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(init.clone(), 0);
    queue.push_back(init);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        if oracle_step(c, &s, &zeros).1 {
            return Some(d);
        }
        for u in &inputs {
            let (n, _) = oracle_step(c, &s, u);
            if !dist.contains_key(&n) {
                dist.insert(n.clone(), d + 1);
                queue.push_back(n);
            }
        }
    }
    None
}

/// Set of reachable states.
pub fn reachable(c: &AigerCircuit) -> std::collections::HashSet<Vec<bool>> {
    let init = c.reset_state();
    let inputs: Vec<Vec<bool>> = all_bits(c.num_inputs).collect();
    let mut seen = std::collections::HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(init.clone());
    queue.push_back(init);
    while let Some(s) = queue.pop_front() {
        for u in &inputs {
            let (n, _) = oracle_step(c, &s, u);
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    seen
}

/// A random well-formed circuit in ASCII AIGER. The bad signal is built from
/// latch literals only.
pub fn random_aag(rng: &mut impl Rng, num_latches: usize, num_inputs: usize, num_gates: usize) -> String {
    let mut next_var = 1 + num_inputs as u32 + num_latches as u32;
    let mut gates: Vec<(u32, u32, u32)> = Vec::new();
    // pool of literals usable as gate inputs; latch-only pool for bad cone
    let mut pool: Vec<u32> = (1..next_var).map(|v| 2 * v).collect();
    pool.push(0);
    let mut latch_pool: Vec<u32> = (1 + num_inputs as u32..next_var).map(|v| 2 * v).collect();
    for _ in 0..num_gates {
        let latch_only = !latch_pool.is_empty() && rng.gen_bool(0.4);
        let src = if latch_only { &latch_pool } else { &pool };
        let a = src[rng.gen_range(0..src.len())] ^ rng.gen_range(0..2);
        let b = src[rng.gen_range(0..src.len())] ^ rng.gen_range(0..2);
        let lhs = 2 * next_var;
        next_var += 1;
        gates.push((lhs, a, b));
        pool.push(lhs);
        if latch_only {
            latch_pool.push(lhs);
        }
    }
    let mut out = String::new();
    writeln!(
        out,
        "aag {} {} {} 0 {} 1",
        next_var - 1,
        num_inputs,
        num_latches,
        gates.len()
    )
    .unwrap();
    for i in 0..num_inputs {
        writeln!(out, "{}", 2 * (i + 1)).unwrap();
    }
    for i in 0..num_latches {
        let lit = 2 * (1 + num_inputs + i) as u32;
        let next = pool[rng.gen_range(0..pool.len())] ^ rng.gen_range(0..2);
        writeln!(out, "{} {} {}", lit, next, rng.gen_range(0..2)).unwrap();
    }
    let bad = if latch_pool.is_empty() {
        rng.gen_range(0..2)
    } else {
        latch_pool[rng.gen_range(0..latch_pool.len())] ^ rng.gen_range(0..2)
    };
    writeln!(out, "{bad}").unwrap();
    for (l, a, b) in gates {
        writeln!(out, "{l} {a} {b}").unwrap();
    }
    out
}

/// The generalization family: latch 0 is stuck at its reset 0, latch 1
/// copies latch 0 and is the bad signal, the remaining `free` latches load
/// fresh inputs each step. The one-literal clause `¬x0` (with `Prop`) is an
/// inductive invariant, while state-by-state blocking needs many clauses.
pub fn stuck_family(free: usize) -> String {
    let ni = free;
    let maxvar = ni + 2 + free;
    let x0 = 2 * (ni + 1);
    let y = 2 * (ni + 2);
    let mut out = format!("aag {maxvar} {ni} {} 0 0 1\n", 2 + free);
    for i in 0..ni {
        writeln!(out, "{}", 2 * (i + 1)).unwrap();
    }
    writeln!(out, "{x0} {x0} 0").unwrap();
    writeln!(out, "{y} {x0} 0").unwrap();
    for j in 0..free {
        writeln!(out, "{} {} 0", 2 * (ni + 3 + j), 2 * (j + 1)).unwrap();
    }
    writeln!(out, "{y}").unwrap();
    out
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Every `.aag` in the fixture corpus, sorted by name.
pub fn fixture_corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(fixtures_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "aag").then(|| {
                let name = p.file_stem().unwrap().to_string_lossy().into_owned();
                (name, std::fs::read_to_string(&p).unwrap())
            })
        })
        .collect();
    out.sort();
    out
}

/// Parse, build an independent checker and run the engine once.
pub fn run_text(text: &str, cfg: capdr::EngineConfig) -> (AigerCircuit, capdr::RunResult) {
    let (c, s) = capdr::load(text).unwrap();
    let ck = capdr::Checker::from_aiger_text(text).unwrap();
    let r = capdr::solve(&c, &s, &ck, cfg);
    (c, r)
}

pub fn states_of(c: &AigerCircuit, frame: &[Clause]) -> Vec<Vec<bool>> {
    all_bits(c.num_latches())
        .filter(|s| frame.iter().all(|cl| cl.is_satisfied_by(s)))
        .collect()
}

/// `lhs ∧ Trans ⇒ rhs'` by enumeration.
pub fn image_within(c: &AigerCircuit, lhs: &[Vec<bool>], rhs: &[Clause]) -> bool {
    lhs.iter().all(|s| {
        all_bits(c.num_inputs).all(|u| {
            let (n, _) = oracle_step(c, s, &u);
            rhs.iter().all(|cl| cl.is_satisfied_by(&n))
        })
    })
}

pub fn frames_ok(c: &AigerCircuit, p: &Pdr) -> bool {
    let k = p.k();
    let frames: Vec<Vec<Vec<bool>>> = (0..=k + 1).map(|i| states_of(c, &p.frame(i))).collect();
    let init = c.reset_state();
    let prop: Vec<Vec<bool>> = all_bits(c.num_latches())
        .filter(|s| !oracle_step(c, s, &vec![false; c.num_inputs]).1)
        .collect();
    frames[0] == vec![init]
        && (0..=k).all(|i| frames[i].iter().all(|s| frames[i + 1].contains(s)))
        && (1..=k + 1).all(|i| frames[i].iter().all(|s| prop.contains(s)))
        && (0..k).all(|i| image_within(c, &frames[i], &p.frame(i + 1)))
}

pub fn mutate(rng: &mut impl Rng, c: &Clause, nx: usize) -> Clause {
    let mut lits: Vec<Lit> = c.lits().to_vec();
    match rng.gen_range(0..3) {
        0 if !lits.is_empty() => {
            let j = rng.gen_range(0..lits.len());
            lits[j] = !lits[j];
        }
        1 if lits.len() > 1 => {
            let j = rng.gen_range(0..lits.len());
            lits.remove(j);
        }
        _ => {
            let v = Var(rng.gen_range(0..nx) as u32);
            if !lits.iter().any(|l| l.var() == v) {
                lits.push(Lit::new(v, rng.gen()));
            }
        }
    }
    Clause::new(lits)
}

/// Outcome of [`guard_fuzz`].
#[derive(Debug, Default)]
pub struct FuzzReport {
    pub mutations: usize,
    pub admitted: usize,
    pub admitted_on_valid_frames: usize,
    /// Admitted clauses that fail initiation or relative induction.
    pub bad_insertions: Vec<String>,
    /// Valid clauses the guards refused.
    pub false_refusals: Vec<String>,
    /// Insertions that broke frame invariants that held before.
    pub broken_frames: Vec<String>,
    /// Refusals that still changed the frames.
    pub dirty_refusals: Vec<String>,
}

/// Mutate blocking clauses for random states and offer them to the guards,
/// deciding both guards independently by enumeration.
pub fn guard_fuzz(seed: u64, mutations: usize) -> FuzzReport {
    use capdr::certs::Checker;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let corpus: Vec<(String, String)> = fixture_corpus()
        .into_iter()
        .filter(|(_, t)| {
            capdr::load(t)
                .map(|(c, _)| (1..=6).contains(&c.num_latches()))
                .unwrap_or(false)
        })
        .collect();
    let mut rep = FuzzReport::default();
    while rep.mutations < mutations {
        let (name, text) = corpus.choose(&mut rng).unwrap();
        let (c, s) = capdr::load(text).unwrap();
        let ck = Checker::from_aiger_text(text).unwrap();
        let mut p = Pdr::new(&c, &s, &ck, capdr::EngineConfig::default());
        let nx = c.num_latches();
        for _ in 0..rng.gen_range(0..=3) {
            p.extend();
        }
        for _ in 0..40 {
            let state: Vec<bool> = (0..nx).map(|_| rng.gen()).collect();
            let mut cand = Cube::from_state(&state).negate();
            for _ in 0..rng.gen_range(1..=3) {
                cand = mutate(&mut rng, &cand, nx);
            }
            let i = rng.gen_range(0..=p.k() + 1);
            rep.mutations += 1;
            let before = p.learned_clauses();
            let held = frames_ok(&c, &p);
            let init_ok = cand.is_satisfied_by(&c.reset_state());
            let rel_ok = i >= 1 && image_within(&c, &states_of(&c, &p.frame(i - 1)), &[cand.clone()]);
            let tag = format!("{name}: {cand} at level {i}");
            match p.admit(i, &cand).unwrap() {
                Some(adm) => {
                    rep.admitted += 1;
                    rep.admitted_on_valid_frames += held as usize;
                    if !(init_ok && rel_ok) {
                        rep.bad_insertions.push(tag.clone());
                    }
                    p.insert_blocker(adm).unwrap();
                    if held && !frames_ok(&c, &p) {
                        rep.broken_frames.push(tag);
                    }
                }
                None => {
                    if init_ok && rel_ok {
                        rep.false_refusals.push(tag.clone());
                    }
                    if p.learned_clauses() != before {
                        rep.dirty_refusals.push(tag);
                    }
                }
            }
        }
    }
    rep
}

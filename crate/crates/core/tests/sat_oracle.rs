//! The built-in solver against exhaustive enumeration.

use capdr::logic::{Lit, Var};
use capdr::sat::{SatBackend, SolveResult, Solver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(rng: &mut ChaCha8Rng) -> (usize, Vec<Vec<Lit>>, Vec<Lit>) {
    let nvars = rng.gen_range(1..=12);
    let nclauses = rng.gen_range(0..=40);
    let clauses = (0..nclauses)
        .map(|_| {
            let len = rng.gen_range(1..=3);
            (0..len)
                .map(|_| Lit::new(Var(rng.gen_range(0..nvars) as u32), rng.gen()))
                .collect()
        })
        .collect();
    let nassume = rng.gen_range(0..=4);
    let assumptions = (0..nassume)
        .map(|_| Lit::new(Var(rng.gen_range(0..nvars) as u32), rng.gen()))
        .collect();
    (nvars, clauses, assumptions)
}

fn brute_force(nvars: usize, clauses: &[Vec<Lit>], assumptions: &[Lit]) -> bool {
    (0u32..1 << nvars).any(|bits| {
        let a: Vec<bool> = (0..nvars).map(|i| bits >> i & 1 == 1).collect();
        assumptions.iter().all(|l| l.eval(&a)) && clauses.iter().all(|c| c.iter().any(|l| l.eval(&a)))
    })
}

fn build(nvars: usize, clauses: &[Vec<Lit>], seed: u64) -> Solver {
    let mut s = Solver::new(seed);
    s.new_vars(nvars);
    for c in clauses {
        s.add_clause(c).unwrap();
    }
    s
}

#[test]
fn agrees_with_enumeration_and_cores_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    for _ in 0..1000 {
        let (nvars, clauses, assumptions) = random_instance(&mut rng);
        let expected = brute_force(nvars, &clauses, &assumptions);
        let mut s = build(nvars, &clauses, 7);
        match s.solve(&assumptions).unwrap() {
            SolveResult::Sat(model) => {
                assert!(expected, "solver claims SAT on an UNSAT instance");
                assert!(assumptions.iter().all(|l| l.eval(&model)));
                assert!(clauses.iter().all(|c| c.iter().any(|l| l.eval(&model))));
            }
            SolveResult::Unsat(core) => {
                assert!(!expected, "solver claims UNSAT on a SAT instance");
                assert!(core.iter().all(|l| assumptions.contains(l)));
                let mut with_units = clauses.clone();
                with_units.extend(core.iter().map(|&l| vec![l]));
                let mut check = build(nvars, &with_units, 1);
                assert!(!check.solve(&[]).unwrap().is_sat());
                assert!(!brute_force(nvars, &clauses, &core));
            }
        }
    }
}

#[test]
fn repeated_incremental_queries_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let (nvars, clauses, _) = random_instance(&mut rng);
        let mut s = build(nvars, &clauses, 3);
        for _ in 0..10 {
            let assumptions: Vec<Lit> = (0..rng.gen_range(0..=5))
                .map(|_| Lit::new(Var(rng.gen_range(0..nvars) as u32), rng.gen()))
                .collect();
            let got = s.solve(&assumptions).unwrap().is_sat();
            assert_eq!(got, brute_force(nvars, &clauses, &assumptions));
        }
    }
}

#[test]
fn identical_sequences_give_identical_answers() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (nvars, clauses, assumptions) = random_instance(&mut rng);
        let mut a = build(nvars, &clauses, 11);
        let mut b = build(nvars, &clauses, 11);
        assert_eq!(a.solve(&assumptions).unwrap(), b.solve(&assumptions).unwrap());
        assert_eq!(a.solve(&[]).unwrap(), b.solve(&[]).unwrap());
    }
}

//! Inputs for the benchmarks: corpus circuits and random CNF.

use std::path::Path;

use capdr::logic::{Lit, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Text of a circuit from the core crate's fixture corpus.
pub fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(format!("{name}.aag"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Uniform random 3-CNF over `vars` variables.
pub fn random_3cnf(seed: u64, vars: usize, clauses: usize) -> Vec<Vec<Lit>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..clauses)
        .map(|_| {
            (0..3)
                .map(|_| Lit::new(Var(rng.gen_range(0..vars) as u32), rng.gen()))
                .collect()
        })
        .collect()
}

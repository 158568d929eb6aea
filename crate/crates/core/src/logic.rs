//! Propositional building blocks shared by the solver, the engine and the
//! checker: variables, literals, clauses and cubes.

use std::fmt;
use std::ops::Not;

/// A propositional variable, numbered from zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

impl Var {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn pos(self) -> Lit {
        Lit::new(self, true)
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Lit {
        Lit::new(self, false)
    }
}

/// A literal packed as `2 * var + negated`. Ordering is by variable first,
/// positive polarity before negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    #[inline]
    pub fn new(var: Var, positive: bool) -> Self {
        Lit(var.0 << 1 | (!positive) as u32)
    }

    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    /// Signed 1-based DIMACS form.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var().0 as i64 + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    /// Inverse of [`Lit::to_dimacs`]; `None` for zero.
    pub fn from_dimacs(value: i64) -> Option<Self> {
        if value == 0 {
            return None;
        }
        let var = Var((value.unsigned_abs() - 1) as u32);
        Some(Lit::new(var, value > 0))
    }

    /// Same polarity on a shifted variable. Used to move between the
    /// current-state and next-state copies of a variable block.
    #[inline]
    pub fn with_var(self, var: Var) -> Self {
        Lit::new(var, self.is_positive())
    }

    /// The value this literal takes under a total assignment.
    #[inline]
    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.var().index()] == self.is_positive()
    }
}

impl Not for Lit {
    type Output = Lit;

    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

fn normalize(lits: &mut Vec<Lit>) {
    lits.sort_unstable();
    lits.dedup();
}

/// A disjunction of literals. The literal order is whatever the producer
/// supplied; [`Clause::canonical`] sorts and deduplicates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Clause(Vec<Lit>);

impl Clause {
    pub fn new(lits: Vec<Lit>) -> Self {
        Clause(lits)
    }

    pub fn canonical(mut self) -> Self {
        normalize(&mut self.0);
        self
    }

    pub fn lits(&self) -> &[Lit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, lit: Lit) -> bool {
        self.0.contains(&lit)
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.0.iter().any(|l| l.eval(assignment))
    }

    /// The cube of negated literals, i.e. the states this clause excludes.
    pub fn negate(&self) -> Cube {
        Cube(self.0.iter().map(|&l| !l).collect())
    }

    /// Whether every literal of `self` occurs in `other`.
    pub fn subsumes(&self, other: &Clause) -> bool {
        self.0.iter().all(|l| other.0.contains(l))
    }

    pub fn to_dimacs(&self) -> Vec<i64> {
        self.0.iter().map(|l| l.to_dimacs()).collect()
    }

    pub fn max_var(&self) -> Option<Var> {
        self.0.iter().map(|l| l.var()).max()
    }
}

impl FromIterator<Lit> for Clause {
    fn from_iter<T: IntoIterator<Item = Lit>>(iter: T) -> Self {
        Clause(iter.into_iter().collect())
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// A conjunction of literals, kept sorted and duplicate-free.
///
/// Over the state variables a cube with exactly one literal per variable is a
/// *state cube* and stands for a single concrete state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cube(Vec<Lit>);

impl Cube {
    pub fn new(mut lits: Vec<Lit>) -> Self {
        normalize(&mut lits);
        Cube(lits)
    }

    /// State cube for a concrete valuation of variables `0..bits.len()`.
    pub fn from_state(bits: &[bool]) -> Self {
        Cube(
            bits.iter()
                .enumerate()
                .map(|(i, &b)| Lit::new(Var(i as u32), b))
                .collect(),
        )
    }

    pub fn lits(&self) -> &[Lit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The blocking clause `¬cube`.
    pub fn negate(&self) -> Clause {
        Clause(self.0.iter().map(|&l| !l).collect())
    }

    /// Whether the cube fixes every one of `num_vars` variables exactly once
    /// and mentions nothing else.
    pub fn is_state_cube(&self, num_vars: usize) -> bool {
        self.0.len() == num_vars && self.0.iter().enumerate().all(|(i, l)| l.var().index() == i)
    }

    /// Concrete state of a state cube.
    pub fn to_state(&self, num_vars: usize) -> Vec<bool> {
        let mut bits = vec![false; num_vars];
        for l in &self.0 {
            bits[l.var().index()] = l.is_positive();
        }
        bits
    }

    pub fn is_subcube_of(&self, other: &Cube) -> bool {
        self.0.iter().all(|l| other.0.binary_search(l).is_ok())
    }

    /// Whether the cube is consistent: no variable with both polarities.
    pub fn is_consistent(&self) -> bool {
        self.0.windows(2).all(|w| w[0].var() != w[1].var())
    }

    pub fn to_dimacs(&self) -> Vec<i64> {
        self.0.iter().map(|l| l.to_dimacs()).collect()
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("]")
    }
}

/// Format a bit vector as a `0`/`1` string, index 0 first.
pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Parse a `0`/`1` string; `None` on any other character.
pub fn parse_bits(text: &str) -> Option<Vec<bool>> {
    text.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

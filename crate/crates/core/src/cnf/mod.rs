//! CNF data model, DIMACS I/O, clause-literal graphs, instance generation and a
//! brute-force oracle.

mod brute;
mod dimacs;
mod generate;
mod graph;
mod split;

use std::fmt;

pub use brute::{brute_force, BruteResult, BRUTE_FORCE_MAX_VARS};
pub use dimacs::{parse_dimacs, read_dimacs, write_dimacs, write_dimacs_file};
pub use generate::random_ksat;
pub use graph::{clause_literal_graph, SparseGraph};
pub use split::{random_split, random_split_capped, random_split_report, SplitReport, Subproblem};

/// A variable (1-based) with a polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: u32,
    /// `true` for the positive literal.
    pub sign: bool,
}

impl Literal {
    pub fn new(var: u32, sign: bool) -> Self {
        debug_assert!(var >= 1, "variables are 1-based");
        Literal { var, sign }
    }

    pub fn pos(var: u32) -> Self {
        Literal::new(var, true)
    }

    pub fn neg(var: u32) -> Self {
        Literal::new(var, false)
    }

    /// From a non-zero DIMACS integer.
    pub fn from_dimacs(x: i64) -> Self {
        assert!(x != 0, "0 is not a literal");
        Literal::new(x.unsigned_abs() as u32, x > 0)
    }

    pub fn to_dimacs(self) -> i64 {
        if self.sign {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }

    pub fn negate(self) -> Self {
        Literal {
            var: self.var,
            sign: !self.sign,
        }
    }

    /// Truth value of the literal under a variable assignment indexed by `var - 1`.
    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.var as usize - 1] == self.sign
    }
}

impl std::ops::Not for Literal {
    type Output = Literal;
    fn not(self) -> Literal {
        self.negate()
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Clause {
    pub literals: Vec<Literal>,
    /// LBD at learn time; `None` for original clauses.
    pub glue: Option<u32>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause {
            literals,
            glue: None,
        }
    }

    pub fn learned(literals: Vec<Literal>, glue: u32) -> Self {
        Clause {
            literals,
            glue: Some(glue),
        }
    }

    pub fn from_dimacs(lits: &[i64]) -> Self {
        Clause::new(lits.iter().map(|&x| Literal::from_dimacs(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn is_tautology(&self) -> bool {
        self.literals
            .iter()
            .any(|l| self.literals.contains(&l.negate()))
    }

    pub fn is_satisfied(&self, assignment: &[bool]) -> bool {
        self.literals.iter().any(|l| l.eval(assignment))
    }

    /// Removes repeated literals, keeping first occurrences in order.
    pub(crate) fn dedup(&mut self) {
        let mut seen = Vec::with_capacity(self.literals.len());
        self.literals.retain(|l| {
            if seen.contains(l) {
                false
            } else {
                seen.push(*l);
                true
            }
        });
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Formula {
    pub num_vars: u32,
    pub clauses: Vec<Clause>,
}

impl Formula {
    pub fn new(num_vars: u32, clauses: Vec<Clause>) -> Self {
        Formula { num_vars, clauses }
    }

    /// Builds a formula from DIMACS-style integer clauses; `num_vars` is the
    /// largest variable mentioned.
    pub fn from_dimacs_clauses(clauses: &[&[i64]]) -> Self {
        let num_vars = clauses
            .iter()
            .flat_map(|c| c.iter())
            .map(|x| x.unsigned_abs() as u32)
            .max()
            .unwrap_or(0);
        Formula::new(num_vars, clauses.iter().map(|c| Clause::from_dimacs(c)).collect())
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn num_literal_occurrences(&self) -> usize {
        self.clauses.iter().map(Clause::len).sum()
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        assignment.len() >= self.num_vars as usize
            && self.clauses.iter().all(|c| c.is_satisfied(assignment))
    }

    /// Checks the variable-range invariant.
    pub fn validate(&self) -> crate::Result<()> {
        for (i, c) in self.clauses.iter().enumerate() {
            for l in &c.literals {
                if l.var == 0 || l.var > self.num_vars {
                    return Err(crate::Error::InvalidArgument(format!(
                        "clause {i}: literal {l} out of range 1..={}",
                        self.num_vars
                    )));
                }
            }
        }
        Ok(())
    }

    /// Drops tautologies and repeated literals, the normalization applied at parse time.
    pub fn normalized(mut self) -> Self {
        for c in &mut self.clauses {
            c.dedup();
        }
        self.clauses.retain(|c| !c.is_tautology());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negation_is_involution() {
        for v in 1..5 {
            for s in [true, false] {
                let l = Literal::new(v, s);
                assert_eq!(l.negate().negate(), l);
                assert_ne!(l.negate(), l);
            }
        }
        assert_eq!(Literal::from_dimacs(-3).to_dimacs(), -3);
    }

    #[test]
    fn normalization() {
        let f = Formula::from_dimacs_clauses(&[&[1, 1, 2], &[1, -1], &[]]).normalized();
        assert_eq!(f.clauses, vec![Clause::from_dimacs(&[1, 2]), Clause::new(vec![])]);
    }
}

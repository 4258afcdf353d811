use std::collections::{BTreeSet, HashSet};

use rand::Rng as _;

use super::{Clause, Formula, Literal};
use crate::rng;

/// One piece produced by [`random_split`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subproblem {
    /// Residual formula over compacted variables `1..=var_map.len()`.
    pub formula: Formula,
    /// `var_map[i]` is the original variable behind compacted variable `i + 1`.
    pub var_map: Vec<u32>,
    /// Literals (over original variables) fixed on the path to this piece,
    /// decisions and propagated units alike, in assignment order.
    pub assignment: Vec<Literal>,
}

impl Subproblem {
    /// Extends a model of the piece to a full assignment of the original formula.
    /// Variables neither in the piece nor on the path default to `false`.
    pub fn extend_model(&self, piece_model: &[bool], num_vars: u32) -> Vec<bool> {
        let mut model = vec![false; num_vars as usize];
        for l in &self.assignment {
            model[l.var as usize - 1] = l.sign;
        }
        for (i, &orig) in self.var_map.iter().enumerate() {
            model[orig as usize - 1] = piece_model[i];
        }
        model
    }
}

#[derive(Clone, Debug, Default)]
pub struct SplitReport {
    pub pieces: Vec<Subproblem>,
    /// Branches discarded because simplification satisfied every clause.
    pub trivially_sat: usize,
    /// Branches discarded because propagation hit a conflict.
    pub trivially_unsat: usize,
}

/// Splits `f` into pieces of at most `max_clauses` clauses by assigning
/// random variables.
///
/// Each split picks a uniformly random variable of the residual formula and
/// explores both polarities, the uniformly drawn one first; after every
/// assignment the residual is simplified with unit propagation. Branches that
/// become trivially decided are discarded (and counted in the report), so the
/// pieces together with the discarded branches cover the whole search space.
pub fn random_split(f: &Formula, max_clauses: usize, seed: u64) -> Vec<Subproblem> {
    random_split_report(f, max_clauses, usize::MAX, seed).pieces
}

/// [`random_split`] that stops exploring once `max_pieces` pieces exist.
pub fn random_split_capped(
    f: &Formula,
    max_clauses: usize,
    max_pieces: usize,
    seed: u64,
) -> Vec<Subproblem> {
    random_split_report(f, max_clauses, max_pieces, seed).pieces
}

pub fn random_split_report(
    f: &Formula,
    max_clauses: usize,
    max_pieces: usize,
    seed: u64,
) -> SplitReport {
    let max_clauses = max_clauses.max(1);
    let mut report = SplitReport::default();
    if f.clauses.len() <= max_clauses {
        report.pieces.push(Subproblem {
            formula: f.clone(),
            var_map: (1..=f.num_vars).collect(),
            assignment: Vec::new(),
        });
        return report;
    }

    let mut rng = rng::seeded(seed);
    let root: Vec<Vec<Literal>> = f.clauses.iter().map(|c| c.literals.clone()).collect();
    let mut stack: Vec<(Vec<Vec<Literal>>, Vec<Literal>)> = vec![(root, Vec::new())];

    while let Some((clauses, path)) = stack.pop() {
        if report.pieces.len() >= max_pieces {
            break;
        }
        if clauses.len() <= max_clauses {
            report.pieces.push(compact(&clauses, path));
            continue;
        }
        let vars: Vec<u32> = clauses
            .iter()
            .flatten()
            .map(|l| l.var)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let var = vars[rng.random_range(0..vars.len())];
        let first = rng.random::<bool>();
        // Pushed in reverse so the drawn polarity is explored first.
        for sign in [!first, first] {
            match assign_and_propagate(&clauses, Literal::new(var, sign)) {
                None => report.trivially_unsat += 1,
                Some((residual, _)) if residual.is_empty() => report.trivially_sat += 1,
                Some((residual, fixed)) => {
                    let mut p = path.clone();
                    p.extend(fixed);
                    stack.push((residual, p));
                }
            }
        }
    }
    report
}

/// Assigns `lit`, then unit-propagates over `clauses`. Returns `None` on conflict,
/// otherwise the residual clauses and all literals fixed (starting with `lit`).
fn assign_and_propagate(
    clauses: &[Vec<Literal>],
    lit: Literal,
) -> Option<(Vec<Vec<Literal>>, Vec<Literal>)> {
    let mut fixed = vec![lit];
    let mut fixed_set: HashSet<Literal> = HashSet::from([lit]);
    let mut pending = vec![lit];
    let mut current = clauses.to_vec();
    while let Some(l) = pending.pop() {
        let mut next = Vec::with_capacity(current.len());
        for c in current {
            if c.contains(&l) {
                continue;
            }
            let reduced: Vec<Literal> = c.into_iter().filter(|&x| x != !l).collect();
            match reduced.len() {
                0 => return None,
                1 => {
                    let u = reduced[0];
                    if fixed_set.contains(&!u) {
                        return None;
                    }
                    if fixed_set.insert(u) {
                        fixed.push(u);
                        pending.push(u);
                    }
                }
                _ => next.push(reduced),
            }
        }
        current = next;
    }
    Some((current, fixed))
}

fn compact(clauses: &[Vec<Literal>], assignment: Vec<Literal>) -> Subproblem {
    let var_map: Vec<u32> = clauses
        .iter()
        .flatten()
        .map(|l| l.var)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |v: u32| var_map.binary_search(&v).expect("variable present") as u32 + 1;
    let formula = Formula::new(
        var_map.len() as u32,
        clauses
            .iter()
            .map(|c| Clause::new(c.iter().map(|l| Literal::new(index(l.var), l.sign)).collect()))
            .collect(),
    );
    Subproblem {
        formula,
        var_map,
        assignment,
    }
}

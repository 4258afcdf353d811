//! Residual clause-literal graph of a live solver, the network's input at a refocus.

use crate::cnf::SparseGraph;
use crate::solver::{Lit, Solver};
use crate::{Error, Result};

/// Builds the clause-literal graph of the formula simplified by the current
/// assignment.
///
/// Original clauses are traversed before learned clauses (in learn order).
/// Satisfied clauses are skipped, false literals dropped, and unassigned
/// variables renumbered densely in ascending order. Traversal stops before the
/// first row that would push the edge count past `edge_cap`; `None` is
/// returned if the original clauses alone do not fit. Must be called at a
/// propagation fixpoint.
pub fn extract_graph(solver: &Solver, edge_cap: usize) -> Option<SparseGraph> {
    let n = solver.num_vars();
    let mut compact = vec![u32::MAX; n];
    let mut var_map = Vec::new();
    for v in 0..n {
        if !solver.is_assigned(v as u32 + 1) {
            compact[v] = var_map.len() as u32;
            var_map.push(v as u32 + 1);
        }
    }
    let k = var_map.len();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut rows = 0u32;
    let mut row = Vec::new();

    // Returns false when the cap is hit.
    let mut emit = |lits: &[Lit], edges: &mut Vec<(u32, u32)>, rows: &mut u32| -> bool {
        if lits.iter().any(|&l| solver.lit_is_true(l)) {
            return true;
        }
        row.clear();
        row.extend(lits.iter().filter(|&&l| !solver.lit_is_false(l)).map(|&l| {
            SparseGraph::column(k, compact[l.var()] as usize, l.sign())
        }));
        assert!(
            row.len() >= 2,
            "residual clause of length {} at a propagation fixpoint",
            row.len()
        );
        if edges.len() + row.len() > edge_cap {
            return false;
        }
        edges.extend(row.iter().map(|&c| (*rows, c)));
        *rows += 1;
        true
    };

    for lits in solver.original_clause_lits() {
        if !emit(lits, &mut edges, &mut rows) {
            return None;
        }
    }
    for lits in solver.learned_clause_lits() {
        if !emit(lits, &mut edges, &mut rows) {
            break;
        }
    }
    Some(SparseGraph {
        num_clauses: rows as usize,
        num_vars: k,
        edges,
        var_map,
    })
}

/// Maps a distribution over compacted variables back to original variables
/// `1..=num_vars` (result index `var - 1`); variables outside the map get 0.
pub fn lift_distribution(probs: &[f64], var_map: &[u32], num_vars: usize) -> Result<Vec<f64>> {
    if probs.len() != var_map.len() {
        return Err(Error::Shape(format!(
            "{} probabilities for {} mapped variables",
            probs.len(),
            var_map.len()
        )));
    }
    let mut out = vec![0.0; num_vars];
    for (&p, &v) in probs.iter().zip(var_map) {
        out[v as usize - 1] += p;
    }
    Ok(out)
}

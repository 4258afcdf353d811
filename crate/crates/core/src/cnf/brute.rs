use super::Formula;
use crate::{Error, Result};

pub const BRUTE_FORCE_MAX_VARS: u32 = 26;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BruteResult {
    /// A model, indexed by `var - 1`.
    Sat(Vec<bool>),
    Unsat,
}

impl BruteResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, BruteResult::Sat(_))
    }
}

/// Exhaustive enumeration of all `2^n` assignments.
pub fn brute_force(f: &Formula) -> Result<BruteResult> {
    if f.num_vars > BRUTE_FORCE_MAX_VARS {
        return Err(Error::TooManyVariables(f.num_vars));
    }
    // Clause as (positive mask, negative mask); satisfied iff a & pos != 0 || !a & neg != 0.
    let masks: Vec<(u32, u32)> = f
        .clauses
        .iter()
        .map(|c| {
            c.literals.iter().fold((0u32, 0u32), |(p, n), l| {
                let bit = 1u32 << (l.var - 1);
                if l.sign {
                    (p | bit, n)
                } else {
                    (p, n | bit)
                }
            })
        })
        .collect();
    if masks.iter().any(|&(p, n)| p == 0 && n == 0) {
        return Ok(BruteResult::Unsat);
    }
    let total: u64 = 1 << f.num_vars;
    for a in 0..total {
        let a = a as u32;
        if masks.iter().all(|&(p, n)| a & p != 0 || !a & n != 0) {
            let model = (0..f.num_vars).map(|i| a >> i & 1 == 1).collect();
            return Ok(BruteResult::Sat(model));
        }
    }
    Ok(BruteResult::Unsat)
}

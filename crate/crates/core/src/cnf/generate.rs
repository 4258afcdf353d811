use rand::seq::index::sample;
use rand::Rng as _;

use super::{Clause, Formula, Literal};
use crate::{rng, Error, Result};

/// Uniform random k-SAT: each clause has `k` distinct variables with
/// independent uniform polarities.
pub fn random_ksat(n: u32, m: usize, k: u32, seed: u64) -> Result<Formula> {
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "clause width {k} exceeds variable count {n}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let clauses = (0..m)
        .map(|_| {
            let vars = sample(&mut rng, n as usize, k as usize);
            Clause::new(
                vars.into_iter()
                    .map(|v| Literal::new(v as u32 + 1, rng.random::<bool>()))
                    .collect(),
            )
        })
        .collect();
    Ok(Formula::new(n, clauses))
}

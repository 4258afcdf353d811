//! Periodic refocusing: scheduling, oracles, and the conflict-count schedule.

use std::time::Duration;

use rand::Rng as _;

use crate::cnf::SparseGraph;
use crate::rng::Rng;
use crate::{Error, Result};

/// Conflict schedule `min(base + quad * (N-1)^2, cap)` for the N-th refocus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub base: u64,
    pub quad: u64,
    pub cap: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            base: 50_000,
            quad: 1_000,
            cap: 250_000,
        }
    }
}

impl Schedule {
    pub fn threshold(&self, n: u64) -> Result<u64> {
        if n < 1 {
            return Err(Error::InvalidArgument("refocus ordinal must be >= 1".into()));
        }
        let k = n - 1;
        let grown = k
            .checked_mul(k)
            .and_then(|sq| sq.checked_mul(self.quad))
            .and_then(|q| q.checked_add(self.base))
            .unwrap_or(u64::MAX);
        Ok(grown.min(self.cap))
    }
}

/// Conflicts required before the `n`-th refocus under the default schedule.
pub fn schedule_threshold(n: u64) -> Result<u64> {
    Schedule::default().threshold(n)
}

/// No refocusing happens until the warm-up has elapsed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WarmUp {
    WallClock(Duration),
    Conflicts(u64),
}

impl Default for WarmUp {
    fn default() -> Self {
        WarmUp::WallClock(Duration::from_secs(15))
    }
}

impl std::str::FromStr for WarmUp {
    type Err = Error;

    /// `15s` / `2.5s` for wall-clock, `1000c` for conflicts.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad warm-up `{s}`, expected e.g. `15s` or `1000c`"));
        if let Some(x) = s.strip_suffix('s') {
            let secs: f64 = x.parse().map_err(|_| bad())?;
            if !(secs >= 0.0) {
                return Err(bad());
            }
            Ok(WarmUp::WallClock(Duration::from_secs_f64(secs)))
        } else if let Some(x) = s.strip_suffix('c') {
            Ok(WarmUp::Conflicts(x.parse().map_err(|_| bad())?))
        } else {
            Err(bad())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefocusConfig {
    /// Rescaling constant applied to `prob * n_graph_vars`.
    pub kappa: f64,
    /// Logits are multiplied by this before the softmax.
    pub temperature: f64,
    pub schedule: Schedule,
    pub warmup: WarmUp,
    /// Refocus only when `ema_fast > margin * ema_slow`.
    pub glue_margin: f64,
    pub edge_cap: usize,
}

impl Default for RefocusConfig {
    fn default() -> Self {
        RefocusConfig {
            kappa: 1e4,
            temperature: 4.0,
            schedule: Schedule::default(),
            warmup: WarmUp::default(),
            glue_margin: 1.1,
            edge_cap: 10_000_000,
        }
    }
}

/// Supplies per-variable logits for the residual graph at a refocus.
///
/// Implementations must be usable from several solver threads at once.
pub trait RefocusOracle: Sync {
    /// One logit per compacted variable of `graph`. `rng` is the solver's
    /// seeded stream.
    fn logits(&self, graph: &SparseGraph, rng: &mut Rng) -> Vec<f64>;
}

/// Logits drawn uniformly and independently from `[0, 1]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomOracle;

impl RefocusOracle for RandomOracle {
    fn logits(&self, graph: &SparseGraph, rng: &mut Rng) -> Vec<f64> {
        (0..graph.num_vars).map(|_| rng.random::<f64>()).collect()
    }
}

/// Oracle returning fixed logits per original variable (test and debugging aid).
#[derive(Clone, Debug)]
pub struct FixedOracle {
    /// Indexed by original variable minus one.
    pub logits: Vec<f64>,
}

impl RefocusOracle for FixedOracle {
    fn logits(&self, graph: &SparseGraph, _rng: &mut Rng) -> Vec<f64> {
        graph
            .var_map
            .iter()
            .map(|&v| self.logits.get(v as usize - 1).copied().unwrap_or(0.0))
            .collect()
    }
}

impl<F> RefocusOracle for F
where
    F: Fn(&SparseGraph) -> Vec<f64> + Sync,
{
    fn logits(&self, graph: &SparseGraph, _rng: &mut Rng) -> Vec<f64> {
        self(graph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values() {
        assert_eq!(schedule_threshold(1).unwrap(), 50_000);
        assert_eq!(schedule_threshold(2).unwrap(), 51_000);
        assert_eq!(schedule_threshold(15).unwrap(), 246_000);
        assert_eq!(schedule_threshold(16).unwrap(), 250_000);
        assert_eq!(schedule_threshold(1_000_000_000).unwrap(), 250_000);
        assert!(schedule_threshold(0).is_err());
    }

    #[test]
    fn warmup_parse() {
        assert_eq!("15s".parse::<WarmUp>().unwrap(), WarmUp::WallClock(Duration::from_secs(15)));
        assert_eq!("1000c".parse::<WarmUp>().unwrap(), WarmUp::Conflicts(1000));
        assert!("15".parse::<WarmUp>().is_err());
    }
}

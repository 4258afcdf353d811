//! Clause-literal graph neural network.
//!
//! Literal embeddings start from a shared learned vector. Each iteration
//! aggregates `Concat(L, L̄)` into clauses through the adjacency matrix, runs the
//! clause MLP, standardizes clause rows, scatters back to literals, runs the
//! literal MLP with a 0.1 residual, and applies LayerNorm. The policy head maps
//! each variable's (positive, negative) embedding pair to one logit; the
//! optional value head averages the same map and applies a sigmoid.

mod forward;
mod io;
mod params;
mod tensor;

pub use forward::{forward, forward_cached, ForwardCache, ForwardOutput, RESIDUAL};
pub(crate) use forward::{leaky_grad, MlpCache};
pub use io::{load_weights, load_weights_for, save_weights};
pub use params::{Linear, Mlp, NetParams};
pub use tensor::Matrix;
pub(crate) use tensor::{sparse_mul, sparse_mul_t, standardize_rows_backward};

use crate::cnf::SparseGraph;
use crate::rng::Rng;
use crate::solver::RefocusOracle;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    pub delta_l: usize,
    pub delta_c: usize,
    pub tau_iters: usize,
    pub n_l: usize,
    pub n_c: usize,
    pub n_p: usize,
    pub dropout: f64,
    pub leaky_slope: f64,
    pub ln_eps: f64,
    pub value_head: bool,
}

impl HyperParams {
    /// Small network used for supervised glue prediction.
    pub fn supervised() -> Self {
        HyperParams {
            delta_l: 16,
            delta_c: 64,
            tau_iters: 2,
            n_l: 2,
            n_c: 2,
            n_p: 3,
            dropout: 0.15,
            leaky_slope: 0.01,
            ln_eps: 1e-5,
            value_head: false,
        }
    }

    /// Larger network with a value head for reinforcement learning.
    pub fn rl() -> Self {
        HyperParams {
            delta_l: 32,
            delta_c: 64,
            tau_iters: 4,
            n_l: 3,
            n_c: 3,
            n_p: 4,
            value_head: true,
            ..HyperParams::supervised()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "supervised" => Ok(HyperParams::supervised()),
            "rl" => Ok(HyperParams::rl()),
            other => Err(Error::InvalidArgument(format!("unknown preset `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [self.delta_l, self.delta_c, self.tau_iters, self.n_l, self.n_c, self.n_p];
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("dimensions and depths must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument("dropout must lie in [0, 1)".into()));
        }
        if !(self.ln_eps > 0.0) {
            return Err(Error::InvalidArgument("ln_eps must be positive".into()));
        }
        Ok(())
    }

    /// Same architecture (dropout is a training setting and is ignored).
    pub fn same_architecture(&self, other: &HyperParams) -> bool {
        HyperParams {
            dropout: 0.0,
            ..self.clone()
        } == HyperParams {
            dropout: 0.0,
            ..other.clone()
        }
    }
}

/// `softmax(temperature * logits)`, stabilized by max subtraction.
pub fn policy_distribution(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::InvalidArgument("empty logits".into()));
    }
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument("temperature must be positive".into()));
    }
    let scaled: Vec<f64> = logits.iter().map(|x| x * temperature).collect();
    Ok(crate::math::softmax(&scaled))
}

/// Network-backed refocus oracle (evaluation mode, no dropout).
#[derive(Clone, Debug)]
pub struct NeuroOracle {
    pub params: NetParams,
    pub hyper: HyperParams,
}

impl RefocusOracle for NeuroOracle {
    fn logits(&self, graph: &SparseGraph, _rng: &mut Rng) -> Vec<f64> {
        match forward(&self.params, &self.hyper, graph, false, 0) {
            Ok(out) => out.policy_logits,
            Err(e) => {
                log::warn!("network forward failed: {e}");
                Vec::new()
            }
        }
    }
}

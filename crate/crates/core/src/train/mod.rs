//! Training: exact reverse-mode gradients of the network, the supervised KL
//! objective with averaged SGD, and REINFORCE with a value baseline.

mod backward;
mod gradcheck;
mod losses;
mod optim;
mod rl;
mod supervised;

pub use backward::{backward, OutputGrad};
pub use gradcheck::{
    check_kl_gradients, check_reinforce_gradients, finite_difference_check, CheckTolerance,
    TensorCheck,
};
pub use losses::{
    kl_logit_grad, kl_loss, normalize_advantages, reinforce_coefficients, reinforce_loss,
    reinforce_loss_with, target_distribution, Episode, EpisodeStep, ReinforceConfig,
    ReinforceLoss, StepCoefficients,
};
pub use optim::{add_scaled, clip_gradients, grad_norm, Adam, Asgd};
pub use rl::{sample_index, 
    evaluate_policy, evaluate_uniform, rollout_episode, train_rl, train_rl_from, train_rl_with, RlConfig, RlMetrics,
    RlReport,
};
pub use supervised::{
    mean_kl, train_supervised, train_supervised_from, SupervisedConfig, SupervisedReport,
};

use crate::cnf::SparseGraph;
use crate::net::{forward_cached, HyperParams, NetParams};
use crate::{Error, Result};

/// A graph paired with per-variable glue counts.
#[derive(Clone, Debug, PartialEq)]
pub struct SupervisedExample {
    pub graph: SparseGraph,
    pub glue_counts: Vec<u64>,
}

impl SupervisedExample {
    pub fn new(graph: SparseGraph, glue_counts: Vec<u64>) -> Result<Self> {
        let ex = SupervisedExample { graph, glue_counts };
        ex.validate()?;
        Ok(ex)
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        if self.glue_counts.len() != self.graph.num_vars {
            return Err(Error::Shape(format!(
                "{} glue counts for {} variables",
                self.glue_counts.len(),
                self.graph.num_vars
            )));
        }
        if self.glue_counts.is_empty() {
            return Err(Error::InvalidArgument("example without variables".into()));
        }
        Ok(())
    }
}

/// KL loss of one example and its parameter gradient.
pub fn kl_loss_and_grad(
    p: &NetParams,
    h: &HyperParams,
    ex: &SupervisedExample,
    train_mode: bool,
    dropout_seed: u64,
) -> Result<(f64, NetParams)> {
    let (out, cache) = forward_cached(p, h, &ex.graph, train_mode, dropout_seed)?;
    let pi = target_distribution(&ex.glue_counts)?;
    let loss = kl_loss(&pi, &out.policy_logits)?;
    let upstream = OutputGrad {
        logits: kl_logit_grad(&pi, &out.policy_logits),
        value: 0.0,
    };
    Ok((loss, backward(p, h, &ex.graph, &cache, &upstream)?))
}

/// REINFORCE loss and gradient with frozen coefficients.
pub fn reinforce_loss_and_grad(
    episodes: &[Episode],
    coefs: &[StepCoefficients],
    p: &NetParams,
    h: &HyperParams,
    cfg: &ReinforceConfig,
) -> Result<(ReinforceLoss, NetParams)> {
    let steps: Vec<&EpisodeStep> = episodes.iter().flat_map(|e| &e.steps).collect();
    if steps.is_empty() || steps.len() != coefs.len() {
        return Err(Error::Shape("coefficients do not match the batch".into()));
    }
    let scale = 1.0 / steps.len() as f64;
    let items: Vec<(&EpisodeStep, &StepCoefficients)> = steps.into_iter().zip(coefs).collect();
    let parts = crate::par::map(&items, |(s, c)| -> Result<(f64, f64, NetParams)> {
        let (out, cache) = forward_cached(p, h, &s.observation, false, 0)?;
        let v = out
            .value
            .ok_or_else(|| Error::InvalidArgument("REINFORCE needs a value head".into()))?;
        let (pl, vl, up) = losses::reinforce_step(&out.policy_logits, v, s.action, c, cfg, scale);
        Ok((pl, vl, backward(p, h, &s.observation, &cache, &up)?))
    });
    let mut grad = p.zeros_like();
    let (mut policy, mut value) = (0.0, 0.0);
    for part in parts {
        let (pl, vl, g) = part?;
        policy += pl;
        value += vl;
        add_scaled(&mut grad, &g, 1.0);
    }
    Ok((
        ReinforceLoss {
            policy,
            value,
            total: policy + cfg.value_coef * value,
        },
        grad,
    ))
}

#[cfg(test)]
mod tests;

use crate::cnf::SparseGraph;
use crate::math::{log_softmax, softmax};
use crate::net::{forward, HyperParams, NetParams};
use crate::{Error, Result};

/// Softmax of raw glue counts.
pub fn target_distribution(counts: &[u64]) -> Result<Vec<f64>> {
    if counts.is_empty() {
        return Err(Error::InvalidArgument("empty glue counts".into()));
    }
    let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Ok(softmax(&xs))
}

/// `KL(π ‖ softmax(logits))`.
pub fn kl_loss(pi: &[f64], logits: &[f64]) -> Result<f64> {
    if pi.len() != logits.len() {
        return Err(Error::Shape(format!(
            "target has {} entries, logits {}",
            pi.len(),
            logits.len()
        )));
    }
    let lq = log_softmax(logits);
    Ok(pi
        .iter()
        .zip(&lq)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * (p.ln() - q))
        .sum())
}

/// Gradient of [`kl_loss`] with respect to the logits: `softmax(logits) − π`.
pub fn kl_logit_grad(pi: &[f64], logits: &[f64]) -> Vec<f64> {
    softmax(logits).iter().zip(pi).map(|(q, p)| q - p).collect()
}

/// One transition of a rollout.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeStep {
    pub observation: SparseGraph,
    /// Compacted variable index into the observation.
    pub action: usize,
    /// `log π̂(action)` under the policy that generated the step.
    pub behavior_logprob: f64,
    pub reward: f64,
}

/// A terminated episode.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Episode {
    pub steps: Vec<EpisodeStep>,
}

impl Episode {
    pub fn total_return(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// Undiscounted returns-to-go.
    pub fn returns_to_go(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out: Vec<f64> = self
            .steps
            .iter()
            .rev()
            .map(|s| {
                acc += s.reward;
                acc
            })
            .collect();
        out.reverse();
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReinforceConfig {
    pub value_coef: f64,
    pub ratio_clip: f64,
    pub adv_eps: f64,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        ReinforceConfig {
            value_coef: 0.5,
            ratio_clip: 10.0,
            adv_eps: 1e-8,
        }
    }
}

/// Per-step quantities treated as constants when differentiating.
#[derive(Clone, Debug, PartialEq)]
pub struct StepCoefficients {
    /// Clipped importance ratio `ρ_t`.
    pub ratio: f64,
    /// Normalized advantage.
    pub advantage: f64,
    /// Return-to-go clamped to the value head's range.
    pub value_target: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReinforceLoss {
    pub policy: f64,
    pub value: f64,
    pub total: f64,
}

/// Normalizes to zero mean and unit variance; leaves a centered vector when the
/// variance is below `eps`.
pub fn normalize_advantages(adv: &[f64], eps: f64) -> Vec<f64> {
    if adv.is_empty() {
        return Vec::new();
    }
    let mean = crate::math::mean(adv);
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / adv.len() as f64;
    let sd = var.sqrt();
    adv.iter().map(|a| (a - mean) / (sd + eps)).collect()
}

fn flatten(episodes: &[Episode]) -> Vec<(&EpisodeStep, f64)> {
    episodes
        .iter()
        .flat_map(|e| e.steps.iter().zip(e.returns_to_go()))
        .collect()
}

/// Importance ratios, normalized advantages and value targets under the
/// current parameters.
pub fn reinforce_coefficients(
    episodes: &[Episode],
    p: &NetParams,
    h: &HyperParams,
    cfg: &ReinforceConfig,
) -> Result<Vec<StepCoefficients>> {
    let steps = flatten(episodes);
    if steps.is_empty() {
        return Err(Error::InvalidArgument("empty episode batch".into()));
    }
    if !h.value_head {
        return Err(Error::InvalidArgument("REINFORCE needs a value head".into()));
    }
    let evals = crate::par::map(&steps, |(s, _)| forward(p, h, &s.observation, false, 0));
    let mut raw_adv = Vec::with_capacity(steps.len());
    let mut ratios = Vec::with_capacity(steps.len());
    for ((s, ret), out) in steps.iter().zip(evals) {
        let out = out?;
        let logp = log_softmax(&out.policy_logits)[s.action];
        ratios.push((logp - s.behavior_logprob).exp().clamp(0.0, cfg.ratio_clip));
        raw_adv.push(ret - out.value.expect("value head"));
    }
    let adv = normalize_advantages(&raw_adv, cfg.adv_eps);
    Ok(steps
        .iter()
        .zip(ratios)
        .zip(adv)
        .map(|(((_, ret), ratio), advantage)| StepCoefficients {
            ratio,
            advantage,
            value_target: ret.clamp(0.0, 1.0),
        })
        .collect())
}

/// Loss value and output gradient of one step, given frozen coefficients;
/// `scale` is `1 / batch size`.
pub(crate) fn reinforce_step(
    logits: &[f64],
    value: f64,
    action: usize,
    c: &StepCoefficients,
    cfg: &ReinforceConfig,
    scale: f64,
) -> (f64, f64, super::OutputGrad) {
    let lp = log_softmax(logits);
    let probs = softmax(logits);
    let w = c.ratio * c.advantage;
    let policy = -w * lp[action] * scale;
    let value_err = value - c.value_target;
    let value_loss = value_err * value_err * scale;
    let mut dlogits: Vec<f64> = probs.iter().map(|q| w * q * scale).collect();
    dlogits[action] -= w * scale;
    let grad = super::OutputGrad {
        logits: dlogits,
        value: cfg.value_coef * 2.0 * value_err * scale,
    };
    (policy, value_loss, grad)
}

/// Evaluates the REINFORCE objective with the given frozen coefficients.
pub fn reinforce_loss_with(
    episodes: &[Episode],
    coefs: &[StepCoefficients],
    p: &NetParams,
    h: &HyperParams,
    cfg: &ReinforceConfig,
) -> Result<ReinforceLoss> {
    let steps = flatten(episodes);
    if steps.len() != coefs.len() || steps.is_empty() {
        return Err(Error::Shape("coefficients do not match the batch".into()));
    }
    let scale = 1.0 / steps.len() as f64;
    let (mut policy, mut value) = (0.0, 0.0);
    for ((s, _), c) in steps.iter().zip(coefs) {
        let out = forward(p, h, &s.observation, false, 0)?;
        let v = out.value.ok_or_else(|| Error::InvalidArgument("REINFORCE needs a value head".into()))?;
        let (pl, vl, _) = reinforce_step(&out.policy_logits, v, s.action, c, cfg, scale);
        policy += pl;
        value += vl;
    }
    Ok(ReinforceLoss {
        policy,
        value,
        total: policy + cfg.value_coef * value,
    })
}

/// REINFORCE objective with coefficients computed from the current parameters.
pub fn reinforce_loss(
    episodes: &[Episode],
    p: &NetParams,
    h: &HyperParams,
    cfg: &ReinforceConfig,
) -> Result<ReinforceLoss> {
    let coefs = reinforce_coefficients(episodes, p, h, cfg)?;
    reinforce_loss_with(episodes, &coefs, p, h, cfg)
}

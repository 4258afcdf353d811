use super::{kl_loss_and_grad, reinforce_coefficients, reinforce_loss_and_grad, reinforce_loss_with};
use super::{Episode, ReinforceConfig, SupervisedExample};
use crate::net::{forward, HyperParams, NetParams};
use crate::train::{kl_loss, target_distribution};
use crate::Result;

/// Agreement of one tensor's analytic gradient with central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub entries: usize,
    /// Entries compared.
    pub checked: usize,
    /// Entries outside `rel_tol * max(|a|, |n|) + abs_tol`.
    pub failures: usize,
    pub max_abs_err: f64,
    /// Largest `|a − n| / max(|a|, |n|)` among entries above `abs_tol`.
    pub max_rel_err: f64,
}

impl TensorCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckTolerance {
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Check at most this many evenly spaced entries per tensor.
    pub max_entries: Option<usize>,
}

impl Default for CheckTolerance {
    fn default() -> Self {
        CheckTolerance {
            step: 1e-5,
            rel_tol: 1e-4,
            abs_tol: 1e-8,
            max_entries: None,
        }
    }
}

/// Compares `analytic` with central differences of `loss` for every entry.
pub fn finite_difference_check(
    p: &NetParams,
    analytic: &NetParams,
    tol: CheckTolerance,
    loss: impl Fn(&NetParams) -> Result<f64>,
) -> Result<Vec<TensorCheck>> {
    let names: Vec<String> = p.tensors().into_iter().map(|t| t.0).collect();
    let grads: Vec<Vec<f64>> = analytic.tensors().into_iter().map(|t| t.2.to_vec()).collect();
    let mut work = p.clone();
    let mut out = Vec::with_capacity(names.len());
    for (t, name) in names.into_iter().enumerate() {
        let len = grads[t].len();
        let mut check = TensorCheck {
            name,
            entries: len,
            checked: 0,
            failures: 0,
            max_abs_err: 0.0,
            max_rel_err: 0.0,
        };
        let count = tol.max_entries.map_or(len, |m| m.min(len));
        for k in 0..count {
            let i = k * len / count;
            check.checked += 1;
            let orig = work.tensors_mut()[t][i];
            work.tensors_mut()[t][i] = orig + tol.step;
            let up = loss(&work)?;
            work.tensors_mut()[t][i] = orig - tol.step;
            let down = loss(&work)?;
            work.tensors_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * tol.step);
            let a = grads[t][i];
            let err = (a - numeric).abs();
            let mag = a.abs().max(numeric.abs());
            check.max_abs_err = check.max_abs_err.max(err);
            if mag > tol.abs_tol {
                check.max_rel_err = check.max_rel_err.max(err / mag);
            }
            if err > tol.rel_tol * mag + tol.abs_tol {
                check.failures += 1;
            }
        }
        out.push(check);
    }
    Ok(out)
}

/// Gradient check of the KL objective on one example.
pub fn check_kl_gradients(
    p: &NetParams,
    h: &HyperParams,
    ex: &SupervisedExample,
    train_mode: bool,
    dropout_seed: u64,
    tol: CheckTolerance,
) -> Result<Vec<TensorCheck>> {
    let (_, grad) = kl_loss_and_grad(p, h, ex, train_mode, dropout_seed)?;
    let pi = target_distribution(&ex.glue_counts)?;
    finite_difference_check(p, &grad, tol, |q| {
        let out = forward(q, h, &ex.graph, train_mode, dropout_seed)?;
        kl_loss(&pi, &out.policy_logits)
    })
}

/// Gradient check of the REINFORCE objective; importance ratios, advantages
/// and value targets are frozen at `p`.
pub fn check_reinforce_gradients(
    p: &NetParams,
    h: &HyperParams,
    episodes: &[Episode],
    cfg: &ReinforceConfig,
    tol: CheckTolerance,
) -> Result<Vec<TensorCheck>> {
    let coefs = reinforce_coefficients(episodes, p, h, cfg)?;
    let (_, grad) = reinforce_loss_and_grad(episodes, &coefs, p, h, cfg)?;
    finite_difference_check(p, &grad, tol, |q| {
        reinforce_loss_with(episodes, &coefs, q, h, cfg).map(|l| l.total)
    })
}

use rand::Rng as _;

use super::params::{Mlp, NetParams};
use super::tensor::{sparse_mul, sparse_mul_t, standardize_rows, Matrix};
use super::HyperParams;
use crate::cnf::SparseGraph;
use crate::math::sigmoid;
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Weight of the residual connection in the literal update.
pub const RESIDUAL: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput {
    /// One logit per (compacted) variable of the graph.
    pub policy_logits: Vec<f64>,
    /// Value estimate in (0, 1) when the network has a value head.
    pub value: Option<f64>,
}

/// Activations of one MLP application, kept for the backward pass.
#[derive(Clone, Debug, Default)]
pub(crate) struct MlpCache {
    /// Input of each layer.
    pub inputs: Vec<Matrix>,
    /// Pre-activation of each hidden layer.
    pub pre: Vec<Matrix>,
    /// Dropout scale factors (0 or 1/(1-p)) of each hidden layer, if active.
    pub masks: Vec<Option<Vec<f64>>>,
}

#[derive(Clone, Debug)]
pub(crate) struct IterCache {
    pub c_mlp: MlpCache,
    pub c_norm: Matrix,
    pub c_inv_std: Vec<f64>,
    pub l_mlp: MlpCache,
    pub ln_hat: Matrix,
    pub ln_inv_std: Vec<f64>,
}

/// Everything the backward pass needs.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub(crate) iters: Vec<IterCache>,
    pub(crate) literals: Matrix,
    pub(crate) policy: MlpCache,
    pub(crate) value: Option<(MlpCache, Vec<f64>)>,
    pub(crate) num_vars: usize,
}

impl ForwardCache {
    /// Standardized clause embeddings of iteration `t`.
    pub fn clause_embeddings(&self, t: usize) -> &Matrix {
        &self.iters[t].c_norm
    }

    /// Final literal embeddings (`2N × δ_L`).
    pub fn literal_embeddings(&self) -> &Matrix {
        &self.literals
    }
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

pub(crate) fn leaky_grad(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        slope
    }
}

pub(crate) fn mlp_forward(
    mlp: &Mlp,
    x: Matrix,
    h: &HyperParams,
    dropout: Option<&mut Rng>,
) -> (Matrix, MlpCache) {
    let n = mlp.layers.len();
    let mut cache = MlpCache::default();
    let mut cur = x;
    let mut dropout = dropout;
    for (l, layer) in mlp.layers.iter().enumerate() {
        let z = layer.forward(&cur);
        cache.inputs.push(cur);
        if l + 1 == n {
            cur = z;
            break;
        }
        let mut a = z.clone();
        a.data.iter_mut().for_each(|v| *v = leaky(*v, h.leaky_slope));
        let mask = match dropout.as_deref_mut() {
            Some(rng) if h.dropout > 0.0 => {
                let keep = 1.0 - h.dropout;
                let m: Vec<f64> = (0..a.data.len())
                    .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                a.data.iter_mut().zip(&m).for_each(|(v, s)| *v *= s);
                Some(m)
            }
            _ => None,
        };
        cache.pre.push(z);
        cache.masks.push(mask);
        cur = a;
    }
    (cur, cache)
}

/// `Concat(L, L̄)`: each literal row followed by its negation's row.
pub(crate) fn concat_negated(l: &Matrix, num_vars: usize) -> Matrix {
    let d = l.cols;
    let mut out = Matrix::zeros(l.rows, 2 * d);
    for i in 0..l.rows {
        let neg = if i < num_vars { i + num_vars } else { i - num_vars };
        let row = out.row_mut(i);
        row[..d].copy_from_slice(l.row(i));
        row[d..].copy_from_slice(l.row(neg));
    }
    out
}

/// Per-variable head input: positive-literal row followed by negative-literal row.
pub(crate) fn variable_pairs(l: &Matrix, num_vars: usize) -> Matrix {
    let d = l.cols;
    let mut out = Matrix::zeros(num_vars, 2 * d);
    for v in 0..num_vars {
        let row = out.row_mut(v);
        row[..d].copy_from_slice(l.row(v));
        row[d..].copy_from_slice(l.row(v + num_vars));
    }
    out
}

fn check_inputs(p: &NetParams, h: &HyperParams, g: &SparseGraph) -> Result<()> {
    h.validate()?;
    p.check_shapes(h)?;
    let cols = 2 * g.num_vars;
    if g.edges
        .iter()
        .any(|&(r, c)| r as usize >= g.num_clauses || c as usize >= cols)
    {
        return Err(Error::Shape(format!(
            "edge outside the {}x{} adjacency matrix",
            g.num_clauses, cols
        )));
    }
    Ok(())
}

/// Forward pass without keeping intermediates.
pub fn forward(
    p: &NetParams,
    h: &HyperParams,
    g: &SparseGraph,
    train_mode: bool,
    dropout_seed: u64,
) -> Result<ForwardOutput> {
    forward_cached(p, h, g, train_mode, dropout_seed).map(|(out, _)| out)
}

/// Forward pass that also returns the activations needed for gradients.
pub fn forward_cached(
    p: &NetParams,
    h: &HyperParams,
    g: &SparseGraph,
    train_mode: bool,
    dropout_seed: u64,
) -> Result<(ForwardOutput, ForwardCache)> {
    check_inputs(p, h, g)?;
    let n = g.num_vars;
    let mut drop_rng = rng::seeded(dropout_seed);

    let mut l = Matrix::broadcast(&p.l_init, 2 * n);
    let mut iters = Vec::with_capacity(h.tau_iters);
    for t in 0..h.tau_iters {
        let ll = concat_negated(&l, n);
        let a = sparse_mul(&g.edges, g.num_clauses, &ll);
        let (c, c_mlp) = mlp_forward(&p.c_update, a, h, train_mode.then_some(&mut drop_rng));
        let (c_norm, c_inv_std) = standardize_rows(&c, h.ln_eps);
        let b = sparse_mul_t(&g.edges, 2 * n, &c_norm);
        let (mut pre, l_mlp) = mlp_forward(&p.l_update, b, h, train_mode.then_some(&mut drop_rng));
        pre.add_scaled(&l, RESIDUAL);
        let (ln_hat, ln_inv_std) = standardize_rows(&pre, h.ln_eps);
        let mut next = ln_hat.clone();
        for i in 0..next.rows {
            for ((x, s), b) in next.row_mut(i).iter_mut().zip(&p.ln_scale).zip(&p.ln_shift) {
                *x = *x * s + b;
            }
        }
        if !next.is_finite() || !c_norm.is_finite() {
            return Err(Error::NonFinite(format!("message passing iteration {t}")));
        }
        l = next;
        iters.push(IterCache {
            c_mlp,
            c_norm,
            c_inv_std,
            l_mlp,
            ln_hat,
            ln_inv_std,
        });
    }

    let pairs = variable_pairs(&l, n);
    let (logits, policy) = mlp_forward(&p.policy, pairs.clone(), h, train_mode.then_some(&mut drop_rng));
    let policy_logits = logits.data;
    if policy_logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("policy head".into()));
    }
    let (value, value_cache) = match &p.value {
        Some(vmlp) => {
            if n == 0 {
                return Err(Error::Shape("value head needs at least one variable".into()));
            }
            let (hv, cache) = mlp_forward(vmlp, pairs, h, train_mode.then_some(&mut drop_rng));
            let mean = hv.data.iter().sum::<f64>() / n as f64;
            let v = sigmoid(mean);
            if !v.is_finite() {
                return Err(Error::NonFinite("value head".into()));
            }
            (Some(v), Some((cache, hv.data)))
        }
        None => (None, None),
    };
    Ok((
        ForwardOutput {
            policy_logits,
            value,
        },
        ForwardCache {
            iters,
            literals: l,
            policy,
            value: value_cache,
            num_vars: n,
        },
    ))
}

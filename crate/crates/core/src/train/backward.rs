use crate::cnf::SparseGraph;
use crate::net::{
    leaky_grad, sparse_mul, sparse_mul_t, standardize_rows_backward, ForwardCache, HyperParams,
    Matrix, Mlp, MlpCache, NetParams, RESIDUAL,
};
use crate::{Error, Result};

/// Upstream gradient of a scalar loss with respect to the network outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputGrad {
    /// `dLoss/dlogit` per variable.
    pub logits: Vec<f64>,
    /// `dLoss/dv̂`, ignored without a value head.
    pub value: f64,
}

impl OutputGrad {
    pub fn zeros(num_vars: usize) -> Self {
        OutputGrad {
            logits: vec![0.0; num_vars],
            value: 0.0,
        }
    }
}

/// Returns `dLoss/dinput` and accumulates layer gradients into `grad`.
fn mlp_backward(mlp: &Mlp, cache: &MlpCache, dy: Matrix, slope: f64, grad: &mut Mlp) -> Matrix {
    let mut dy = dy;
    for l in (0..mlp.layers.len()).rev() {
        let mut dx = mlp.layers[l].backward(&cache.inputs[l], &dy, &mut grad.layers[l]);
        if l == 0 {
            return dx;
        }
        let pre = &cache.pre[l - 1];
        for (d, &z) in dx.data.iter_mut().zip(&pre.data) {
            *d *= leaky_grad(z, slope);
        }
        if let Some(mask) = &cache.masks[l - 1] {
            dx.data.iter_mut().zip(mask).for_each(|(d, m)| *d *= m);
        }
        dy = dx;
    }
    unreachable!("an MLP has at least one layer")
}

/// Scatters a per-variable head gradient back onto the literal rows.
fn add_pair_grad(dl: &mut Matrix, dpairs: &Matrix, n: usize) {
    let d = dl.cols;
    for v in 0..n {
        let src = dpairs.row(v);
        dl.row_mut(v).iter_mut().zip(&src[..d]).for_each(|(a, b)| *a += b);
        dl.row_mut(v + n).iter_mut().zip(&src[d..]).for_each(|(a, b)| *a += b);
    }
}

/// Reverse-mode gradient of a scalar loss through a cached forward pass.
///
/// `cache` must come from [`crate::net::forward_cached`] on the same `p`, `h`
/// and `g`. The returned parameters hold gradients, one per tensor.
pub fn backward(
    p: &NetParams,
    h: &HyperParams,
    g: &SparseGraph,
    cache: &ForwardCache,
    upstream: &OutputGrad,
) -> Result<NetParams> {
    let n = cache.num_vars;
    if upstream.logits.len() != n {
        return Err(Error::Shape(format!(
            "{} logit gradients for {n} variables",
            upstream.logits.len()
        )));
    }
    let slope = h.leaky_slope;
    let mut grad = p.zeros_like();
    let d = h.delta_l;

    let mut dl = Matrix::zeros(2 * n, d);
    let dlogits = Matrix::from_vec(n, 1, upstream.logits.clone());
    let dpairs = mlp_backward(&p.policy, &cache.policy, dlogits, slope, &mut grad.policy);
    add_pair_grad(&mut dl, &dpairs, n);
    if let (Some(vmlp), Some((vcache, hv)), Some(vgrad)) =
        (&p.value, &cache.value, grad.value.as_mut())
    {
        let mean = hv.iter().sum::<f64>() / n as f64;
        let v = crate::math::sigmoid(mean);
        let dh = upstream.value * v * (1.0 - v) / n as f64;
        let dpairs = mlp_backward(vmlp, vcache, Matrix::from_vec(n, 1, vec![dh; n]), slope, vgrad);
        add_pair_grad(&mut dl, &dpairs, n);
    }

    for it in cache.iters.iter().rev() {
        // L = hat * scale + shift
        let mut dhat = dl.clone();
        for i in 0..dl.rows {
            let (gr, hr) = (dl.row(i), it.ln_hat.row(i));
            for k in 0..d {
                grad.ln_scale[k] += gr[k] * hr[k];
                grad.ln_shift[k] += gr[k];
            }
            dhat.row_mut(i).iter_mut().zip(&p.ln_scale).for_each(|(x, s)| *x *= s);
        }
        let dpre = standardize_rows_backward(&dhat, &it.ln_hat, &it.ln_inv_std);
        let mut dprev = dpre.clone();
        dprev.data.iter_mut().for_each(|x| *x *= RESIDUAL);

        let db = mlp_backward(&p.l_update, &it.l_mlp, dpre, slope, &mut grad.l_update);
        let dc_norm = sparse_mul(&g.edges, g.num_clauses, &db);
        let dc = standardize_rows_backward(&dc_norm, &it.c_norm, &it.c_inv_std);
        let da = mlp_backward(&p.c_update, &it.c_mlp, dc, slope, &mut grad.c_update);
        let dll = sparse_mul_t(&g.edges, 2 * n, &da);
        for i in 0..2 * n {
            let neg = if i < n { i + n } else { i - n };
            let src = dll.row(i);
            dprev.row_mut(i).iter_mut().zip(&src[..d]).for_each(|(a, b)| *a += b);
            dprev.row_mut(neg).iter_mut().zip(&src[d..]).for_each(|(a, b)| *a += b);
        }
        dl = dprev;
    }
    for i in 0..dl.rows {
        grad.l_init.iter_mut().zip(dl.row(i)).for_each(|(a, b)| *a += b);
    }

    for (name, _, data) in grad.tensors() {
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {name}")));
        }
    }
    Ok(grad)
}

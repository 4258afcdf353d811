use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::tensor::Matrix;
use super::HyperParams;
use crate::rng;

/// Fully connected layer `y = x Wᵀ + b` with `W` stored `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(input: usize, output: usize) -> Self {
        Linear {
            weight: Matrix::zeros(output, input),
            bias: vec![0.0; output],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows
    }

    pub(crate) fn forward(&self, x: &Matrix) -> Matrix {
        let (din, dout) = (self.input_dim(), self.output_dim());
        debug_assert_eq!(x.cols, din);
        let mut y = Matrix::zeros(x.rows, dout);
        for i in 0..x.rows {
            let xi = x.row(i);
            let yi = y.row_mut(i);
            for o in 0..dout {
                let w = self.weight.row(o);
                yi[o] = self.bias[o] + crate::math::dot(w, xi);
            }
        }
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub(crate) fn backward(&self, x: &Matrix, dy: &Matrix, grad: &mut Linear) -> Matrix {
        let (din, dout) = (self.input_dim(), self.output_dim());
        let mut dx = Matrix::zeros(x.rows, din);
        for i in 0..x.rows {
            let xi = x.row(i);
            let gi = dy.row(i);
            for o in 0..dout {
                let g = gi[o];
                if g == 0.0 {
                    continue;
                }
                grad.bias[o] += g;
                for (w, &xv) in grad.weight.row_mut(o).iter_mut().zip(xi) {
                    *w += g * xv;
                }
                for (d, &w) in dx.row_mut(i).iter_mut().zip(self.weight.row(o)) {
                    *d += g * w;
                }
            }
        }
        dx
    }
}

/// Feed-forward network with LeakyReLU between layers and a linear output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    /// `depth` layers mapping `input -> output`; hidden width is `max(input, output)`.
    pub fn zeros(input: usize, output: usize, depth: usize) -> Self {
        let hidden = input.max(output);
        let layers = (0..depth)
            .map(|l| {
                let i = if l == 0 { input } else { hidden };
                let o = if l + 1 == depth { output } else { hidden };
                Linear::zeros(i, o)
            })
            .collect();
        Mlp { layers }
    }
}

/// All learnable tensors of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct NetParams {
    pub l_init: Vec<f64>,
    pub c_update: Mlp,
    pub l_update: Mlp,
    pub policy: Mlp,
    pub value: Option<Mlp>,
    pub ln_scale: Vec<f64>,
    pub ln_shift: Vec<f64>,
}

impl NetParams {
    /// Correctly shaped parameters, all zero (LayerNorm scale included).
    pub fn zeros(h: &HyperParams) -> Self {
        let (dl, dc) = (h.delta_l, h.delta_c);
        NetParams {
            l_init: vec![0.0; dl],
            c_update: Mlp::zeros(2 * dl, dc, h.n_c),
            l_update: Mlp::zeros(dc, dl, h.n_l),
            policy: Mlp::zeros(2 * dl, 1, h.n_p),
            value: h.value_head.then(|| Mlp::zeros(2 * dl, 1, h.n_p)),
            ln_scale: vec![0.0; dl],
            ln_shift: vec![0.0; dl],
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.iter_mut().for_each(|x| *x = 0.0);
        }
        z
    }

    /// Glorot-uniform weights, zero biases, `l_init ~ N(0, 1/δ_L)`, identity LayerNorm.
    pub fn init(h: &HyperParams, seed: u64) -> Self {
        let mut p = NetParams::zeros(h);
        let mut rng = rng::seeded(seed);
        let scale = 1.0 / (h.delta_l as f64).sqrt();
        for x in &mut p.l_init {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x = z * scale;
        }
        let mut mlps: Vec<&mut Mlp> = vec![&mut p.c_update, &mut p.l_update, &mut p.policy];
        if let Some(v) = p.value.as_mut() {
            mlps.push(v);
        }
        for mlp in mlps {
            for layer in &mut mlp.layers {
                let (fan_in, fan_out) = (layer.input_dim() as f64, layer.output_dim() as f64);
                let bound = (6.0 / (fan_in + fan_out)).sqrt();
                for w in &mut layer.weight.data {
                    *w = rng.random_range(-bound..=bound);
                }
            }
        }
        p.ln_scale.iter_mut().for_each(|x| *x = 1.0);
        p
    }

    fn mlps(&self) -> Vec<(&'static str, &Mlp)> {
        let mut v = vec![
            ("c_update", &self.c_update),
            ("l_update", &self.l_update),
            ("policy", &self.policy),
        ];
        if let Some(m) = &self.value {
            v.push(("value", m));
        }
        v
    }

    /// Name, shape and data of every tensor in a fixed order.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out: Vec<(String, Vec<usize>, &[f64])> =
            vec![("l_init".into(), vec![self.l_init.len()], &self.l_init)];
        for (name, mlp) in self.mlps() {
            for (i, layer) in mlp.layers.iter().enumerate() {
                out.push((
                    format!("{name}.{i}.weight"),
                    vec![layer.weight.rows, layer.weight.cols],
                    &layer.weight.data,
                ));
                out.push((format!("{name}.{i}.bias"), vec![layer.bias.len()], &layer.bias));
            }
        }
        out.push(("layernorm.scale".into(), vec![self.ln_scale.len()], &self.ln_scale));
        out.push(("layernorm.shift".into(), vec![self.ln_shift.len()], &self.ln_shift));
        out
    }

    /// Mutable views in the same order as [`NetParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![&mut self.l_init];
        let mut mlps: Vec<&mut Mlp> = vec![&mut self.c_update, &mut self.l_update, &mut self.policy];
        if let Some(v) = self.value.as_mut() {
            mlps.push(v);
        }
        for mlp in mlps {
            for layer in &mut mlp.layers {
                out.push(&mut layer.weight.data);
                out.push(&mut layer.bias);
            }
        }
        out.push(&mut self.ln_scale);
        out.push(&mut self.ln_shift);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.2.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.2.iter().all(|x| x.is_finite()))
    }

    /// Global L2 norm over all tensors.
    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.2.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Checks that every tensor has the shape implied by `h`.
    pub fn check_shapes(&self, h: &HyperParams) -> crate::Result<()> {
        let expected = NetParams::zeros(h);
        let a: Vec<(String, Vec<usize>)> = self.tensors().into_iter().map(|t| (t.0, t.1)).collect();
        let b: Vec<(String, Vec<usize>)> = expected.tensors().into_iter().map(|t| (t.0, t.1)).collect();
        if a != b {
            return Err(crate::Error::Shape(
                "parameters do not match hyperparameters".into(),
            ));
        }
        Ok(())
    }

    /// Rounds every entry to single precision (the weight-file precision).
    pub fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x = *x as f32 as f64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_and_shaped() {
        let h = HyperParams::supervised();
        let a = NetParams::init(&h, 3);
        assert_eq!(a, NetParams::init(&h, 3));
        assert_ne!(a, NetParams::init(&h, 4));
        assert!(a.is_finite());
        a.check_shapes(&h).unwrap();
        assert_eq!(a.c_update.layers.len(), 2);
        assert_eq!(a.policy.layers.len(), 3);
        assert_eq!(a.c_update.layers[0].input_dim(), 32);
        assert_eq!(a.c_update.layers[1].output_dim(), 64);
        assert!(a.value.is_none());
        let mut r = NetParams::init(&HyperParams::rl(), 1);
        assert_eq!(r.value.as_ref().unwrap().layers.len(), 4);
        let names: Vec<String> = r.tensors().into_iter().map(|t| t.0).collect();
        assert_eq!(names.len(), r.tensors_mut().len());
        assert!(names.contains(&"value.3.bias".to_string()));
    }

    #[test]
    fn glorot_bounds() {
        let h = HyperParams::supervised();
        let p = NetParams::init(&h, 0);
        for layer in &p.c_update.layers {
            let b = (6.0 / (layer.input_dim() + layer.output_dim()) as f64).sqrt();
            assert!(layer.weight.data.iter().all(|w| w.abs() <= b));
            assert!(layer.bias.iter().all(|&x| x == 0.0));
        }
        assert!(p.ln_scale.iter().all(|&x| x == 1.0));
        assert!(p.ln_shift.iter().all(|&x| x == 0.0));
    }
}

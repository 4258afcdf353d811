use crate::net::NetParams;

/// `acc += scale * g`, tensor by tensor.
pub fn add_scaled(acc: &mut NetParams, g: &NetParams, scale: f64) {
    let src = g.tensors();
    for (dst, (_, _, s)) in acc.tensors_mut().into_iter().zip(src) {
        dst.iter_mut().zip(s).for_each(|(a, b)| *a += scale * b);
    }
}

/// Global L2 norm of a gradient.
pub fn grad_norm(g: &NetParams) -> f64 {
    g.norm()
}

/// Rescales `grads` so the global norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_gradients(grads: &mut NetParams, max_norm: f64) -> f64 {
    assert!(max_norm > 0.0, "max_norm must be positive");
    let norm = grads.norm();
    if norm > max_norm {
        let s = max_norm / norm;
        for t in grads.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= s);
        }
    }
    norm
}

/// Plain SGD with Polyak iterate averaging.
#[derive(Clone, Debug)]
pub struct Asgd {
    pub lr: f64,
    /// Running mean of the iterates since averaging started.
    pub average: NetParams,
    averaged_steps: u64,
    averaging: bool,
}

impl Asgd {
    /// Averaging is off until [`Asgd::start_averaging`]; until then the average
    /// tracks the live parameters.
    pub fn new(lr: f64, p: &NetParams) -> Self {
        Asgd {
            lr,
            average: p.clone(),
            averaged_steps: 0,
            averaging: false,
        }
    }

    pub fn start_averaging(&mut self) {
        self.averaging = true;
    }

    pub fn is_averaging(&self) -> bool {
        self.averaging
    }

    pub fn step(&mut self, p: &mut NetParams, grads: &NetParams) {
        add_scaled(p, grads, -self.lr);
        if !self.averaging {
            self.average = p.clone();
            return;
        }
        let k = self.averaged_steps as f64;
        let live = p.tensors();
        for (avg, (_, _, cur)) in self.average.tensors_mut().into_iter().zip(live) {
            avg.iter_mut().zip(cur).for_each(|(a, c)| *a += (c - *a) / (k + 1.0));
        }
        self.averaged_steps += 1;
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: NetParams,
    v: NetParams,
    t: i32,
}

impl Adam {
    pub fn new(lr: f64, p: &NetParams) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: p.zeros_like(),
            v: p.zeros_like(),
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, p: &mut NetParams, grads: &NetParams) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2) = (self.beta1, self.beta2);
        let g = grads.tensors();
        let m = self.m.tensors_mut();
        let v = self.v.tensors_mut();
        for (((pt, (_, _, gt)), mt), vt) in p.tensors_mut().into_iter().zip(g).zip(m).zip(v) {
            for i in 0..pt.len() {
                mt[i] = b1 * mt[i] + (1.0 - b1) * gt[i];
                vt[i] = b2 * vt[i] + (1.0 - b2) * gt[i] * gt[i];
                let mhat = mt[i] / c1;
                let vhat = vt[i] / c2;
                pt[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

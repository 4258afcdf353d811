/// Exponential moving average with warm-up bias correction.
///
/// The raw average starts at zero; [`Ema::value`] divides by `1 - (1-α)^t` so the
/// first sample is reproduced exactly.
#[derive(Clone, Copy, Debug)]
pub struct Ema {
    alpha: f64,
    raw: f64,
    count: u64,
}

impl Ema {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha <= 1.0, "EMA coefficient must lie in (0, 1]");
        Ema {
            alpha,
            raw: 0.0,
            count: 0,
        }
    }

    pub fn update(&mut self, x: f64) {
        self.raw += self.alpha * (x - self.raw);
        self.count += 1;
    }

    pub fn value(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            // 1 - (1-α)^t without cancellation for small α
            let t = self.count as f64;
            self.raw / -(t * (-self.alpha).ln_1p()).exp_m1()
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

/// Fast and slow glue-level averages driving restarts and refocusing.
#[derive(Clone, Copy, Debug)]
pub struct GlueEmas {
    pub fast: Ema,
    pub slow: Ema,
}

impl GlueEmas {
    pub fn new(alpha_fast: f64, alpha_slow: f64) -> Self {
        GlueEmas {
            fast: Ema::new(alpha_fast),
            slow: Ema::new(alpha_slow),
        }
    }

    pub fn update(&mut self, glue: u32) {
        self.fast.update(glue as f64);
        self.slow.update(glue as f64);
    }

    /// `fast > margin * slow`.
    pub fn fast_exceeds(&self, margin: f64) -> bool {
        self.fast.value() > margin * self.slow.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAST: f64 = 1.0 / 32.0;
    const SLOW: f64 = 1.0 / 16384.0;

    #[test]
    fn first_sample_is_exact() {
        let mut e = GlueEmas::new(FAST, SLOW);
        e.update(3);
        assert!((e.fast.value() - 3.0).abs() < 1e-12);
        assert!((e.slow.value() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn constant_stream_converges() {
        let mut e = GlueEmas::new(FAST, SLOW);
        for _ in 0..5000 {
            e.update(4);
            assert!(e.fast.value() >= 0.0 && e.slow.value() >= 0.0);
        }
        assert!((e.fast.value() - 4.0).abs() < 1e-9);
        assert!((e.slow.value() - 4.0).abs() < 1e-9);
        assert!(!e.fast_exceeds(1.1));
    }

    /// Independent simulation of the two bias-corrected recurrences.
    fn simulate(stream: &[f64], alpha: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut raw = 0.0;
        for (t, &g) in stream.iter().enumerate() {
            raw = (1.0 - alpha) * raw + alpha * g;
            out.push(raw / (1.0 - (1.0 - alpha).powi(t as i32 + 1)));
        }
        out
    }

    #[test]
    fn degrading_stream_crosses_gate() {
        let mut stream = vec![2.0; 1000];
        stream.extend(std::iter::repeat_n(8.0, 64));
        let fast = simulate(&stream, FAST);
        let slow = simulate(&stream, SLOW);
        let first = (1000..stream.len())
            .find(|&i| fast[i] > 1.1 * slow[i])
            .expect("gate must open within 64 high-glue conflicts");
        // Frozen from the simulation: the 10% gate opens on the 2nd high-glue
        // conflict, the 25% restart gate on the 3rd.
        assert_eq!(first - 1000 + 1, 2);
        let restart = (1000..stream.len()).find(|&i| fast[i] > 1.25 * slow[i]).unwrap();
        assert_eq!(restart - 1000 + 1, 3);

        let mut e = GlueEmas::new(FAST, SLOW);
        for (i, &g) in stream.iter().enumerate() {
            e.update(g as u32);
            assert!((e.fast.value() - fast[i]).abs() < 1e-9);
            assert!((e.slow.value() - slow[i]).abs() < 1e-9);
        }
        assert!(e.fast_exceeds(1.1));
    }
}

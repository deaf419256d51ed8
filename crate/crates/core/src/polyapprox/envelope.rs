use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::DensePolynomial;
use crate::rng::stream_rng;

/// Growth bound for a degree-`ell` approximant in `k` variables that is
/// within `eps` of a function bounded by `r` on the radius-`radius` ball:
/// `s -> (r + eps) (2(k + ell))^(3 ell) k^(ell/2) (s / radius)^ell`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutOfRadiusEnvelope {
    pub r: f64,
    pub eps: f64,
    pub radius: f64,
    pub k: usize,
    pub ell: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub passed: bool,
    /// Largest `ln|p(x)| - ln envelope(|x|)` seen.
    pub worst_log_ratio: f64,
    pub n_points: usize,
}

impl OutOfRadiusEnvelope {
    /// Natural log of the envelope at norm `s` (the envelope itself
    /// overflows quickly).
    pub fn log_eval(&self, s: f64) -> f64 {
        let (k, l) = (self.k as f64, self.ell as f64);
        (self.r + self.eps).ln() + 3.0 * l * (2.0 * (k + l)).ln() + 0.5 * l * k.ln() + l * (s / self.radius).ln()
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.log_eval(s).exp()
    }

    /// Checks `|p(x)| <= envelope(|x|)` at `n` points with norms uniform in
    /// `[radius, 3 radius]` and uniformly random directions.
    pub fn check<P: Fn(&[f64]) -> f64>(&self, p: P, n: usize, seed: u64) -> EnvelopeCheck {
        let mut rng = stream_rng(seed, 0);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..n {
            let s = rng.random_range(self.radius..=3.0 * self.radius);
            let mut x: Vec<f64> = (0..self.k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            x.iter_mut().for_each(|v| *v *= s / norm);
            worst = worst.max(p(&x).abs().ln() - self.log_eval(s));
        }
        EnvelopeCheck { passed: worst <= 1e-12, worst_log_ratio: worst, n_points: n }
    }
}

/// Envelope for `p`, taking `k = p.dim()`.
pub fn out_of_radius_bound(p: &DensePolynomial, r: f64, eps: f64, radius: f64, ell: u32) -> OutOfRadiusEnvelope {
    OutOfRadiusEnvelope { r, eps, radius, k: p.dim(), ell }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::sigmoid;
    use crate::polyapprox::chebyshev_approx_univariate;

    #[test]
    fn plug_in_at_radius() {
        let p = DensePolynomial::linear(&[1.0, 1.0]);
        let env = out_of_radius_bound(&p, 2.0, 0.5, 3.0, 2);
        let want = 2.5 * 8f64.powi(6) * 2.0;
        assert!((env.eval(3.0) / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_and_sigmoid_pass() {
        let p = DensePolynomial::univariate(&[0.0, 1.0]);
        let env = out_of_radius_bound(&p, 2.0, 0.0, 2.0, 1);
        assert!(env.check(|x| p.eval(x), 1000, 3).passed);
        let q = chebyshev_approx_univariate(sigmoid, 4.0, 20).unwrap();
        let env = out_of_radius_bound(&q, 1.0, 1e-2, 4.0, 20);
        let c = env.check(|x| q.eval(x), 1000, 4);
        assert!(c.passed, "{c:?}");
    }
}

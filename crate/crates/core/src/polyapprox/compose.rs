use serde::{Deserialize, Serialize};

use super::{
    ball_sup_error, degree_for_target, grid_sup_error, multi_index_count, ApproxCertificate, ChebyshevApprox,
    DensePolynomial, PolyApproxError, SUP_BALL_SAMPLES, SUP_GRID_POINTS,
};
use crate::nets::{sigmoid, Activation, NeuralNet};

const MAX_LAYER_DEGREE: u32 = 1024;
const MAX_ATTEMPTS: usize = 6;
const EXPANSION_CAP: u128 = 60_000;
const MEASURE_SEED: u64 = 0x5EED;

/// Polynomial surrogate of a sigmoid network: `p_1 = W1 x`,
/// `p_{i+1} = W_{i+1} q_i(p_i)` with univariate Chebyshev approximants `q_i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComposedApprox {
    pub weights: Vec<Vec<Vec<f64>>>,
    pub layers: Vec<ChebyshevApprox>,
}

impl ComposedApprox {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut p: Vec<f64> = mat_vec(&self.weights[0], x);
        for (q, w) in self.layers.iter().zip(&self.weights[1..]) {
            let s: Vec<f64> = p.iter().map(|v| q.eval(*v)).collect();
            p = mat_vec(w, &s);
        }
        p[0]
    }

    pub fn degree_vector(&self) -> Vec<u32> {
        self.layers.iter().map(|q| q.degree()).collect()
    }

    /// Monomial expansion, available for depth-2 nets of moderate size.
    pub fn expand(&self) -> Option<DensePolynomial> {
        if self.layers.len() != 1 {
            return None;
        }
        let d = self.weights[0][0].len();
        let q = &self.layers[0];
        if multi_index_count(d, q.degree()) > EXPANSION_CAP {
            return None;
        }
        let qm = q.to_monomial().ok()?;
        let mut out = DensePolynomial::zero(d);
        for (row, c) in self.weights[0].iter().zip(&self.weights[1][0]) {
            out = out.add(&qm.compose_univariate(&DensePolynomial::linear(row)).scale(*c));
        }
        Some(out)
    }
}

fn mat_vec(w: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    w.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// Approximates a sigmoid network of depth `t >= 2` on the radius-`radius`
/// ball. `q_1` covers `[-R ||W1||_{2,inf}, R ||W1||_{2,inf}]`, the later
/// `q_i` cover `[-2W, 2W]`, each to accuracy `eps / (2W)^t`. The result is
/// re-measured against the network; if it misses `eps` the per-layer target
/// is tightened and the construction repeated.
///
/// Returns the approximant, its degree vector and the certificate.
pub fn compose_sigmoid_net_approx(
    net: &NeuralNet,
    eps: f64,
    radius: f64,
) -> Result<(ComposedApprox, Vec<u32>, ApproxCertificate), PolyApproxError> {
    net.validate()?;
    if net.activation != Activation::Sigmoid || net.depth() < 2 {
        return Err(PolyApproxError::UnsupportedNet);
    }
    if !(eps > 0.0) {
        return Err(PolyApproxError::InvalidTarget(eps));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(PolyApproxError::InvalidRadius(radius));
    }
    let norms = net.norms();
    let t = net.depth();
    // With W < 1/2 the nominal target would exceed eps; never loosen below it.
    let base = (2.0 * norms.w_sum_l1).max(1.0);
    let first_radius = if norms.w1_two_inf > 0.0 { radius * norms.w1_two_inf } else { 1.0 };
    let mut target = eps / base.powi(t as i32);
    let d = net.input_dim();
    let mut measured = f64::INFINITY;
    for _ in 0..MAX_ATTEMPTS {
        let mut layers = Vec::with_capacity(t - 1);
        for i in 0..t - 1 {
            let r = if i == 0 { first_radius } else { base };
            let deg = degree_for_target(sigmoid, r, target, MAX_LAYER_DEGREE)?;
            layers.push(ChebyshevApprox::interpolate(sigmoid, r, deg)?);
        }
        let approx = ComposedApprox { weights: net.weights.clone(), layers };
        let (sup, n_points, how) = if d == 1 {
            let s = grid_sup_error(|x| approx.eval(&[x]), |x| net.eval_unchecked(&[x]), radius, SUP_GRID_POINTS);
            (s.value, s.n_points, "grid")
        } else {
            let s = ball_sup_error(
                |x| approx.eval(x),
                |x| net.eval_unchecked(x),
                d,
                radius,
                SUP_BALL_SAMPLES,
                MEASURE_SEED,
            );
            (s.value, s.n_points, "ball-monte-carlo")
        };
        measured = sup;
        if sup <= eps {
            let degrees = approx.degree_vector();
            let degree: u64 = degrees.iter().map(|&v| v as u64).product();
            let (l1, l2) = match approx.expand() {
                Some(p) => {
                    let (a, b) = p.coeff_bounds();
                    (Some(a), Some(b))
                }
                None => (None, None),
            };
            let w = norms.w_sum_l1.max(1.0);
            let reference = radius
                * radius.ln().max(1.0)
                * norms.w1_two_inf.max(1.0)
                * w.powi(t as i32 - 2)
                * (t as f64 * (w / eps).ln().max(1.0)).powi(t as i32 - 1);
            let cert = ApproxCertificate {
                radius,
                target_eps: eps,
                measured_sup_error: sup,
                measurement: how.into(),
                n_points,
                degree,
                coeff_l1: l1,
                coeff_l2_sq: l2,
                reference_degree: Some(reference),
                implementation_constant: Some(degree as f64 / reference),
            };
            return Ok((approx, degrees, cert));
        }
        target /= 4.0;
    }
    Err(PolyApproxError::CertificateFailed { measured, target: eps })
}

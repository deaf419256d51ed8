//! Bias-free feedforward networks `f_1 = W1 x`, `f_i = W_i sigma(f_{i-1})`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::stream_rng;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("network has no layers")]
    Empty,
    #[error("layer {layer}: {msg}")]
    Shape { layer: usize, msg: String },
    #[error("input has dimension {found}, network expects {expected}")]
    InputDim { expected: usize, found: usize },
    #[error("non-finite weight in layer {0}")]
    NonFinite(usize),
    #[error("invalid activation: {0}")]
    Activation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    #[serde(rename = "relu")]
    ReLU,
    /// `x -> clamp(L x, -1, 1)`, an `L`-Lipschitz activation with `sigma(0) = 0`.
    CustomLipschitz(f64),
}

impl Activation {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Activation::Sigmoid => sigmoid(x),
            Activation::ReLU => x.max(0.0),
            Activation::CustomLipschitz(l) => (l * x).clamp(-1.0, 1.0),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            Activation::Sigmoid => 0.25,
            Activation::ReLU => 1.0,
            Activation::CustomLipschitz(l) => l.abs(),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Weight matrices are row-major: `weights[i][r]` is row `r` of layer `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralNet {
    pub weights: Vec<Vec<Vec<f64>>>,
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetNorms {
    /// `||W1||_{2,inf}`, the largest row norm of the first layer.
    pub w1_two_inf: f64,
    /// `W = sum_{i>=2} ||W_i||_1` (entrywise).
    pub w_sum_l1: f64,
    /// `sqrt(k) ||W1||_{2,inf} (W L)^(t-1)`.
    pub lipschitz_cert: f64,
    pub activation_lipschitz: f64,
    /// Width `k` of the first layer.
    pub k: usize,
    pub depth: usize,
}

impl NeuralNet {
    pub fn new(weights: Vec<Vec<Vec<f64>>>, activation: Activation) -> Result<Self, NetError> {
        let net = Self { weights, activation };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.weights.is_empty() {
            return Err(NetError::Empty);
        }
        if let Activation::CustomLipschitz(l) = self.activation {
            if !(l.is_finite() && l >= 0.0) {
                return Err(NetError::Activation(format!("Lipschitz constant {l}")));
            }
        }
        let mut cols = self.weights[0].first().map(|r| r.len()).unwrap_or(0);
        if cols == 0 {
            return Err(NetError::Shape { layer: 1, msg: "input dimension must be positive".into() });
        }
        for (i, w) in self.weights.iter().enumerate() {
            if w.is_empty() {
                return Err(NetError::Shape { layer: i + 1, msg: "no rows".into() });
            }
            if let Some(r) = w.iter().find(|r| r.len() != cols) {
                return Err(NetError::Shape {
                    layer: i + 1,
                    msg: format!("row of length {} where {cols} expected", r.len()),
                });
            }
            if w.iter().flatten().any(|v| !v.is_finite()) {
                return Err(NetError::NonFinite(i + 1));
            }
            cols = w.len();
        }
        if cols != 1 {
            return Err(NetError::Shape {
                layer: self.weights.len(),
                msg: format!("output layer has {cols} rows, expected 1"),
            });
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0][0].len()
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    /// Width of the first hidden layer (`k`).
    pub fn width(&self) -> usize {
        self.weights[0].len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, NetError> {
        if x.len() != self.input_dim() {
            return Err(NetError::InputDim { expected: self.input_dim(), found: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut f = mat_vec(&self.weights[0], x);
        for w in &self.weights[1..] {
            let s: Vec<f64> = f.iter().map(|v| self.activation.apply(*v)).collect();
            f = mat_vec(w, &s);
        }
        f[0]
    }

    pub fn norms(&self) -> NetNorms {
        self.norms_with_lipschitz(self.activation.lipschitz())
    }

    /// Norms with an overridden activation Lipschitz constant.
    pub fn norms_with_lipschitz(&self, l: f64) -> NetNorms {
        let w1_two_inf = two_inf_norm(&self.weights[0]);
        let w_sum_l1: f64 = self.weights[1..].iter().map(|w| l1_norm(w)).sum();
        let k = self.width();
        let t = self.depth();
        let lipschitz_cert = (k as f64).sqrt() * w1_two_inf * (w_sum_l1 * l).powi(t as i32 - 1);
        NetNorms { w1_two_inf, w_sum_l1, lipschitz_cert, activation_lipschitz: l, k, depth: t }
    }
}

fn mat_vec(w: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    w.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// `sqrt(max_i sum_j a_ij^2)`.
pub fn two_inf_norm(a: &[Vec<f64>]) -> f64 {
    a.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max).sqrt()
}

/// Entrywise `sum |a_ij|`.
pub fn l1_norm(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().map(|v| v.abs()).sum()
}

pub fn net_eval(net: &NeuralNet, x: &[f64]) -> Result<f64, NetError> {
    net.eval(x)
}

pub fn net_norms(net: &NeuralNet) -> NetNorms {
    net.norms()
}

/// Random net with `layer_sizes = (s_1, .., s_t)` (ending in 1) on input
/// dimension `d`, entries i.i.d. uniform in `[-weight_scale, weight_scale]`.
pub fn random_net(
    d: usize,
    layer_sizes: &[usize],
    activation: Activation,
    weight_scale: f64,
    seed: u64,
) -> Result<(NeuralNet, NetNorms), NetError> {
    let mut rng = stream_rng(seed, 0);
    let mut cols = d;
    let mut weights = Vec::with_capacity(layer_sizes.len());
    for &rows in layer_sizes {
        let w: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| if weight_scale > 0.0 { rng.random_range(-weight_scale..=weight_scale) } else { 0.0 })
                    .collect()
            })
            .collect();
        weights.push(w);
        cols = rows;
    }
    let net = NeuralNet::new(weights, activation)?;
    let norms = net.norms();
    Ok((net, norms))
}

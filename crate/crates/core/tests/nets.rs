mod common;

use common::{gaussian_vec, rng, uniform_vec};
use nalgebra::DMatrix;
use rand::Rng;
use tds_core::linalg::spectral_norm;
use tds_core::nets::{l1_norm, net_norms, random_net, two_inf_norm, Activation, NeuralNet};

fn lipschitz_ratio(net: &NeuralNet, r: &mut rand_chacha::ChaCha8Rng, pairs: usize) -> f64 {
    let d = net.input_dim();
    let mut worst = 0.0f64;
    for i in 0..pairs {
        let x = uniform_vec(r, d, -2.0, 2.0);
        // Mix large and tiny perturbations to probe both regimes.
        let scale = if i % 2 == 0 { 1.0 } else { 1e-4 };
        let u: Vec<f64> = gaussian_vec(r, d).into_iter().map(|v| v * scale).collect();
        let xu: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();
        let num = (net.eval(&xu).unwrap() - net.eval(&x).unwrap()).abs();
        let den = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(num / den);
    }
    worst
}

#[test]
fn certificate_dominates_difference_quotients() {
    let mut r = rng(20);
    let activations = [Activation::Sigmoid, Activation::ReLU, Activation::CustomLipschitz(2.0)];
    for i in 0..20u64 {
        let depth = 2 + (i % 2) as usize;
        let d = 2 + (i % 4) as usize;
        let sizes: Vec<usize> = if depth == 2 { vec![3, 1] } else { vec![4, 3, 1] };
        let act = activations[(i % 3) as usize];
        let (net, norms) = random_net(d, &sizes, act, 1.5, 900 + i).unwrap();
        let ratio = lipschitz_ratio(&net, &mut r, 10_000);
        assert!(ratio <= norms.lipschitz_cert * (1.0 + 1e-9), "net {i}: ratio {ratio} > cert {}", norms.lipschitz_cert);
    }
}

#[test]
fn matrix_norm_facts() {
    let mut r = rng(21);
    for _ in 0..200 {
        let m = r.random_range(1..7);
        let n = r.random_range(1..7);
        let a: Vec<Vec<f64>> = (0..m).map(|_| uniform_vec(&mut r, n, -3.0, 3.0)).collect();
        let dense = DMatrix::from_fn(m, n, |i, j| a[i][j]);
        let spec = spectral_norm(&dense);
        assert!(spec <= l1_norm(&a) * (1.0 + 1e-12));
        assert!(spec <= (m as f64).sqrt() * two_inf_norm(&a) * (1.0 + 1e-12));
    }
}

#[test]
fn random_net_reports_recomputable_norms() {
    let (a, na) = random_net(5, &[3, 1], Activation::Sigmoid, 1.0, 7).unwrap();
    let (b, _) = random_net(5, &[3, 1], Activation::Sigmoid, 1.0, 7).unwrap();
    assert_eq!(a, b);
    let w2: f64 = a.weights[1].iter().flatten().map(|v| v.abs()).sum();
    assert_eq!(na.w_sum_l1, w2);
    let w1 = a.weights[0].iter().map(|row| row.iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max).sqrt();
    assert_eq!(na.w1_two_inf, w1);
    assert_eq!(net_norms(&a), na);
    assert!((na.lipschitz_cert - 3f64.sqrt() * w1 * w2 * 0.25).abs() <= 1e-12 * na.lipschitz_cert);

    let (zero, _) = random_net(4, &[5, 2, 1], Activation::ReLU, 0.0, 3).unwrap();
    let mut r = rng(22);
    for _ in 0..100 {
        assert_eq!(zero.eval(&uniform_vec(&mut r, 4, -5.0, 5.0)).unwrap(), 0.0);
    }
}

#[test]
fn net_json_format() {
    let net: NeuralNet = serde_json::from_str(r#"{"weights":[[[1.0,2.0]],[[3.0]]],"activation":"sigmoid"}"#).unwrap();
    assert_eq!(net.depth(), 2);
    assert_eq!(net.eval(&[0.0, 0.0]).unwrap(), 1.5);
    let back: NeuralNet = serde_json::from_str(&serde_json::to_string(&net).unwrap()).unwrap();
    assert_eq!(back, net);
}

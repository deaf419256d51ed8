//! End-to-end acceptance suite: thirteen criteria, one PASS/FAIL line each,
//! each held to its wall-clock budget. Exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{
    ball_point_by_rejection, dot, feature_map_oracle, gaussian_vec, generalized_rho_cholesky, lambda_grid_oracle,
    mean_se, rng, uniform_vec,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use tds_harness::tds_core;
use tds_harness::{report_csv, report_json, run_experiment, ExperimentConfig, PipelineConfig};

use tds_core::kernels::{cmk_eval, gram_matrix, mk_eval, KernelSpec};
use tds_core::nets::{random_net, sigmoid, Activation};
use tds_core::polyapprox::{
    ball_sup_error, compose_sigmoid_net_approx, degree_for_target, grid_sup_error, monomials, multi_indices,
    ChebyshevApprox, DensePolynomial,
};
use tds_core::scenarios::{adversarial_label_scenario, sample, MarginalSpec, ScenarioSpec, Target};
use tds_core::tds_kernel::{
    empirical_second_moment, fit_with_gram, spectral_shift_statistic, KernelRunOptions, ReferenceFeatureMap,
};
use tds_core::tds_moment::{moment_test, reference_moments, ReferenceMode, UniformApproxParams};
use tds_core::{Dataset, TdsParams};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn kernel_oracle_equivalence() -> Outcome {
    let mut r = rng(1001);
    let mut worst = 0.0f64;
    for d in 1..=3 {
        for ell in 1..=4 {
            for _ in 0..100 {
                let x = uniform_vec(&mut r, d, -1.0, 1.0);
                let y = uniform_vec(&mut r, d, -1.0, 1.0);
                let k = mk_eval(&x, &y, ell, true).map_err(|e| e.to_string())?;
                let o = dot(&feature_map_oracle(&x, ell, true), &feature_map_oracle(&y, ell, true));
                worst = worst.max((k - o).abs() / o.abs().max(1.0));
            }
        }
    }
    ensure(worst <= 1e-9, || format!("multinomial relative error {worst:.2e}"))?;
    let mut worst_c = 0.0f64;
    for (l1, l2) in [(1, 2), (2, 2), (2, 1)] {
        let spec = KernelSpec::new(vec![l1, l2]).unwrap();
        for _ in 0..100 {
            let x = uniform_vec(&mut r, 2, -1.0, 1.0);
            let y = uniform_vec(&mut r, 2, -1.0, 1.0);
            let fx = feature_map_oracle(&feature_map_oracle(&x, l1, true), l2, true);
            let fy = feature_map_oracle(&feature_map_oracle(&y, l1, true), l2, true);
            let o = dot(&fx, &fy);
            let k = cmk_eval(&x, &y, &spec).map_err(|e| e.to_string())?;
            worst_c = worst_c.max((k - o).abs() / o.abs().max(1.0));
        }
    }
    ensure(worst_c <= 1e-8, || format!("composed relative error {worst_c:.2e}"))?;
    Ok(format!("max rel err {worst:.1e} (single), {worst_c:.1e} (composed)"))
}

fn composed_sup_bound() -> Outcome {
    let mut r = rng(1002);
    let mut closest = 0.0f64;
    for radius in [1.0f64, 2.0] {
        for ell in [vec![2u32], vec![2, 2]] {
            let spec = KernelSpec::new(ell.clone()).unwrap();
            let prod: u32 = ell.iter().product();
            let expected = 1f64.max((2.0 * radius).powi(2i32.pow(ell.len() as u32) * prod as i32));
            ensure(spec.sup_bound(radius) == expected, || {
                format!("sup_bound {} != {expected}", spec.sup_bound(radius))
            })?;
            for _ in 0..1000 {
                let x = ball_point_by_rejection(&mut r, 3, radius);
                let k = cmk_eval(&x, &x, &spec).map_err(|e| e.to_string())?;
                ensure(k <= expected, || format!("R={radius} ell={ell:?}: K(x,x)={k} > {expected}"))?;
                closest = closest.max(k / expected);
            }
        }
    }
    Ok(format!("largest K(x,x)/bound {closest:.3}"))
}

fn random_psd(r: &mut rand_chacha::ChaCha8Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, rank, |_, _| r.random_range(-1.0..1.0));
    &a * a.transpose()
}

fn spectral_identities() -> Outcome {
    let mut r = rng(1003);
    for _ in 0..10 {
        let phi = random_psd(&mut r, 6, 4);
        let same = spectral_shift_statistic(&phi, &phi, 1e-10).map_err(|e| e.to_string())?;
        ensure((same.rho - 1.0).abs() <= 1e-9 && !same.null_violation, || format!("rho(P, P) = {}", same.rho))?;
        let twice = spectral_shift_statistic(&phi, &(&phi * 2.0), 1e-10).map_err(|e| e.to_string())?;
        ensure((twice.rho - 2.0).abs() <= 1e-9, || format!("rho(P, 2P) = {}", twice.rho))?;
    }
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let phi = random_psd(&mut r, 6, 8) + DMatrix::identity(6, 6) * 1e-3;
        let rank = 2 + r.random_range(0..7);
        let phi_prime = random_psd(&mut r, 6, rank);
        let rep = spectral_shift_statistic(&phi, &phi_prime, 1e-10).map_err(|e| e.to_string())?;
        let oracle = generalized_rho_cholesky(&phi, &phi_prime);
        worst = worst.max((rep.rho - oracle).abs() / oracle);
    }
    ensure(worst <= 1e-8, || format!("generalized eigenvalue relative error {worst:.2e}"))?;
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
    let rep = spectral_shift_statistic(&a, &DMatrix::identity(2, 2), 1e-10).map_err(|e| e.to_string())?;
    ensure(rep.null_violation, || "diag(1,0) vs I not flagged".into())?;
    Ok(format!("max rel err vs Cholesky oracle {worst:.1e}"))
}

fn constrained_regression() -> Outcome {
    let spec = KernelSpec::new(vec![2]).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut r = rng(1100 + seed);
        let xs: Vec<Vec<f64>> = (0..6).map(|_| uniform_vec(&mut r, 1, -1.0, 1.0)).collect();
        let ys: Vec<f64> = (0..6).map(|_| r.random_range(-1.0..1.0)).collect();
        let k = gram_matrix(&xs, &spec).map_err(|e| e.to_string())?.values;
        let b = 0.05 + 0.005 * seed as f64;
        let fit = fit_with_gram(&k, &ys, b).map_err(|e| e.to_string())?;
        let oracle = lambda_grid_oracle(&k, &ys, b);
        worst = worst.max((fit.objective - oracle).abs());
        ensure(fit.constraint_value <= b * (1.0 + 1e-6), || format!("constraint {} > {b}", fit.constraint_value))?;
    }
    ensure(worst <= 1e-6, || format!("objective gap to grid oracle {worst:.2e}"))?;
    let spec3 = KernelSpec::new(vec![3]).unwrap();
    let mut r = rng(1200);
    let xs: Vec<Vec<f64>> = (0..6).map(|_| uniform_vec(&mut r, 3, -1.0, 1.0)).collect();
    let ys: Vec<f64> = (0..6).map(|_| r.random_range(-1.0..1.0)).collect();
    let k = gram_matrix(&xs, &spec3).map_err(|e| e.to_string())?.values;
    let fit = fit_with_gram(&k, &ys, 1e12).map_err(|e| e.to_string())?;
    let resid = fit.objective.sqrt();
    ensure(resid <= 1e-8, || format!("interpolation residual {resid:.2e}"))?;
    let direct = k.clone().pseudo_inverse(1e-12).map_err(|e| e.to_string())? * DVector::from_vec(ys);
    let gap = (&k * DVector::from_vec(fit.coeffs) - &k * direct).amax();
    ensure(gap <= 1e-8, || format!("fitted values differ from pseudoinverse by {gap:.2e}"))?;
    Ok(format!("max objective gap {worst:.1e}, interpolation residual {resid:.1e}"))
}

fn ball_net_scenario(test: MarginalSpec, net_seed: u64) -> ScenarioSpec {
    let (net, _) = random_net(3, &[2, 1], Activation::Sigmoid, 1.0, net_seed).unwrap();
    ScenarioSpec {
        train_marginal: MarginalSpec::uniform_ball(3, 1.0),
        test_marginal: test,
        target: Target::Net(net),
        label_noise_sd: 0.05,
        label_corruption_rate: 0.0,
        label_bound: Some(1.0),
        seed: 0,
    }
}

fn kernel_config(name: &str, scenario: ScenarioSpec, epsilon: f64, radius: f64, seed: u64) -> ExperimentConfig {
    let kernel = KernelSpec::new(vec![3]).unwrap();
    let params = TdsParams {
        epsilon,
        delta: 0.1,
        label_bound: 1.0,
        radius,
        norm_bound: 10.0,
        sup_bound: kernel.sup_bound(radius),
        desk_m: 200,
        desk_n: 2000,
        ..TdsParams::default()
    };
    ExperimentConfig {
        name: name.into(),
        scenario,
        pipeline: PipelineConfig::Kernel { kernel, options: KernelRunOptions::default(), derive_bounds: false },
        params,
        trials: 20,
        seed,
        holdout_size: 10_000,
    }
}

fn kernel_completeness() -> Outcome {
    let cfg =
        kernel_config("kernel-completeness", ball_net_scenario(MarginalSpec::uniform_ball(3, 1.0), 5), 0.1, 1.0, 5);
    let rep = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let s = &rep.summary;
    ensure(s.n_accepted >= 15, || format!("accepted {}/20, rejects {:?}", s.n_accepted, s.reject_counts))?;
    Ok(format!("accepted {}/20", s.n_accepted))
}

fn kernel_soundness() -> Outcome {
    let inflated = MarginalSpec::uniform_ball(3, 1.0).affine(vec![2f64.sqrt(), 1.0, 1.0], vec![0.0; 3]);
    let cfg = kernel_config("kernel-shift", ball_net_scenario(inflated, 6), 0.3, 1.5, 6);
    let rep = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let rejects = rep.summary.n_trials - rep.summary.n_accepted;
    let spectral = rep.summary.reject_counts.get("SpectralShift").copied().unwrap_or(0);
    ensure(rejects >= 18, || format!("rejected {rejects}/20 of the inflated marginal"))?;

    let cfg = kernel_config("kernel-benign", ball_net_scenario(MarginalSpec::uniform_ball(3, 1.0), 6), 0.3, 1.5, 7);
    let rep = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let bad: Vec<String> = rep
        .trials
        .iter()
        .filter(|t| t.sound == Some(false))
        .map(|t| format!("trial {}: loss {:?} > bound {}", t.index, t.test_loss, t.bound))
        .collect();
    ensure(bad.is_empty(), || bad.join("; "))?;
    let worst_margin = rep
        .trials
        .iter()
        .filter_map(|t| Some(t.test_loss? - t.bound - 2.0 * t.test_loss_se?))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(format!(
        "rejected {rejects}/20 inflated ({spectral} spectral); benign accepted {}/20, all sound (worst loss - bound - 2se = {worst_margin:.3})",
        rep.summary.n_accepted
    ))
}

fn spectral_concentration() -> Outcome {
    let ball = MarginalSpec::uniform_ball(3, 1.0);
    let spec = KernelSpec::new(vec![2]).unwrap();
    let anchors = sample(&ball, 20, 2001).unwrap().points().map(|x| x.to_vec()).collect();
    let fmap = ReferenceFeatureMap::new(anchors, spec);
    let phi_pop = empirical_second_moment(&fmap, &sample(&ball, 1_000_000, 2002).unwrap()).unwrap();
    let mut r = rng(2003);
    let dirs: Vec<DVector<f64>> = (0..100).map(|_| DVector::from_vec(gaussian_vec(&mut r, 20))).collect();
    let sizes = [100usize, 1_000, 10_000];
    let mut means = Vec::new();
    let mut worst_last = 0.0f64;
    for &n in &sizes {
        let devs: Vec<f64> = (0..10u64)
            .map(|seed| {
                let phi = empirical_second_moment(&fmap, &sample(&ball, n, 2100 + seed).unwrap()).unwrap();
                dirs.iter().map(|a| (a.dot(&(&phi * a)) / a.dot(&(&phi_pop * a)) - 1.0).abs()).fold(0.0, f64::max)
            })
            .collect();
        means.push(devs.iter().sum::<f64>() / devs.len() as f64);
        worst_last = devs.iter().copied().fold(0.0, f64::max);
    }
    ensure(means[0] > means[1] && means[1] > means[2], || format!("mean deviation not decreasing: {means:?}"))?;
    ensure(worst_last <= 0.1, || format!("worst deviation at N=1e4 is {worst_last:.4}"))?;
    Ok(format!("mean deviation {:.3} / {:.3} / {:.3}, worst at 1e4 {worst_last:.3}", means[0], means[1], means[2]))
}

fn moment_approx(delta: f64) -> UniformApproxParams {
    UniformApproxParams {
        ell: 2,
        t_mom: 2,
        b_coef: 10.0,
        delta,
        eps_prime: 0.01,
        r: 1.0,
        k: 1,
        radius: 1.0,
        delta_underflow: false,
    }
}

fn moment_config(name: &str, test: MarginalSpec, delta: f64, seed: u64) -> ExperimentConfig {
    let gauss = MarginalSpec::standard_gaussian(3);
    ExperimentConfig {
        name: name.into(),
        scenario: ScenarioSpec {
            train_marginal: gauss.clone(),
            test_marginal: test,
            target: Target::Polynomial(DensePolynomial::linear(&[0.5, 0.0, -0.25])),
            label_noise_sd: 0.1,
            label_corruption_rate: 0.0,
            label_bound: Some(2.0),
            seed: 0,
        },
        pipeline: PipelineConfig::Moment {
            approx: moment_approx(delta),
            reference: Some(ReferenceMode::Analytic { marginal: gauss }),
        },
        params: TdsParams { label_bound: 2.0, desk_m: 2_000, desk_n: 100_000, ..TdsParams::default() },
        trials: 20,
        seed,
        holdout_size: 10_000,
    }
}

fn moment_completeness_and_rejection() -> Outcome {
    let gauss = MarginalSpec::standard_gaussian(3);
    let degree = moment_approx(1.0).moment_degree();
    let refs = reference_moments(&gauss, degree).map_err(|e| e.to_string())?;
    let envelope = (0..10u64)
        .map(|seed| {
            let data = sample(&gauss, 100_000, 3000 + seed).unwrap();
            moment_test(&data, &refs, degree, f64::INFINITY).unwrap().max_abs_deviation
        })
        .fold(0.0, f64::max);
    let delta = 3.0 * envelope;

    let same = run_experiment(&moment_config("moment-same", gauss.clone(), delta, 31)).map_err(|e| e.to_string())?;
    ensure(same.summary.n_accepted >= 15, || format!("accepted {}/20 at Delta={delta:.4}", same.summary.n_accepted))?;

    let shifted = gauss.affine(vec![1.0; 3], vec![1.0, 0.0, 0.0]);
    let shift = run_experiment(&moment_config("moment-mean-shift", shifted, delta, 32)).map_err(|e| e.to_string())?;
    let shift_rej = shift.summary.reject_counts.get("MomentShift").copied().unwrap_or(0);
    ensure(shift_rej >= 18, || format!("mean shift rejected {shift_rej}/20"))?;

    let heavy = MarginalSpec::unit_variance_student_t(3, 3.0);
    let heavy = run_experiment(&moment_config("moment-student-t", heavy, delta, 33)).map_err(|e| e.to_string())?;
    let heavy_rej = heavy.summary.reject_counts.get("MomentShift").copied().unwrap_or(0);
    ensure(heavy_rej >= 18, || format!("Student-t(3) rejected {heavy_rej}/20"))?;
    Ok(format!(
        "Delta={delta:.4}; accepted {}/20, mean shift rejected {shift_rej}/20, Student-t(3) rejected {heavy_rej}/20",
        same.summary.n_accepted
    ))
}

fn transfer_bound() -> Outcome {
    let (d, ell, b) = (2usize, 2u32, 1.0f64);
    let m = MarginalSpec::standard_gaussian(d);
    let refs = reference_moments(&m, 2 * ell).map_err(|e| e.to_string())?;
    let s = sample(&m, 5_000, 4000).unwrap();
    let delta_hat = moment_test(&s, &refs, 2 * ell, f64::INFINITY).map_err(|e| e.to_string())?.max_abs_deviation;
    let population = sample(&m, 1_000_000, 4001).unwrap();
    let idx = multi_indices(d, ell);
    let feats = |data: &Dataset| -> Vec<Vec<f64>> { data.points().map(|x| monomials(x, &idx, ell)).collect() };
    let (fs, fp) = (feats(&s), feats(&population));
    let bound = 4.0 * b * b * (d as f64).powi(2 * ell as i32) * delta_hat;
    let mut r = rng(4002);
    let mut worst = 0.0f64;
    for pair in 0..50 {
        let c: Vec<f64> = (0..idx.len()).map(|_| r.random_range(-b..=b) - r.random_range(-b..=b)).collect();
        let q = |f: &Vec<f64>| -> f64 {
            let v: f64 = f.iter().zip(&c).map(|(m, a)| m * a).sum();
            v * v
        };
        let on_s = fs.iter().map(q).sum::<f64>() / fs.len() as f64;
        let (on_d, se) = mean_se(&fp.iter().map(q).collect::<Vec<_>>());
        let gap = ((on_s - on_d).abs() - 3.0 * se).max(0.0);
        ensure(gap <= bound, || format!("pair {pair}: gap {gap:.4} > bound {bound:.4}"))?;
        worst = worst.max(gap / bound);
    }
    Ok(format!("Delta_hat {delta_hat:.4}, largest gap/bound {worst:.3}"))
}

fn sigmoid_approximation() -> Outcome {
    let errs: Vec<f64> = [5, 10, 20]
        .iter()
        .map(|&d| {
            grid_sup_error(|x| ChebyshevApprox::interpolate(sigmoid, 4.0, d).unwrap().eval(x), sigmoid, 4.0, 10_000)
                .value
        })
        .collect();
    ensure(errs[0] > errs[1] && errs[1] > errs[2], || format!("errors not decreasing: {errs:?}"))?;
    let deg4 = degree_for_target(sigmoid, 4.0, 1e-2, 1024).map_err(|e| e.to_string())?;
    ensure(deg4 <= 40, || format!("degree {deg4} needed at R=4"))?;
    let eps = 1e-2;
    let radii = [2.0, 4.0, 8.0];
    let degs: Vec<u32> = radii.iter().map(|&r| degree_for_target(sigmoid, r, eps, 1024).unwrap()).collect();
    ensure(degs.windows(2).all(|w| w[0] <= w[1]), || format!("degrees not monotone in R: {degs:?}"))?;
    ensure((degs[2] as f64) < 16.0 * degs[0] as f64, || format!("super-quadratic growth: {degs:?}"))?;
    let consts: Vec<f64> = radii.iter().zip(&degs).map(|(&r, &d)| d as f64 / (r * (r / eps).ln())).collect();

    let (net, _) = random_net(5, &[3, 1], Activation::Sigmoid, 1.0, 4100).unwrap();
    let (approx, _, cert) = compose_sigmoid_net_approx(&net, 0.05, 1.0).map_err(|e| e.to_string())?;
    let fresh = ball_sup_error(|x| approx.eval(x), |x| net.eval(x).unwrap(), 5, 1.0, 10_000, 4101).value;
    ensure(cert.measured_sup_error <= 0.05 && fresh <= 0.05, || {
        format!("net approximant error {} (certificate), {fresh} (fresh)", cert.measured_sup_error)
    })?;
    Ok(format!(
        "degree {deg4} at R=4; degrees {degs:?} for R=2,4,8, fitted c = {:.2}/{:.2}/{:.2}; net sup error {fresh:.4}",
        consts[0], consts[1], consts[2]
    ))
}

fn lipschitz_certificate() -> Outcome {
    let mut r = rng(5000);
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let depth = 2 + (i % 2) as usize;
        let sizes: Vec<usize> = if depth == 2 { vec![3, 1] } else { vec![4, 3, 1] };
        let act = [Activation::Sigmoid, Activation::ReLU][(i % 2) as usize];
        let (net, norms) = random_net(2 + (i % 3) as usize, &sizes, act, 1.5, 5100 + i).map_err(|e| e.to_string())?;
        let d = net.input_dim();
        for j in 0..10_000 {
            let x = uniform_vec(&mut r, d, -2.0, 2.0);
            let scale = if j % 2 == 0 { 1.0 } else { 1e-4 };
            let u: Vec<f64> = gaussian_vec(&mut r, d).into_iter().map(|v| v * scale).collect();
            let xu: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();
            let q = (net.eval(&xu).unwrap() - net.eval(&x).unwrap()).abs() / dot(&u, &u).sqrt();
            ensure(q <= norms.lipschitz_cert * (1.0 + 1e-9), || {
                format!("net {i}: quotient {q} > {}", norms.lipschitz_cert)
            })?;
            worst = worst.max(q / norms.lipschitz_cert);
        }
    }
    Ok(format!("largest quotient/certificate {worst:.3}"))
}

fn adversarial_pair() -> Outcome {
    let pair = adversarial_label_scenario(1.0, 1e-4, 200).map_err(|e| e.to_string())?;
    let ey2 = pair.second_moment_linear();
    ensure((ey2 - 1.0).abs() <= 1e-12, || format!("E[y^2] = {ey2}"))?;
    let mut r = rng(6000);
    let mut least = f64::INFINITY;
    for _ in 0..100 {
        let h = r.random_range(-2.0..2.0) * pair.planted_label;
        let (a, b) = pair.planted_errors(h);
        least = least.min(a.max(b));
    }
    ensure(least >= 0.25 * (1.0 - 1e-12), || format!("a hypothesis reached max error {least} < Y/4"))?;
    Ok(format!("E[y^2] = {ey2}, smallest worst-instance error {least:.4}"))
}

fn reproducibility() -> Outcome {
    let mut cfg = kernel_config("repro", ball_net_scenario(MarginalSpec::uniform_ball(3, 1.0), 8), 0.1, 1.0, 8);
    cfg.trials = 4;
    let first = run_experiment(&cfg).map_err(|e| e.to_string())?;
    std::env::set_var("TDS_THREADS", "1");
    let second = run_experiment(&cfg);
    std::env::remove_var("TDS_THREADS");
    let second = second.map_err(|e| e.to_string())?;
    let (j1, j2) = (report_json(&first).unwrap(), report_json(&second).unwrap());
    let (c1, c2) = (report_csv(&first).unwrap(), report_csv(&second).unwrap());
    ensure(j1 == j2, || "JSON reports differ".into())?;
    ensure(c1 == c2, || "CSV reports differ".into())?;
    let back: serde_json::Value = serde_json::from_str(&j1).map_err(|e| e.to_string())?;
    ensure(back == serde_json::to_value(&first).unwrap(), || "JSON does not round-trip".into())?;

    let mut moment = moment_config("repro-moment", MarginalSpec::standard_gaussian(3), 0.5, 9);
    moment.trials = 3;
    moment.params.desk_n = 20_000;
    let a = report_json(&run_experiment(&moment).map_err(|e| e.to_string())?).unwrap();
    let b = report_json(&run_experiment(&moment).map_err(|e| e.to_string())?).unwrap();
    ensure(a == b, || "moment JSON reports differ".into())?;
    Ok(format!("{} + {} JSON bytes identical across runs and thread counts", j1.len(), a.len()))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, name: "kernel oracle equivalence", limit: secs(1), run: kernel_oracle_equivalence },
        Criterion { id: 2, name: "composed-kernel sup bound", limit: secs(1), run: composed_sup_bound },
        Criterion { id: 3, name: "spectral statistic identities", limit: secs(5), run: spectral_identities },
        Criterion { id: 4, name: "constrained kernel regression", limit: secs(10), run: constrained_regression },
        Criterion { id: 5, name: "kernel pipeline completeness", limit: secs(300), run: kernel_completeness },
        Criterion { id: 6, name: "kernel pipeline soundness", limit: secs(600), run: kernel_soundness },
        Criterion {
            id: 7,
            name: "multiplicative spectral concentration",
            limit: secs(120),
            run: spectral_concentration,
        },
        Criterion {
            id: 8,
            name: "moment pipeline completeness and rejection",
            limit: secs(300),
            run: moment_completeness_and_rejection,
        },
        Criterion { id: 9, name: "transfer bound", limit: secs(120), run: transfer_bound },
        Criterion { id: 10, name: "sigmoid uniform approximation", limit: secs(120), run: sigmoid_approximation },
        Criterion { id: 11, name: "net Lipschitz certificate", limit: secs(60), run: lipschitz_certificate },
        Criterion { id: 12, name: "adversarial necessity pair", limit: secs(1), run: adversarial_pair },
        Criterion { id: 13, name: "reproducibility", limit: secs(60), run: reproducibility },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.id.to_string() == *f || c.name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; over time budget")),
            Err(e) => (false, e),
        };
        failed += !ok as usize;
        println!(
            "{} {:>2} {:<44} {:>8.2}s / {:>4}s  {detail}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.limit.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

use genbounds::*;
use landscape::{gradient_descent, Loss};
use nalgebra::DMatrix;
use netcore::{init_weights, rng_for, Activation, NetConfig, WeightSet};
use rand::Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn profile_of(m: DMatrix<f64>) -> LayerNorms {
    norm_profile(&WeightSet::new(vec![m])).layers[0]
}

#[test]
fn hoeffding_and_vc_forms() {
    let eps = hoeffding_eps(10_000, 0.01).unwrap();
    assert!(close(eps, (100f64.ln() / 20_000.0).sqrt(), 1e-15));
    assert!(close(eps, 0.015174, 1e-4));
    assert!(hoeffding_eps(100, 1.0 - 1e-12).unwrap() < 1e-6);
    assert!(hoeffding_eps(0, 0.1).is_err());
    assert!(hoeffding_eps(10, 0.0).is_err());

    let c = classic_bounds(10, 0.1, Some(1)).unwrap();
    assert!(close(c.sauer_growth.unwrap(), std::f64::consts::E * 10.0, 1e-12));
    // Thresholds on 10 distinct points realize exactly 11 labelings.
    let points: Vec<f64> = (0..10).map(|i| i as f64).collect();
    let mut labelings = std::collections::BTreeSet::new();
    for t in -1..=10 {
        let t = t as f64 + 0.5;
        labelings.insert(points.iter().map(|&p| p > t).collect::<Vec<_>>());
    }
    assert_eq!(labelings.len(), 11);
    assert_eq!(c.sauer_sum.unwrap(), 11.0);
    assert!(c.sauer_growth.unwrap() >= 11.0);
    assert!(close(sauer_sum(20, 3), 1.0 + 20.0 + 190.0 + 1140.0, 1e-9));
    let vc = vc_rademacher(1000, 5).unwrap();
    let want = (2.0 / 1000.0 * (2f64.ln() + 5.0 * (1.0 + 1000f64.ln() - 5f64.ln()))).sqrt();
    assert!(close(vc, want, 1e-15));
    assert!(classic_bounds(10, 0.1, Some(10)).is_err());
    assert!(classic_bounds(10, 0.1, Some(0)).is_err());
    assert!(classic_bounds(10, 0.1, None).unwrap().vc_rademacher.is_none());
}

#[test]
fn norm_profile_examples_and_chain() {
    let i2 = profile_of(DMatrix::identity(2, 2));
    assert!(close(i2.spectral, 1.0, 1e-12) && close(i2.frobenius, 2f64.sqrt(), 1e-12) && close(i2.l21, 2.0, 1e-12));
    let d = profile_of(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 4.0])));
    assert!(close(d.spectral, 4.0, 1e-12) && close(d.frobenius, 5.0, 1e-12) && close(d.l21, 7.0, 1e-12));
    let z = profile_of(DMatrix::zeros(3, 2));
    assert_eq!((z.spectral, z.frobenius, z.l21), (0.0, 0.0, 0.0));
    // Column norms of [[3, 0], [4, 1]] are 5 and 1.
    let a = profile_of(DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 4.0, 1.0]));
    assert!(close(a.l21, 6.0, 1e-12));
    let mut rng = rng_for(5);
    for _ in 0..200 {
        let (r, c) = (rng.random_range(1..8), rng.random_range(1..8));
        let m = DMatrix::from_fn(r, c, |_, _| rng.random_range(-2.0..2.0));
        let p = profile_of(m);
        assert!(p.spectral <= p.frobenius + 1e-12 && p.frobenius <= p.l21 + 1e-12);
    }
}

#[test]
fn bartlett_complexity_and_rademacher() {
    assert!(close(spectral_complexity(&[1.0, 1.0], &[1.0, 1.0]), 2f64.powf(1.5), 1e-12));
    assert!(close(spectral_complexity(&[1.0, 1.0], &[1.0, 1.0]), 2.0 * 2f64.sqrt(), 1e-4));
    let (s, b) = ([0.7, 1.3, 0.9], [1.1, 2.0, 1.4]);
    let base = spectral_complexity(&s, &b);
    let beta = 1.7;
    let scaled = spectral_complexity(&s.map(|v| v * beta), &b.map(|v| v * beta));
    assert!(close(scaled / base, beta.powi(3), 1e-12));
    // The product form agrees with the sum form.
    let prod: f64 = s.iter().product();
    let ratio: f64 = s.iter().zip(&b).map(|(s, b)| (b / s).powf(2.0 / 3.0)).sum();
    assert!(close(base, prod * ratio.powf(1.5), 1e-12));

    // Minimize the Dudley expression over ε numerically.
    let (complexity, c, xf, gamma, m) = (3.0, 2.0, 5.0, 1.0, 100_000u64);
    let k = c * xf * complexity / gamma;
    let mf = m as f64;
    let dudley = |e: f64| 4.0 * e / mf.sqrt() + 12.0 / mf * k * (mf.sqrt() / (2.0 * e)).ln();
    let best = (1..200_000)
        .map(|i| i as f64 * 1e-4)
        .map(dudley)
        .fold(f64::INFINITY, f64::min);
    let (rad, eps_opt, valid) = bartlett_rademacher(complexity, c, xf, gamma, m);
    assert!(valid);
    assert!(close(rad, best, 1e-7), "{rad} vs {best}");
    assert!(close(dudley(eps_opt), rad, 1e-12));
    let (rad2, _, _) = bartlett_rademacher(complexity, c, xf, 2.0 * gamma, m);
    assert!(rad2 < rad);
}

#[test]
fn bartlett_reports_and_regime_flag() {
    let w = WeightSet::new(vec![DMatrix::identity(2, 2), DMatrix::identity(2, 2)]);
    let norms = norm_profile(&w);
    let r = bartlett_bound(&norms, 10.0, 1.0, 1_000_000, 0.05, 0.1).unwrap();
    let c = (2.0 * 4.0f64).ln().sqrt();
    assert!(close(r.intermediates["c"], c, 1e-12));
    assert!(close(r.intermediates["spectral_complexity"], 2.0 * 2f64.powf(1.5), 1e-12));
    let rad = r.intermediates["rademacher"];
    let conf = ((1.0f64 / 0.05).ln() / 2e6).sqrt();
    assert!(close(r.value, 0.1 + 2.0 * rad + conf, 1e-12));
    assert!(r.flags.is_empty());
    let bad = bartlett_bound(&norms, 10.0, 1.0, 10, 0.05, 0.0).unwrap();
    assert_eq!(bad.value, 1.0);
    assert!(bad.flags.contains(&"log_argument_at_least_one".to_string()));
    assert!(bartlett_bound(&norms, 10.0, 0.0, 10, 0.05, 0.0).is_err());
    let zero = norm_profile(&WeightSet::new(vec![DMatrix::zeros(2, 2)]));
    assert!(bartlett_bound(&zero, 1.0, 1.0, 10, 0.05, 0.0).is_err());
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["family"], "bartlett");
}

#[test]
fn a_posteriori_grid_examples() {
    let w = WeightSet::new(vec![DMatrix::identity(2, 2) * 0.9; 3]);
    let norms = norm_profile(&w);
    let g = a_posteriori_grid(&norms, 0.1, 2.0).unwrap();
    assert_eq!(g.i_star, vec![2, 2, 2]);
    // ‖Wᵀ‖_{2,1} = 1.8 → smallest j with j/2 > 1.8 is 4.
    assert_eq!(g.j_star, vec![4, 4, 4]);
    let prod: f64 = 3.0f64.powi(0) * (2.0 * 3.0 * 4.0 * 5.0f64).powi(3);
    assert!(close(g.delta_star, 0.1 / prod, 1e-15));
    assert!(close(g.log_inv_delta_star, (prod / 0.1).ln(), 1e-12));
    // Exactly on a grid point the index moves up.
    let exact = norm_profile(&WeightSet::new(vec![DMatrix::identity(1, 1)]));
    assert_eq!(a_posteriori_grid(&exact, 0.1, 2.0).unwrap().i_star, vec![3]);
    let tiny = norm_profile(&WeightSet::new(vec![DMatrix::identity(2, 2) * 1e-9; 2]));
    let g = a_posteriori_grid(&tiny, 0.1, 1.0).unwrap();
    assert_eq!((g.i_star.clone(), g.j_star.clone()), (vec![1, 1], vec![1, 1]));
    assert!(close(g.log_inv_delta_star, 10f64.ln() + 4.0 * 2f64.ln(), 1e-12));
    // Truncated allocation over one layer telescopes to δ(1 − 1/(N+1))².
    let (delta, n) = (0.05, 400u64);
    let mut total = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            total += delta / ((i * (i + 1) * j * (j + 1)) as f64);
        }
    }
    assert!(close(total, delta * (1.0 - 1.0 / (n as f64 + 1.0)).powi(2), 1e-12));
    assert!(total < delta);
    let r = bartlett_a_posteriori(&norms, 10.0, 1.0, 10_000_000, 0.1, 0.0).unwrap();
    assert!(r.grid.is_some());
}

#[test]
fn neyshabur_complexity_and_rescaling() {
    let w = WeightSet::new(vec![DMatrix::identity(2, 2), DMatrix::identity(2, 2)]);
    assert!(close(neyshabur_complexity(&norm_profile(&w)).unwrap(), 2.0, 1e-12));
    let cfg = NetConfig::gaussian(vec![4, 6, 5, 1], Activation::Relu, 2f64.sqrt()).unwrap();
    let w = init_weights(&cfg, 3).unwrap();
    let norms = norm_profile(&w);
    let beta: f64 = norms.spectral().iter().product::<f64>().powf(1.0 / 3.0);
    let balanced = WeightSet::new(
        w.matrices
            .iter()
            .zip(norms.spectral())
            .map(|(m, s)| m * (beta / s))
            .collect(),
    );
    let a = neyshabur_bound(&w, 1.0, 1.0, 10_000, 0.05, 0.1).unwrap();
    let b = neyshabur_bound(&balanced, 1.0, 1.0, 10_000, 0.05, 0.1).unwrap();
    let (ra, rb) = (a.intermediates["spectral_complexity"], b.intermediates["spectral_complexity"]);
    assert!(close(ra, rb, 1e-10 * ra));
    assert!(close(a.intermediates["raw_bound"], b.intermediates["raw_bound"], 1e-10));
    // Hand evaluation of the gap for the identities.
    let gap = neyshabur_gap(2.0, 1.0, 1.0, 2, 2, 1000, 0.1).unwrap();
    let e4 = 4f64.exp();
    let inner = (8.0 * 2.0 * 1000.0 / 0.1f64).ln() + 1000f64.ln() / 4.0 + 8.0 * e4 * 4.0 * 4.0 * 2.0 * 8f64.ln();
    assert!(close(gap, (inner / 1999.0).sqrt(), 1e-12));
    let zero = WeightSet::new(vec![DMatrix::identity(2, 2), DMatrix::zeros(1, 2)]);
    assert!(matches!(neyshabur_bound(&zero, 1.0, 1.0, 10, 0.1, 0.0), Err(BoundsError::ZeroNorm(1))));
}

#[test]
fn mcallester_and_gaussian_kl() {
    let gap = mcallester_gap(0.0, 1000, 0.05).unwrap();
    assert!(close(gap, (80_000f64.ln() / 1999.0).sqrt(), 1e-15));
    assert!(close(gap, 0.07517, 1e-4), "{gap}");
    assert!(mcallester_gap(-0.1, 1000, 0.05).is_err());
    let r = pacbayes_mcallester(2.0, 500, 0.1, 0.05).unwrap();
    assert!(close(r.value, 0.05 + mcallester_gap(2.0, 500, 0.1).unwrap(), 1e-15));

    let mu = vec![0.3, -1.2, 0.5];
    let lv = vec![-1.0, 0.4, 0.0];
    assert!(close(gaussian_kl(&mu, &lv, &mu, 0.0), 0.5 * (lv.iter().map(|l: &f64| l.exp() - 1.0 - l).sum::<f64>()), 1e-14));
    assert!(close(gaussian_kl(&[0.0; 4], &[0.7; 4], &[0.0; 4], 0.7), 0.0, 1e-14));
    assert!(close(gaussian_kl(&[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0], 0.0), 0.5, 1e-15));
    // Per-coordinate KL between 1-D gaussians.
    let prior_mu = vec![0.1, 0.0, -0.4];
    let ls = -0.3f64;
    let want: f64 = (0..3)
        .map(|i| {
            let (v1, v2) = (lv[i].exp(), ls.exp());
            0.5 * (v1 / v2 + (mu[i] - prior_mu[i]).powi(2) / v2 - 1.0 + (v2 / v1).ln())
        })
        .sum();
    assert!(close(gaussian_kl(&mu, &lv, &prior_mu, ls), want, 1e-13));
}

#[test]
fn code_length_prior() {
    let k = 50.0;
    let cl = code_length_kl(120, |_| 1.0 / k, 1.0).unwrap();
    assert!(close(cl.kl, 120.0 * 2f64.ln() + k.ln(), 1e-12));
    assert!(close(code_length_kl(1, |_| 1.0, 1.0).unwrap().kl, 2f64.ln(), 1e-15));
    assert!(code_length_kl(5, |_| 0.0, 1.0).is_err());
    assert!(code_length_kl(0, |_| 1.0, 1.0).is_err());
    let bits = naive_compressed_bits(100, 1_000_000, 16).unwrap();
    assert!(close(bits, 100.0 * (1e6f64.log2() + 4.0) + 512.0, 1e-9));
    assert!(close(bits, 2905.0, 1.0));
}

#[test]
fn margin_statistics() {
    let stats = MarginStats::from_margins(vec![-1.0, 0.5, 2.0, 0.1], 0.0).unwrap();
    assert_eq!(stats.hard_risk, 0.25);
    assert_eq!(stats.ramp_loss, 0.25);
    let s1 = MarginStats::from_margins(vec![-1.0, 0.5, 2.0, 0.1], 1.0).unwrap();
    assert_eq!(s1.hard_risk, 0.75);
    assert!(close(s1.ramp_loss, (1.0 + 0.5 + 0.0 + 0.9) / 4.0, 1e-15));
    let mut prev = 0.0;
    for g in 0..30 {
        let r = s1.hard_risk_at(g as f64 * 0.1);
        assert!(r >= prev);
        prev = r;
    }
    let separated = MarginStats::from_margins(vec![2.0, 3.0, 2.5], 1.0).unwrap();
    assert_eq!(separated.hard_risk, 0.0);

    let cfg = NetConfig::gaussian(vec![3, 64, 1], Activation::Relu, 2f64.sqrt()).unwrap();
    let w = init_weights(&cfg, 1).unwrap();
    let mut rng = rng_for(2);
    let m = 2000;
    let x = DMatrix::from_fn(3, m, |_, _| rng.random_range(-1.0..1.0));
    let y: Vec<f64> = (0..m).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let stats = margin_stats(&w, &cfg, &x, &y, 0.0).unwrap();
    let se = (0.25f64 / m as f64).sqrt();
    assert!((stats.hard_risk - 0.5).abs() < 3.0 * se, "{}", stats.hard_risk);
    let bad = vec![0.0; m];
    assert!(matches!(margin_stats(&w, &cfg, &x, &bad, 0.0), Err(BoundsError::Labels)));
}

/// Each bound as a function of `(m, complexity, gamma, delta)`.
fn bound_families() -> Vec<(&'static str, Box<dyn Fn(u64, f64, f64, f64) -> f64>)> {
    vec![
        ("hoeffding", Box::new(|m, _, _, d| hoeffding_eps(m, d).unwrap())),
        (
            "vc",
            Box::new(|m, c, _, _| vc_rademacher(m, (c.ceil() as u64).clamp(1, m - 1)).unwrap()),
        ),
        ("mcallester", Box::new(|m, kl, _, d| pacbayes_mcallester(kl, m, d, 0.0).unwrap().value)),
        (
            "bartlett",
            Box::new(|m, r, g, d| bartlett_from_complexity(r, 8, 3.0, g, m, d, 0.0).unwrap().value),
        ),
        (
            "neyshabur",
            Box::new(|m, r, g, d| (0.0 + neyshabur_gap(r, 1.0, g, 3, 8, m, d).unwrap()).min(1.0)),
        ),
    ]
}

#[test]
fn monotonicity_suite_on_random_grids() {
    let mut rng = rng_for(77);
    let families = bound_families();
    for _ in 0..100 {
        let m: u64 = rng.random_range(50..1_000_000);
        let cx: f64 = rng.random_range(0.5..40.0);
        let g: f64 = rng.random_range(0.1..10.0);
        let d: f64 = rng.random_range(0.001..0.5);
        for (name, f) in &families {
            let base = f(m, cx, g, d);
            assert!(base >= 0.0);
            let m2 = m + rng.random_range(1..10 * m);
            assert!(f(m2, cx, g, d) <= base + 1e-12, "{name} not non-increasing in m");
            let cx2 = cx * rng.random_range(1.0..3.0);
            assert!(f(m, cx2, g, d) >= base - 1e-12, "{name} not non-decreasing in complexity");
            let g2 = g * rng.random_range(1.0..3.0);
            assert!(f(m, cx, g2, d) <= base + 1e-12, "{name} not non-increasing in gamma");
            let d2 = rng.random_range(d..0.999);
            assert!(f(m, cx, g, d2) <= base + 1e-12, "{name} not non-increasing in delta");
        }
    }
}

#[test]
fn union_bound_coverage() {
    let (trials, delta) = (10_000, 0.05);
    let report = coverage_simulation(trials, 100, delta, 32, 9).unwrap();
    let slack = 2.33 * (delta * (1.0 - delta) / trials as f64).sqrt();
    assert!(report.violation_fraction <= delta + slack, "{report:?}");
    assert!(report.pair_violation_fraction <= delta / 32.0 + 2.33 * (delta / 32.0 / (trials * 32) as f64).sqrt());
}

fn toy_setup() -> (NetConfig, WeightSet, WeightSet, DMatrix<f64>, Vec<f64>) {
    let cfg = NetConfig::gaussian(vec![2, 16, 1], Activation::Relu, 2f64.sqrt()).unwrap();
    let w0 = init_weights(&cfg, 4).unwrap();
    let (x, y) = two_blobs(200, 0.7, 5);
    let targets = DMatrix::from_row_slice(1, y.len(), &y);
    let (trained, _) = gradient_descent(&cfg, &w0, &x, &targets, Loss::Logistic, 0.5, 300).unwrap();
    (cfg, w0, trained, x, y)
}

#[test]
fn dziugaite_roy_zero_steps_matches_mcallester() {
    let (cfg, w0, trained, x, y) = toy_setup();
    let opts = DrOptions {
        steps: 0,
        ..DrOptions::default()
    };
    let j = 100u64;
    let ls = opts.c.ln() - j as f64 / opts.b;
    let init = GaussianPosterior::around(&trained, &w0, -6.0, ls).unwrap();
    let out = dziugaite_roy_optimize(&init, &cfg, &x, &y, &opts).unwrap();
    assert_eq!(out.trace.len(), 1);
    assert_eq!(out.j, j);
    let delta_j = 6.0 * opts.delta / (std::f64::consts::PI.powi(2) * (j * j) as f64);
    let direct = pacbayes_gaussian(&init, &cfg, &x, &y, delta_j, opts.mc_samples, opts.seed).unwrap();
    let raw = |r: &BoundReport| r.intermediates["raw_bound"];
    assert!(close(raw(&out.report), raw(&direct), 1e-12));
    assert!(close(raw(&out.initial), raw(&direct), 1e-12));
    let gap = mcallester_gap(init.kl(), 200, delta_j).unwrap();
    assert!(close(raw(&direct), direct.inputs["empirical_risk"] + gap, 1e-12));
    assert!(direct.value < 1.0, "initial posterior should give a non-vacuous bound");
}

#[test]
fn dziugaite_roy_optimization_improves_the_bound() {
    let (cfg, w0, trained, x, y) = toy_setup();
    let opts = DrOptions::default();
    let ls = opts.c.ln() - 100.0 / opts.b;
    let init = GaussianPosterior::around(&trained, &w0, -6.0, ls).unwrap();
    let out = dziugaite_roy_optimize(&init, &cfg, &x, &y, &opts).unwrap();
    assert_eq!(out.trace.len(), 201);
    for w in out.trace.windows(2) {
        assert!(w[1] <= w[0], "objective rose: {} -> {}", w[0], w[1]);
    }
    assert!(out.trace[200] < out.trace[0]);
    let raw = |r: &BoundReport| r.intermediates["raw_bound"];
    assert!(raw(&out.initial) < 1.0);
    assert!(raw(&out.report) <= raw(&out.initial), "{} vs {}", raw(&out.report), raw(&out.initial));
    let (j, ls) = (out.j as f64, out.lambda_star_rounded);
    assert!(close(ls, opts.c.ln() - j / opts.b, 1e-12));
    assert!((out.lambda_star_continuous - ls).abs() <= 0.5 / opts.b + 1e-12);
    println!(
        "objective {:.4} -> {:.4}, bound {:.4} -> {:.4}, rounding change {:.2e} (estimate {:.2e})",
        out.trace[0],
        out.trace[200],
        out.initial.value,
        out.report.value,
        out.objective_after_rounding - out.objective_before_rounding,
        out.rounding_estimate
    );
}

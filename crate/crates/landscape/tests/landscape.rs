use landscape::*;
use nalgebra::{DMatrix, DVector};
use netcore::{init_weights, rng_for, Activation, NetConfig, WeightSet};
use rand_distr::{Distribution, StandardNormal};

fn gaussian(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_for(seed);
    DMatrix::from_fn(r, c, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    })
}

/// Column-by-column forward pass through netcore, used as an independent
/// oracle for the batched code.
fn outputs(cfg: &NetConfig, w: &WeightSet, x: &DMatrix<f64>) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..x.ncols())
        .map(|j| netcore::output(cfg, w, &x.column(j).into_owned()).unwrap())
        .collect();
    DMatrix::from_columns(&cols)
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn net(widths: Vec<usize>, act: Activation, seed: u64) -> (NetConfig, WeightSet) {
    let cfg = NetConfig::gaussian(widths, act, 1.0).unwrap();
    let w = init_weights(&cfg, seed).unwrap();
    (cfg, w)
}

#[test]
fn one_sided_inverses_are_exact() {
    for seed in 0..5 {
        let x = gaussian(12, 8, seed);
        let xi = left_inverse(&x, "X").unwrap();
        assert!((&xi * &x - DMatrix::identity(8, 8)).amax() < 1e-10);
        let w = gaussian(6, 10, seed + 100);
        let wi = right_inverse(&w, "W").unwrap();
        assert!((&w * &wi - DMatrix::identity(6, 6)).amax() < 1e-10);
    }
}

#[test]
fn reconstruction_hits_random_targets() {
    for (act, tol) in [(Activation::Linear, 1e-8), (Activation::LeakyRelu(0.5), 1e-6)] {
        for seed in 0..4 {
            let (cfg, w) = net(vec![12, 10, 6, 4], act, seed);
            let x = gaussian(12, 8, 50 + seed);
            let target = gaussian(4, 8, 90 + seed);
            let w0 = reconstruct_first_layer(&cfg, &w.matrices[1..], &x, &target).unwrap();
            let mut wt = w.clone();
            wt.matrices[0] = w0;
            let err = rel_err(&outputs(&cfg, &wt, &x), &target);
            assert!(err < tol, "{act}: {err}");
        }
    }
}

#[test]
fn reconstructing_the_current_output_leaves_it_unchanged() {
    for act in [Activation::Linear, Activation::LeakyRelu(0.2)] {
        let (cfg, w) = net(vec![9, 7, 5, 2], act, 3);
        let x = gaussian(9, 6, 4);
        let current = outputs(&cfg, &w, &x);
        let w0 = reconstruct_first_layer(&cfg, &w.matrices[1..], &x, &current).unwrap();
        let mut wt = w.clone();
        wt.matrices[0] = w0;
        assert!(rel_err(&outputs(&cfg, &wt, &x), &current) < 1e-8);
    }
}

#[test]
fn reconstruction_respects_ntk_scaling() {
    let cfg = NetConfig::ntk(vec![8, 6, 3], Activation::LeakyRelu(0.3), 1.7).unwrap();
    let w = init_weights(&cfg, 2).unwrap();
    let x = gaussian(8, 5, 7);
    let target = gaussian(3, 5, 8);
    let w0 = reconstruct_first_layer(&cfg, &w.matrices[1..], &x, &target).unwrap();
    let mut wt = w.clone();
    wt.matrices[0] = w0;
    assert!(rel_err(&outputs(&cfg, &wt, &x), &target) < 1e-8);
}

#[test]
fn reconstruction_errors() {
    let (cfg, w) = net(vec![6, 5, 3], Activation::Relu, 0);
    let x = gaussian(6, 4, 1);
    let t = gaussian(3, 4, 2);
    assert!(matches!(
        reconstruct_first_layer(&cfg, &w.matrices[1..], &x, &t),
        Err(LandscapeError::NotInvertible(_))
    ));
    let (cfg, mut w) = net(vec![6, 5, 3], Activation::Linear, 0);
    let row = w.matrices[1].row(0).into_owned();
    w.matrices[1].set_row(1, &row);
    match reconstruct_first_layer(&cfg, &w.matrices[1..], &x, &t) {
        Err(LandscapeError::RankDeficient { matrix, .. }) => assert_eq!(matrix, "W_1"),
        other => panic!("{other:?}"),
    }
    let (cfg, w) = net(vec![6, 5, 3], Activation::Linear, 0);
    let wide = gaussian(6, 7, 3);
    match reconstruct_first_layer(&cfg, &w.matrices[1..], &wide, &gaussian(3, 7, 4)) {
        Err(LandscapeError::RankDeficient { matrix, .. }) => assert!(matrix.starts_with('X')),
        other => panic!("{other:?}"),
    }
    let (cfg, w) = net(vec![6, 3, 5], Activation::Linear, 0);
    assert!(reconstruct_first_layer(&cfg, &w.matrices[1..], &x, &gaussian(5, 4, 5)).is_err());
}

#[test]
fn batch_gradient_matches_finite_differences() {
    for (act, loss) in [
        (Activation::LeakyRelu(0.3), Loss::Square),
        (Activation::Tanh, Loss::Logistic),
    ] {
        let (cfg, w) = net(vec![4, 5, 3, 2], act, 9);
        let x = gaussian(4, 6, 10);
        let y = gaussian(2, 6, 11).map(|v| if loss == Loss::Logistic { v.signum() } else { v });
        let (value, grad) = batch_gradient(&cfg, &w, &x, &y, loss).unwrap();
        let eval = |w: &WeightSet| loss.value(&outputs(&cfg, w, &x), &y);
        assert!((value - eval(&w)).abs() < 1e-12);
        let flat = w.flatten();
        let g = grad.flatten();
        for k in (0..flat.len()).step_by(3) {
            let h = 1e-6;
            let mut p = flat.clone();
            p[k] += h;
            let mut q = flat.clone();
            q[k] -= h;
            let fd = (eval(&w.with_flat(&p)) - eval(&w.with_flat(&q))) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6 * (1.0 + g[k].abs()), "{k}: {fd} vs {}", g[k]);
        }
    }
}

#[test]
fn reparameterization_keeps_outputs_fixed() {
    for act in [Activation::Linear, Activation::LeakyRelu(0.4)] {
        let (cfg, w) = net(vec![7, 6, 4, 2], act, 21);
        let x = gaussian(7, 5, 22);
        let before = outputs(&cfg, &w, &x);
        let (t, thetas) = constant_output_segment(&cfg, &w, &x, 33).unwrap();
        assert_eq!(t.len(), 33);
        assert!((&thetas[0].matrices[0] - &w.matrices[0]).amax() < 1e-10);
        let h = reconstruct_first_layer(&cfg, &w.matrices[1..], &x, &before).unwrap();
        assert!((&thetas[32].matrices[0] - &h).amax() < 1e-10);
        for th in &thetas {
            assert!(rel_err(&outputs(&cfg, th, &x), &before) < 1e-10);
            assert_eq!(th.matrices[1..], w.matrices[1..]);
        }
    }
}

#[test]
fn output_segment_stays_below_the_chord() {
    for (act, loss) in [(Activation::Linear, Loss::Square), (Activation::LeakyRelu(0.5), Loss::Logistic)] {
        let (cfg, w) = net(vec![8, 6, 3, 1], act, 31);
        let x = gaussian(8, 6, 32);
        let y = gaussian(1, 6, 33).map(f64::signum);
        let start = outputs(&cfg, &w, &x);
        let target = &y * 3.0;
        let (t, thetas) = output_segment(&cfg, &w.matrices[1..], &x, &start, &target, 64).unwrap();
        let (l0, l1) = (loss.value(&start, &y), loss.value(&target, &y));
        for (t, th) in t.iter().zip(&thetas) {
            let l = loss.value(&outputs(&cfg, th, &x), &y);
            assert!(l <= (1.0 - t) * l0 + t * l1 + 1e-9, "t={t}: {l}");
        }
    }
}

fn trained(cfg: &NetConfig, seed: u64, x: &DMatrix<f64>, y: &DMatrix<f64>, loss: Loss) -> WeightSet {
    let w = init_weights(cfg, seed).unwrap();
    let (w, hist) = gradient_descent(cfg, &w, x, y, loss, 0.05, 400).unwrap();
    assert!(hist.last().unwrap() < &hist[0]);
    w
}

fn check_path(trace: &PathTrace, eps: f64) {
    assert!(trace.max_rise() <= 1e-6, "rise {}", trace.max_rise());
    assert!(trace.meeting_loss < eps, "meeting {}", trace.meeting_loss);
    for seg in &trace.segments {
        assert!(seg.t.windows(2).all(|w| w[1] > w[0]));
        assert!(seg.losses.iter().all(|l| l.is_finite()));
    }
    let rows = trace.rows();
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            assert!(w[1].1 > w[0].1);
        }
    }
}

#[test]
fn path_between_two_trained_linear_nets() {
    let cfg = NetConfig::gaussian(vec![6, 5, 4, 3], Activation::Linear, 1.0).unwrap();
    let x = gaussian(6, 5, 40);
    let y = gaussian(3, 5, 41);
    let a = trained(&cfg, 1, &x, &y, Loss::Square);
    let b = trained(&cfg, 2, &x, &y, Loss::Square);
    let trace = constant_loss_path(&cfg, &a, &b, &x, &y, Loss::Square, &PathOptions::default()).unwrap();
    check_path(&trace, 1e-6);
    // Both sides begin at their own endpoints and meet at one point.
    let first = &trace.segments[0];
    assert_eq!(first.side, Side::A);
    assert_eq!(first.thetas[0], a);
    let b_start = trace.segments.iter().find(|s| s.side == Side::B).unwrap();
    assert_eq!(b_start.thetas[0], b);
    let ends: Vec<&PathSegment> = trace.segments.iter().filter(|s| s.label.ends_with("descend")).collect();
    let (ea, eb) = (ends[0].thetas.last().unwrap(), ends[1].thetas.last().unwrap());
    for (p, q) in ea.matrices.iter().zip(&eb.matrices) {
        assert!((p - q).amax() < 1e-9);
    }
}

#[test]
fn path_for_leaky_relu_and_logistic_loss() {
    let cfg = NetConfig::gaussian(vec![7, 6, 4, 1], Activation::LeakyRelu(0.5), 1.0).unwrap();
    let x = gaussian(7, 6, 50);
    let y = gaussian(1, 6, 51).map(f64::signum);
    let a = trained(&cfg, 3, &x, &y, Loss::Logistic);
    let b = trained(&cfg, 4, &x, &y, Loss::Logistic);
    for eps in [1e-4, 1e-8] {
        let opts = PathOptions {
            epsilon: eps,
            ..Default::default()
        };
        let trace = constant_loss_path(&cfg, &a, &b, &x, &y, Loss::Logistic, &opts).unwrap();
        check_path(&trace, eps);
    }
}

#[test]
fn identical_endpoints_give_a_single_point() {
    let (cfg, w) = net(vec![5, 4, 2], Activation::Linear, 0);
    let x = gaussian(5, 3, 1);
    let y = gaussian(2, 3, 2);
    let trace = constant_loss_path(&cfg, &w, &w, &x, &y, Loss::Square, &PathOptions::default()).unwrap();
    assert_eq!(trace.rows().len(), 1);
    assert_eq!(trace.max_rise(), 0.0);
}

#[test]
fn rank_deficient_endpoint_is_repaired_and_reported() {
    let cfg = NetConfig::gaussian(vec![6, 5, 4, 3], Activation::Linear, 1.0).unwrap();
    let x = gaussian(6, 5, 60);
    let y = gaussian(3, 5, 61);
    let mut a = init_weights(&cfg, 7).unwrap();
    let row = a.matrices[2].row(0).into_owned();
    a.matrices[2].set_row(2, &row);
    let b = init_weights(&cfg, 8).unwrap();
    let trace = constant_loss_path(&cfg, &a, &b, &x, &y, Loss::Square, &PathOptions::default()).unwrap();
    assert_eq!(trace.segments[0].label, "A-repair");
    assert!(!trace.segments[0].monotone);
    assert!(trace.repair_loss_change[0].abs() < 1e-3);
    assert_eq!(trace.repair_loss_change[1], 0.0);
    check_path(&trace, 1e-6);
}

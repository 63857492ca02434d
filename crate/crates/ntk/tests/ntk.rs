use std::f64::consts::PI;

use meanfield::length_map;
use nalgebra::{DMatrix, DVector};
use netcore::{init_weights, output, rng_for, Activation, NetConfig};
use ntk::*;
use rand::Rng;

fn points(d: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_for(seed);
    DMatrix::from_fn(d, m, |_, _| rng.random_range(-1.0..1.0))
}

fn relu_ntk(widths: Vec<usize>) -> NetConfig {
    NetConfig::ntk(widths, Activation::Relu, 2f64.sqrt()).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn zero_hidden_layer_kernel_is_exact() {
    let x = points(5, 4, 1);
    for sigma in [0.5, 1.0, 2.3] {
        let cfg = NetConfig::ntk(vec![5, 1], Activation::Relu, sigma).unwrap();
        let w = init_weights(&cfg, 3).unwrap();
        let k = empirical_ntk(&cfg, &w, &x, 0.0).unwrap();
        let expect = x.transpose() * &x * (sigma * sigma / 5.0);
        assert!((&k.matrix - expect).amax() < 1e-12);
        assert_eq!(k.tag, KernelTag::EmpiricalNtk { t: 0.0 });
    }
}

#[test]
fn empirical_kernels_are_symmetric_psd() {
    let x = points(4, 6, 2);
    for act in [Activation::Relu, Activation::Tanh, Activation::Linear] {
        let cfg = NetConfig::ntk(vec![4, 32, 32, 1], act, 1.3).unwrap();
        let w = init_weights(&cfg, 5).unwrap();
        assert!(empirical_ntk(&cfg, &w, &x, 0.0).unwrap().is_valid());
    }
    let cfg = NetConfig::ntk(vec![4, 16, 3], Activation::Relu, 1.0).unwrap();
    let w = init_weights(&cfg, 6).unwrap();
    let k = empirical_ntk(&cfg, &w, &x, 0.0).unwrap();
    assert_eq!(k.len(), 18);
    assert!(k.is_valid());
}

#[test]
fn linear_recursion_collapses() {
    let cfg = NetConfig::ntk(vec![3, 10, 10, 10, 1], Activation::Linear, 1.0).unwrap();
    let x = DVector::from_vec(vec![0.3, -1.2, 0.5]);
    let y = DVector::from_vec(vec![1.0, 0.4, -0.7]);
    let st = nngp_recursion(&x, &y, &cfg).unwrap();
    assert_eq!(st.layers(), 4);
    for q in &st.q_xy {
        assert!((q - x.dot(&y) / 3.0).abs() < 1e-15);
    }
    let theta = limiting_ntk(&DMatrix::from_columns(&[x.clone(), y.clone()]), &cfg).unwrap();
    assert!((theta.matrix[(0, 1)] - 4.0 * x.dot(&y) / 3.0).abs() < 1e-14);
}

#[test]
fn diagonal_matches_length_map() {
    for act in [Activation::Tanh, Activation::Relu, Activation::LeakyRelu(0.1)] {
        let cfg = NetConfig::ntk(vec![2, 8, 8, 8, 1], act, 1.5f64.sqrt()).unwrap();
        let x = DVector::from_vec(vec![0.8, -1.1]);
        let st = nngp_recursion(&x, &x, &cfg).unwrap();
        let mut q = 1.5 * x.norm_squared() / 2.0;
        for l in 0..st.layers() {
            assert!((st.q_xx[l] - q).abs() <= 1e-14 * q, "{act} l={l}");
            assert_eq!(st.q_xx[l], st.q_yy[l]);
            q = length_map(q, 1.5, act, false).unwrap().q_next;
        }
    }
}

#[test]
fn relu_orthogonal_inputs_match_arccosine_kernel() {
    let sw2: f64 = 2.0;
    let cfg = NetConfig::ntk(vec![2, 8, 1], Activation::Relu, sw2.sqrt()).unwrap();
    let x = DVector::from_vec(vec![1.0, 0.0]);
    let y = DVector::from_vec(vec![0.0, 1.0]);
    let st = nngp_recursion(&x, &y, &cfg).unwrap();
    assert!((st.q_xy[1] / sw2 - st.q_xx[0] / (2.0 * PI)).abs() < 1e-6);
    // General angle: q₂ = σ²√(q₁q₁′)(sin θ + (π − θ) cos θ)/(2π).
    let z = DVector::from_vec(vec![0.6, 0.8]);
    let st = nngp_recursion(&x, &z, &cfg).unwrap();
    let th = 0.6f64.acos();
    let expect = sw2 * (st.q_xx[0] * st.q_yy[0]).sqrt() * (th.sin() + (PI - th) * th.cos()) / (2.0 * PI);
    assert!((st.q_xy[1] - expect).abs() < 1e-12);
    assert!((st.chi[0] - sw2 * (PI - th) / (2.0 * PI)).abs() < 1e-12);
}

#[test]
fn one_hidden_layer_relu_tangent_kernel_by_hand() {
    // Θ = q₂ + q₁ χ₁ with the arccosine expressions for q₂ and χ₁.
    let sw2: f64 = 2.0;
    let cfg = NetConfig::ntk(vec![3, 8, 1], Activation::Relu, sw2.sqrt()).unwrap();
    let x = DVector::from_vec(vec![0.3, -0.4, 1.1]);
    let z = DVector::from_vec(vec![-0.9, 0.2, 0.5]);
    let (q11, q12, q22) = (sw2 * x.dot(&x) / 3.0, sw2 * x.dot(&z) / 3.0, sw2 * z.dot(&z) / 3.0);
    let th = (q12 / (q11 * q22).sqrt()).acos();
    let q2 = sw2 * (q11 * q22).sqrt() * (th.sin() + (PI - th) * th.cos()) / (2.0 * PI);
    let chi = sw2 * (PI - th) / (2.0 * PI);
    let st = nngp_recursion(&x, &z, &cfg).unwrap();
    assert!((st.tangent_kernel() - (q2 + q12 * chi)).abs() < 1e-12);
}

#[test]
fn seed_averaged_kernel_has_small_bias() {
    let x = points(4, 5, 21);
    let cfg = relu_ntk(vec![4, 1024, 1024, 1]);
    let limit = limiting_ntk(&x, &cfg).unwrap();
    let mut avg = DMatrix::zeros(5, 5);
    for seed in 0..20 {
        let w = init_weights(&cfg, 700 + seed).unwrap();
        avg += empirical_ntk(&cfg, &w, &x, 0.0).unwrap().matrix / 20.0;
    }
    let bias = (&avg - &limit.matrix).norm() / limit.matrix.norm();
    assert!(bias < 0.03, "{bias}");
}

#[test]
fn recursion_respects_cauchy_schwarz() {
    for act in [Activation::Relu, Activation::Tanh] {
        let cfg = NetConfig::ntk(vec![3, 4, 4, 4, 1], act, 1.4).unwrap();
        let x = points(3, 6, 9);
        for i in 0..6 {
            for j in 0..6 {
                let st = nngp_recursion(&x.column(i).into_owned(), &x.column(j).into_owned(), &cfg).unwrap();
                for l in 0..st.layers() {
                    assert!(st.q_xy[l].abs() <= (st.q_xx[l] * st.q_yy[l]).sqrt() + 1e-10);
                }
            }
        }
    }
}

#[test]
fn limiting_kernel_requires_ntk_parameterization() {
    let cfg = NetConfig::gaussian(vec![3, 4, 1], Activation::Relu, 1.0).unwrap();
    assert!(matches!(limiting_ntk(&points(3, 2, 0), &cfg), Err(NtkError::NotNtk)));
    assert!(nngp_gram(&points(3, 2, 0), &cfg).is_ok());
}

#[test]
fn last_layer_kernel_is_the_output_covariance() {
    // The gradient with respect to W_L alone is c_L x_L, so the last-layer
    // kernel is c_L² x_Lᵀx_L′, whose wide limit is q_{L+1}. Averaging over
    // seeds removes most of the finite-width noise.
    let x = points(3, 4, 12);
    let cfg = relu_ntk(vec![3, 1024, 1024, 1]);
    let q = nngp_gram(&x, &cfg).unwrap();
    let c = cfg.layer_scale(2);
    let seeds = 50;
    let mut avg = DMatrix::zeros(4, 4);
    for seed in 0..seeds {
        let w = init_weights(&cfg, seed).unwrap();
        let feats: Vec<DVector<f64>> = (0..4)
            .map(|j| netcore::forward(&cfg, &w, &x.column(j).into_owned()).unwrap().post[1].clone() * c)
            .collect();
        for i in 0..4 {
            for j in 0..4 {
                avg[(i, j)] += feats[i].dot(&feats[j]) / seeds as f64;
            }
        }
    }
    let err = (&avg - &q.matrix).norm() / q.matrix.norm();
    assert!(err < 0.03, "{err}");
}

#[test]
fn relu_kernel_concentrates_with_width() {
    let x = points(4, 5, 20);
    let scan = width_scan(|n| Ok(relu_ntk(vec![4, n, 1])), &x, &[64, 256], 20, 100).unwrap();
    assert!(scan[1].mean / scan[0].mean < 0.7, "{} {}", scan[0].mean, scan[1].mean);
}

#[test]
fn wide_relu_net_matches_the_limit_entrywise() {
    let x = points(4, 5, 21);
    let cfg = relu_ntk(vec![4, 1024, 1024, 1]);
    let limit = limiting_ntk(&x, &cfg).unwrap();
    let per_seed: Vec<f64> = (0..20)
        .map(|seed| {
            let w = init_weights(&cfg, 500 + seed).unwrap();
            let k = empirical_ntk(&cfg, &w, &x, 0.0).unwrap();
            let rel: Vec<f64> = k
                .matrix
                .iter()
                .zip(limit.matrix.iter())
                .map(|(a, b)| ((a - b) / b).abs())
                .collect();
            median(rel)
        })
        .collect();
    assert!(median(per_seed.clone()) < 0.1, "{per_seed:?}");
}

fn relu_setup(m: usize, q: usize, seed: u64) -> (NetConfig, DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let cfg = relu_ntk(vec![3, 64, 64, 1]);
    let x = points(3, m, seed);
    let xq = points(3, q, seed + 1);
    let mut rng = rng_for(seed + 2);
    let y = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    (cfg, x, xq, y)
}

fn f0_of(cfg: &NetConfig, seed: u64, x: &DMatrix<f64>) -> DVector<f64> {
    let w = init_weights(cfg, seed).unwrap();
    DVector::from_iterator(x.ncols(), (0..x.ncols()).map(|j| output(cfg, &w, &x.column(j).into_owned()).unwrap()[0]))
}

#[test]
fn linearized_solution_limits() {
    let (cfg, x, xq, y) = relu_setup(6, 3, 30);
    let theta = limiting_ntk(&x, &cfg).unwrap();
    let f0 = f0_of(&cfg, 1, &x);
    let f0q = f0_of(&cfg, 1, &xq);
    let sol = LinearizedSolution::new(theta.matrix.clone(), f0.clone(), y.clone(), 0.5).unwrap();
    assert!((sol.reconstructed_gram() - &theta.matrix).amax() < 1e-8);
    let cross = nngp_cross(&xq, &x, &cfg, true).unwrap();
    assert_eq!(sol.predict(&cross, &f0q, 0.0), f0q);
    let at_train = sol.predict(&theta.matrix, &f0, f64::INFINITY);
    assert!((at_train - &y).amax() < 1e-8);
    // Superposition: predictions are affine in the labels.
    let y2 = y.map(|v| 0.5 - v);
    let s2 = LinearizedSolution::new(theta.matrix.clone(), f0.clone(), y2.clone(), 0.5).unwrap();
    let s3 = LinearizedSolution::new(theta.matrix.clone(), f0.clone(), &y * 0.3 + &y2 * 0.7, 0.5).unwrap();
    for t in [0.7, 5.0, f64::INFINITY] {
        let mix = sol.predict(&cross, &f0q, t) * 0.3 + s2.predict(&cross, &f0q, t) * 0.7;
        assert!((s3.predict(&cross, &f0q, t) - mix).amax() < 1e-10);
    }
}

#[test]
fn closed_form_matches_euler_integration() {
    let (cfg, mut x, mut xq, y) = relu_setup(8, 4, 40);
    // Unit-norm inputs, the usual normalization for tangent kernels.
    for mut c in x.column_iter_mut().chain(xq.column_iter_mut()) {
        let n = c.norm();
        c /= n;
    }
    let theta = limiting_ntk(&x, &cfg).unwrap().matrix;
    let cross = nngp_cross(&xq, &x, &cfg, true).unwrap();
    let (f0, f0q) = (f0_of(&cfg, 2, &x), f0_of(&cfg, 2, &xq));
    let eta = 1.0;
    let sol = LinearizedSolution::new(theta.clone(), f0.clone(), y.clone(), eta).unwrap();
    let m = 8.0;
    let dt = eta * 1e-3;
    let (mut f, mut fq) = (f0.clone(), f0q.clone());
    for _ in 0..1000 {
        let r = &f - &y;
        fq -= &cross * &r * (eta / m * dt);
        f -= &theta * &r * (eta / m * dt);
    }
    let closed = sol.predict(&cross, &f0q, 1.0);
    assert!((closed - fq).amax() < 1e-4);
    assert!((sol.predict(&theta, &f0, 1.0) - f).amax() < 1e-4);
}

#[test]
fn singular_gram_is_reported() {
    let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    let v = DVector::zeros(2);
    assert!(matches!(
        LinearizedSolution::new(g, v.clone(), v, 1.0),
        Err(NtkError::SingularGram { .. })
    ));
}

fn prior(cfg: &NetConfig, x: &DMatrix<f64>, xq: &DMatrix<f64>) -> GpPrior {
    GpPrior {
        train: nngp_gram(x, cfg).unwrap().matrix,
        cross: nngp_cross(xq, x, cfg, false).unwrap(),
        query: nngp_gram(xq, cfg).unwrap().matrix,
    }
}

#[test]
fn posterior_interpolates_train_points() {
    let (cfg, x, _, y) = relu_setup(5, 1, 50);
    let p = prior(&cfg, &x, &x);
    let post = bayes_posterior(&p, &y).unwrap();
    assert!((&post.mean - &y).amax() < 1e-8);
    assert!(post.cov.amax() < 1e-8);
}

#[test]
fn last_layer_training_equals_exact_posterior() {
    let (cfg, x, xq, y) = relu_setup(6, 4, 60);
    let p = prior(&cfg, &x, &xq);
    let sol = LinearizedSolution::new(p.train.clone(), DVector::zeros(6), y.clone(), 1.0).unwrap();
    let gp = sol.gp_moments(&p.cross, &p, f64::INFINITY);
    let post = bayes_posterior(&p, &y).unwrap();
    assert!((&gp.mean - &post.mean).amax() < 1e-8);
    assert!((&gp.cov - &post.cov).amax() < 1e-8);
}

#[test]
fn full_ntk_training_differs_from_the_posterior() {
    let (cfg, x, xq, y) = relu_setup(8, 8, 70);
    let p = prior(&cfg, &x, &xq);
    let theta = limiting_ntk(&x, &cfg).unwrap().matrix;
    let theta_cross = nngp_cross(&xq, &x, &cfg, true).unwrap();
    let sol = LinearizedSolution::new(theta, DVector::zeros(8), y.clone(), 1.0).unwrap();
    let gp = sol.gp_moments(&theta_cross, &p, f64::INFINITY);
    let post = bayes_posterior(&p, &y).unwrap();
    assert!((&gp.cov - &post.cov).amax() > 1e-3);
    for t in [0.0, 1.0, 10.0, f64::INFINITY] {
        let g = sol.gp_moments(&theta_cross, &p, t);
        let k = KernelGram::new(g.cov, KernelTag::Nngp);
        assert!(k.min_eigenvalue() >= -1e-8, "t={t}");
    }
}

#[test]
fn h_infinity_for_orthonormal_inputs() {
    let x = DMatrix::<f64>::identity(3, 2);
    let h = h_infinity(&x);
    assert!((&h.matrix - DMatrix::from_diagonal_element(2, 2, 0.5)).amax() < 1e-15);
    let mc = h_infinity_monte_carlo(&x, 400_000, 3);
    assert!((&mc.matrix - &h.matrix).amax() < 1e-3);
    assert!((h.min_eigenvalue() - 0.5).abs() < 1e-15);
}

#[test]
fn h_infinity_closed_form_matches_monte_carlo() {
    let (x, _) = du_dataset(6, 4, 8);
    let h = h_infinity(&x);
    let mc = h_infinity_monte_carlo(&x, 400_000, 4);
    assert!((&mc.matrix - &h.matrix).amax() < 5e-3);
    assert!(h.is_valid());
}

#[test]
fn du_monitor_respects_the_theorem() {
    let (x, y) = du_dataset(8, 10, 80);
    let mut cfg = DuConfig::new(4096, 0.5, 400, 81);
    cfg.record_every = 10;
    cfg.mc_samples = 20_000;
    let tr = du_convergence_monitor(&x, &y, &cfg).unwrap();
    assert!(tr.lambda0 > 0.0);
    assert!(tr.worst_decay_ratio() <= 1.1, "{}", tr.worst_decay_ratio());
    let disp = tr.max_displacement.iter().copied().fold(0.0, f64::max);
    assert!(disp <= 1.1 * tr.r_prime, "{disp} vs {}", tr.r_prime);
    assert!(tr.loss.last().unwrap() < &(1e-3 * tr.loss[0]));
    assert!(tr.lambda_min.iter().all(|&l| l > tr.lambda0 / 2.0));
}

#[test]
fn kernel_drift_shrinks_with_width() {
    let (x, y) = du_dataset(6, 6, 90);
    let drift: Vec<f64> = [256, 1024, 4096]
        .iter()
        .map(|&n| {
            let mut cfg = DuConfig::new(n, 0.5, 40, 91);
            cfg.record_every = 40;
            cfg.mc_samples = 1000;
            *du_convergence_monitor(&x, &y, &cfg).unwrap().h_drift.last().unwrap()
        })
        .collect();
    assert!(drift.windows(2).all(|w| w[1] < w[0]), "{drift:?}");
}

#[test]
fn du_monitor_rejects_bad_inputs() {
    let x = DMatrix::from_element(2, 2, 1.0);
    let y = DVector::from_vec(vec![0.1, 0.2]);
    assert!(du_convergence_monitor(&x, &y, &DuConfig::new(10, 0.1, 1, 0)).is_err());
    let (x, _) = du_dataset(2, 3, 0);
    let y = DVector::from_vec(vec![1.0, 0.2]);
    assert!(du_convergence_monitor(&x, &y, &DuConfig::new(10, 0.1, 1, 0)).is_err());
}

#[test]
fn alignment_single_mode_and_parseval() {
    let (x, y) = du_dataset(6, 5, 100);
    let h = h_infinity(&x);
    let u0 = DVector::from_element(6, 0.1);
    let times = log_grid(1e-2, 1e2, 20);
    let rep = alignment(&h, &y, &u0, &times);
    let total: f64 = rep.projections.iter().map(|p| p * p).sum();
    assert!((total - (&y - &u0).norm_squared()).abs() < 1e-8);
    assert!(rep.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    // Residual along the top eigenvector decays as a single exponential.
    let v1 = rep.eigenvectors.column(0).into_owned() * 0.7;
    let single = alignment(&h, &(&u0 + &v1), &u0, &times);
    for (t, p) in times.iter().zip(&single.predicted) {
        let expect = (-2.0 * rep.eigenvalues[0] * t).exp() * 0.49;
        assert!((p - expect).abs() < 1e-12);
    }
}

#[test]
fn structured_labels_are_learned_faster() {
    let times: Vec<(f64, f64)> = (0..10u64)
        .map(|seed| {
            let mut rng = rng_for(200 + seed);
            let m = 40;
            let d = 5;
            let mut x = DMatrix::zeros(d, m);
            for j in 0..m {
                let side = if j % 2 == 0 { 1.0 } else { -1.0 };
                x[(0, j)] = side;
                for i in 1..d {
                    x[(i, j)] = 0.3 * rng.random_range(-1.0..1.0);
                }
                let n = x.column(j).norm();
                x.column_mut(j).unscale_mut(n);
            }
            let h = h_infinity(&x);
            let u0 = DVector::zeros(m);
            let structured = DVector::from_fn(m, |j, _| x[(0, j)].signum());
            let random = DVector::from_fn(m, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
            let ts = alignment(&h, &structured, &u0, &[]).time_to_fraction(0.01).unwrap();
            let tr = alignment(&h, &random, &u0, &[]).time_to_fraction(0.01).unwrap();
            (ts, tr)
        })
        .collect();
    let structured = median(times.iter().map(|t| t.0).collect());
    let random = median(times.iter().map(|t| t.1).collect());
    assert!(structured < random, "{times:?}");
}

#[test]
fn width_scan_is_monotone_for_one_and_two_hidden_layers() {
    let x = points(4, 5, 22);
    for depth in [1usize, 2] {
        let scan = width_scan(
            |n| {
                let mut widths = vec![4];
                widths.extend(std::iter::repeat_n(n, depth));
                widths.push(1);
                Ok(relu_ntk(widths))
            },
            &x,
            &[64, 256, 1024],
            20,
            300,
        )
        .unwrap();
        let med: Vec<f64> = scan.iter().map(|s| s.median).collect();
        assert!(med.windows(2).all(|w| w[1] < w[0]), "L={depth}: {med:?}");
    }
}

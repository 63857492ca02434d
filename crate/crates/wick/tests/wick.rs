use std::collections::BTreeSet;

use nalgebra::DVector;
use netcore::{forward, init_weights, param_gradient, Activation, NetConfig};
use wick::*;

fn grad(input: usize) -> Factor {
    Factor { input, derivs: 1 }
}
fn hess(input: usize) -> Factor {
    Factor { input, derivs: 2 }
}
fn val(input: usize) -> Factor {
    Factor { input, derivs: 0 }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `f(x) ∇fᵀ(x) ∇²f(x_1) ∇f(x_2)` with inputs labelled x = 0, x_1 = 1, x_2 = 2.
fn ntk_derivative_spec(inputs: Vec<Vec<f64>>) -> ContractionSpec {
    ContractionSpec {
        factors: vec![val(0), grad(0), hess(1), grad(2)],
        pairs: vec![(1, 2), (2, 3)],
        inputs: (!inputs.is_empty()).then_some(inputs),
    }
}

// Every permutation of 0..2k whose consecutive pairs are increasing and
// whose pair heads are increasing is one matching.
fn brute_force_pairings(k: usize) -> BTreeSet<Vec<(usize, usize)>> {
    fn permute(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            cur.push(x);
            permute(rest, cur, out);
            cur.pop();
            rest.insert(i, x);
        }
    }
    let mut perms = Vec::new();
    permute(&mut (0..2 * k).collect(), &mut Vec::new(), &mut perms);
    perms
        .into_iter()
        .filter(|p| (0..k).all(|i| p[2 * i] < p[2 * i + 1]) && (1..k).all(|i| p[2 * i - 2] < p[2 * i]))
        .map(|p| (0..k).map(|i| (p[2 * i], p[2 * i + 1])).collect())
        .collect()
}

#[test]
fn pairing_counts_match_brute_force() {
    for (k, expected) in [(1, 1), (2, 3), (3, 15), (4, 105)] {
        let got = enumerate_pairings(k).unwrap();
        assert_eq!(got.len(), expected);
        assert_eq!(double_factorial(k), expected as u64);
        let mut canon: BTreeSet<Vec<(usize, usize)>> = BTreeSet::new();
        for p in &got {
            let mut covered: Vec<usize> = p.iter().flat_map(|&(a, b)| [a, b]).collect();
            covered.sort_unstable();
            assert_eq!(covered, (0..2 * k).collect::<Vec<_>>());
            let mut q = p.clone();
            q.sort_unstable();
            canon.insert(q);
        }
        assert_eq!(canon, brute_force_pairings(k));
    }
    assert_eq!(enumerate_pairings(6).unwrap().len(), 10395);
    assert!(matches!(enumerate_pairings(0), Err(WickError::TooLarge(_))));
    assert!(matches!(enumerate_pairings(7), Err(WickError::TooLarge(_))));
}

#[test]
fn fourth_moment_is_three_plus_six_over_n() {
    let poly = exact_correlation(&ContractionSpec::moments(&[0, 0, 0, 0]), 1).unwrap();
    let mono = [(0, 0), (0, 0)];
    assert_eq!(poly.coefficient(0, &mono), 3);
    assert_eq!(poly.coefficient(1, &mono), 6);
    assert_eq!(poly.terms().len(), 2);
    // With no derivatives every pair of matchings is a diagram.
    let count = diagrams(&ContractionSpec::moments(&[0, 0, 0, 0]), 1).unwrap().len();
    assert_eq!(count, 9);
    let six = diagrams(&ContractionSpec::moments(&[0; 6]), 1).unwrap().len();
    assert_eq!(six, 15 * 15);
}

#[test]
fn contracted_pair_gives_two_plus_four_over_n() {
    let spec = ContractionSpec {
        factors: vec![val(0), val(0), grad(0), grad(0)],
        pairs: vec![(2, 3)],
        inputs: None,
    };
    let poly = exact_correlation(&spec, 1).unwrap();
    let mono = [(0, 0), (0, 0)];
    assert_eq!(poly.coefficient(0, &mono), 2);
    assert_eq!(poly.coefficient(1, &mono), 4);
    assert_eq!(poly.terms().len(), 2);
}

#[test]
fn deep_two_point_function_has_no_correction() {
    let poly = exact_correlation(&ContractionSpec::moments(&[0, 1]), 2).unwrap();
    let terms = poly.terms();
    assert_eq!(terms.len(), 1);
    assert_eq!(terms[0].power_of_inv_n, 0);
    assert_eq!(terms[0].coefficient, 1.0);
    assert_eq!(terms[0].monomial, vec![[0, 1]]);
    let v = poly.evaluate(7.0, &[vec![1.5], vec![-0.4]]);
    assert!((v - 1.5 * -0.4).abs() < 1e-15);
}

#[test]
fn odd_correlators_vanish() {
    for depth in 1..=3 {
        assert!(exact_correlation(&ContractionSpec::moments(&[0, 1, 2]), depth).unwrap().is_zero());
    }
    let spec = ContractionSpec {
        factors: vec![val(0), grad(1), grad(2)],
        pairs: vec![(1, 2)],
        inputs: None,
    };
    assert!(exact_correlation(&spec, 1).unwrap().is_zero());
}

// Conditioned on the hidden weights a scalar-input deep linear net is a
// centred gaussian with variance x²·Π|h_l|²/n^L, and each |h_l|² is a
// scaled chi-square; this gives E f^{2k} = (2k−1)!! x^{2k} Π_{j<k}(1 + 2j/n)^L.
fn even_moment_oracle(k: usize, depth: usize, sq_norm: f64, n: f64) -> f64 {
    let growth: f64 = (0..k).map(|j| 1.0 + 2.0 * j as f64 / n).product();
    double_factorial(k) as f64 * sq_norm.powi(k as i32) * growth.powi(depth as i32)
}

#[test]
fn even_moments_match_chi_square_oracle() {
    let x = vec![0.3, -1.1, 0.7];
    let sq = dot(&x, &x);
    for k in 1..=4 {
        let poly = exact_correlation(&ContractionSpec::moments(&vec![0; 2 * k]), 1).unwrap();
        for n in [1.0, 3.0, 10.0, 100.0] {
            let want = even_moment_oracle(k, 1, sq, n);
            let got = poly.evaluate(n, std::slice::from_ref(&x));
            assert!((got - want).abs() < 1e-9 * want, "k={k} n={n}: {got} vs {want}");
        }
    }
    for depth in 2..=3 {
        for k in 1..=3 {
            let poly = exact_correlation(&ContractionSpec::moments(&vec![0; 2 * k]), depth).unwrap();
            for n in [2.0, 5.0, 50.0] {
                let want = even_moment_oracle(k, depth, 0.81, n);
                let got = poly.evaluate(n, &[vec![0.9]]);
                assert!((got - want).abs() < 1e-9 * want, "L={depth} k={k} n={n}");
            }
        }
    }
}

#[test]
fn kernel_expectations_are_depth_times_inner_product() {
    let spec = ContractionSpec {
        factors: vec![grad(0), grad(1)],
        pairs: vec![(0, 1)],
        inputs: None,
    };
    for depth in 1..=3 {
        let poly = exact_correlation(&spec, depth).unwrap();
        assert_eq!(poly.terms().len(), 1);
        assert_eq!(poly.coefficient(0, &[(0, 1)]), depth as u64 + 1);
    }
}

#[test]
fn ntk_derivative_correlator_matches_hand_formula() {
    let spec = ntk_derivative_spec(vec![]);
    let poly = exact_correlation(&spec, 1).unwrap();
    // [(x_1·x_2)|x|² + (x·x_1)(x·x_2)] / n
    assert_eq!(poly.leading_exponent(), Some(-1));
    assert_eq!(poly.coefficient(1, &[(0, 0), (1, 2)]), 1);
    assert_eq!(poly.coefficient(1, &[(0, 1), (0, 2)]), 1);
    assert_eq!(poly.terms().len(), 2);
}

#[test]
fn conjecture_exponent_examples() {
    let two_clusters = ContractionSpec {
        factors: vec![grad(0), grad(1), grad(0), grad(1)],
        pairs: vec![(0, 1), (2, 3)],
        inputs: None,
    };
    assert_eq!(conjecture_exponent(&two_clusters), 0.0);
    assert_eq!(
        two_clusters.cluster_counts(),
        ClusterCounts { n_even: 2, n_odd: 0 }
    );
    let spec = ntk_derivative_spec(vec![]);
    assert_eq!(spec.cluster_counts(), ClusterCounts { n_even: 0, n_odd: 2 });
    assert_eq!(conjecture_exponent(&spec), -1.0);
    let kernel = ContractionSpec {
        factors: vec![grad(0), grad(1)],
        pairs: vec![(0, 1)],
        inputs: None,
    };
    assert_eq!(conjecture_exponent(&kernel), 0.0);
    assert_eq!(conjecture_exponent(&ContractionSpec::moments(&[0, 1, 2, 3])), 0.0);
}

/// All contraction graphs on `m` factors without self-loops, at most two
/// ends per factor and at most `max_pairs` pairs.
fn contraction_graphs(m: usize, max_pairs: usize) -> Vec<Vec<(usize, usize)>> {
    let edges: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    fn rec(
        edges: &[(usize, usize)],
        k: usize,
        degree: &mut Vec<usize>,
        cur: &mut Vec<(usize, usize)>,
        max_pairs: usize,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if k == edges.len() {
            out.push(cur.clone());
            return;
        }
        let (i, j) = edges[k];
        for mult in 0..=2 {
            if degree[i] + mult > 2 || degree[j] + mult > 2 || cur.len() + mult > max_pairs {
                break;
            }
            degree[i] += mult;
            degree[j] += mult;
            cur.extend(std::iter::repeat_n((i, j), mult));
            rec(edges, k + 1, degree, cur, max_pairs, out);
            cur.truncate(cur.len() - mult);
            degree[i] -= mult;
            degree[j] -= mult;
        }
    }
    rec(&edges, 0, &mut vec![0; m], &mut Vec::new(), max_pairs, &mut out);
    out
}

fn spec_from_pairs(m: usize, pairs: Vec<(usize, usize)>) -> ContractionSpec {
    let mut derivs = vec![0; m];
    for &(i, j) in &pairs {
        derivs[i] += 1;
        derivs[j] += 1;
    }
    ContractionSpec {
        factors: (0..m).map(|i| Factor { input: i, derivs: derivs[i] }).collect(),
        pairs,
        inputs: None,
    }
}

fn shallow_specs() -> Vec<ContractionSpec> {
    let mut specs = Vec::new();
    for m in [2, 4, 6] {
        for pairs in contraction_graphs(m, 6) {
            specs.push(spec_from_pairs(m, pairs));
        }
    }
    specs
}

#[test]
fn leading_exponent_equals_conjecture_for_shallow_nets() {
    let specs = shallow_specs();
    assert!(specs.len() > 1000);
    let mut nonzero = 0;
    for spec in &specs {
        let poly = exact_correlation(spec, 1).unwrap();
        if let Some(s) = poly.leading_exponent() {
            nonzero += 1;
            assert_eq!(s as f64, conjecture_exponent(spec), "{spec:?}");
        }
    }
    assert!(nonzero > 1000, "{nonzero}");
}

#[test]
fn shallow_loop_counts_respect_cluster_bound() {
    for spec in shallow_specs().iter().step_by(7) {
        let c = spec.cluster_counts();
        let bound = c.n_even as f64 + c.n_odd as f64 / 2.0;
        for d in diagrams(spec, 1).unwrap() {
            assert!(d.loops as f64 <= bound, "{spec:?}: {} loops", d.loops);
        }
    }
}

#[test]
fn deep_components_respect_euler_bound() {
    let mut checked = 0;
    for depth in 2..=3 {
        let mut specs: Vec<ContractionSpec> = vec![
            ContractionSpec::moments(&[0; 4]),
            ContractionSpec::moments(&[0; 6]),
            ntk_derivative_spec(vec![]),
        ];
        for pairs in contraction_graphs(4, 3) {
            specs.push(spec_from_pairs(4, pairs));
        }
        for spec in &specs {
            for d in diagrams(spec, depth).unwrap() {
                for &(mm, loops) in &d.components {
                    let s = loops as f64 - (depth * mm) as f64 / 2.0;
                    assert!(s <= 1.0 - mm as f64 / 2.0, "L={depth} {spec:?}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn correlators_are_symmetric_within_clusters() {
    for spec in shallow_specs().iter().step_by(5) {
        let reference = exact_correlation(spec, 1).unwrap();
        for cluster in spec.clusters() {
            if cluster.len() < 2 {
                continue;
            }
            let mut order: Vec<usize> = (0..spec.m()).collect();
            let reversed: Vec<usize> = cluster.iter().rev().copied().collect();
            for (slot, &c) in cluster.iter().zip(&reversed) {
                order[*slot] = c;
            }
            assert_eq!(exact_correlation(&spec.permuted(&order), 1).unwrap(), reference);
        }
    }
    // Relabeling the ends of the gradient–Hessian–gradient chain.
    let inputs = [vec![0.2, 0.5], vec![-0.7, 0.1], vec![0.4, 0.9]];
    let spec = ntk_derivative_spec(vec![]);
    let relabeled = ContractionSpec {
        factors: vec![val(0), grad(2), hess(1), grad(0)],
        ..spec.clone()
    };
    let a = exact_correlation(&spec, 1).unwrap().evaluate(10.0, &inputs);
    let b = exact_correlation(&relabeled, 1).unwrap().evaluate(10.0, &inputs);
    assert!((a - b).abs() < 1e-14);
}

#[test]
fn guards_and_errors() {
    assert!(matches!(
        exact_correlation(&ContractionSpec::moments(&[0; 10]), 1),
        Err(WickError::TooLarge(_))
    ));
    let deep_vector = ContractionSpec::moments(&[0, 0]).with_inputs(vec![vec![1.0, 2.0]]);
    assert!(matches!(exact_correlation(&deep_vector, 2), Err(WickError::VectorInputDeep(2))));
    assert!(exact_correlation(&deep_vector, 1).is_ok());
    let mismatch = ContractionSpec {
        factors: vec![grad(0), val(0)],
        pairs: vec![(0, 1)],
        inputs: None,
    };
    assert!(matches!(exact_correlation(&mismatch, 1), Err(WickError::InvalidSpec(_))));
    let cycle = ContractionSpec {
        factors: vec![hess(0), hess(1)],
        pairs: vec![(0, 1), (0, 1)],
        inputs: Some(vec![vec![1.0], vec![0.5]]),
    };
    assert!(exact_correlation(&cycle, 1).is_ok());
    assert!(matches!(mc_correlation(&cycle, 1, 4, 10, 0), Err(WickError::Unsupported(_))));
    let no_inputs = ContractionSpec::moments(&[0, 0]);
    assert!(matches!(mc_correlation(&no_inputs, 1, 4, 10, 0), Err(WickError::InvalidSpec(_))));
    let short = ContractionSpec::moments(&[0, 0]).with_inputs(vec![vec![1.0]]);
    assert!(mc_scaling_check(&short, 1, &[4, 8], 10, 0).is_err());
}

#[test]
fn spec_round_trips_through_json() {
    let text = r#"{"factors":[{"input":0},{"input":0,"derivs":1},{"input":1,"derivs":2},{"input":2,"derivs":1}],
                   "pairs":[[1,2],[2,3]],"inputs":[[1.0,0.0],[0.5,0.5],[0.0,1.0]]}"#;
    let spec: ContractionSpec = serde_json::from_str(text).unwrap();
    assert_eq!(spec.factors[2], hess(1));
    assert_eq!(conjecture_exponent(&spec), -1.0);
    let back: ContractionSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(back, spec);
    let terms = serde_json::to_value(exact_correlation(&spec, 1).unwrap().terms()).unwrap();
    assert_eq!(terms[0]["power_of_inv_n"], 1);
    assert!(serde_json::from_str::<ContractionSpec>(r#"{"factors":[],"bogus":1}"#).is_err());
}

#[test]
fn linear_net_matches_netcore_and_finite_differences() {
    let (d, n, depth) = (3, 6, 2);
    let net = LinearNet::sample(d, n, depth, 11).unwrap();
    let x = [0.4, -0.2, 0.9];
    // The NTK-parameterized netcore net with σ_w = 1 divides by √d at the input.
    let cfg = NetConfig::ntk(vec![d, n, n, 1], Activation::Linear, 1.0).unwrap();
    let w = init_weights(&cfg, 11).unwrap();
    let xs = DVector::from_iterator(d, x.iter().map(|v| v * (d as f64).sqrt()));
    let reference = forward(&cfg, &w, &xs).unwrap().output()[0];
    assert!((net.value(&x) - reference).abs() < 1e-12);
    let g = net.gradient(&x);
    let g_ref = param_gradient(&cfg, &w, &xs, 0).unwrap();
    for (a, b) in g.flatten().iter().zip(g_ref.flatten()) {
        assert!((a - b).abs() < 1e-12);
    }
    // Hessian–vector product against central differences of the gradient.
    let v = LinearNet::sample(d, n, depth, 12).unwrap().weights;
    let hv = net.hessian_vector(&x, &v).flatten();
    let eps = 1e-5;
    let theta = net.weights.flatten();
    let dir = v.flatten();
    let shifted = |s: f64| {
        let flat: Vec<f64> = theta.iter().zip(&dir).map(|(t, u)| t + s * u).collect();
        LinearNet::from_weights(net.weights.with_flat(&flat)).gradient(&x).flatten()
    };
    let (plus, minus) = (shifted(eps), shifted(-eps));
    for k in 0..hv.len() {
        let fd = (plus[k] - minus[k]) / (2.0 * eps);
        assert!((hv[k] - fd).abs() < 1e-7, "{k}: {} vs {fd}", hv[k]);
    }
}

#[test]
fn monte_carlo_fourth_moment_agrees_with_exact() {
    let x = vec![0.6, -0.8, 0.5];
    let spec = ContractionSpec::moments(&[0; 4]).with_inputs(vec![x.clone()]);
    let report = mc_scaling_check(&spec, 1, &[8, 32, 128], 20_000, 2024).unwrap();
    let sq = dot(&x, &x);
    for (k, &n) in report.widths.iter().enumerate() {
        let want = (3.0 + 6.0 / n as f64) * sq * sq;
        assert!((report.exact[k] - want).abs() < 1e-12);
        let z = (report.estimates[k] - want).abs() / report.std_errors[k];
        assert!(z < 3.0, "n={n}: estimate {} ± {} vs {want}", report.estimates[k], report.std_errors[k]);
    }

    let deep = ContractionSpec::moments(&[0; 4]).with_inputs(vec![vec![0.9]]);
    let report = mc_scaling_check(&deep, 2, &[8, 32, 128], 8_000, 7).unwrap();
    assert!(report.max_z() < 3.0, "{report:?}");
}

#[test]
fn ntk_time_derivative_correlator_decays_like_inverse_width() {
    let inputs = vec![vec![0.8, 0.6], vec![0.6, 0.8], vec![1.0, 0.0]];
    let spec = ntk_derivative_spec(inputs);
    let report = mc_scaling_check(&spec, 1, &[16, 64, 256], 4_000, 99).unwrap();
    assert!((-1.4..=-0.6).contains(&report.slope), "{report:?}");
    assert!((report.exact_slope + 1.0).abs() < 1e-12);
    assert!(report.max_z() < 3.0, "{report:?}");

    let deep = ntk_derivative_spec(vec![vec![0.9], vec![-0.7], vec![1.2]]);
    let report = mc_scaling_check(&deep, 2, &[16, 64, 256], 4_000, 5).unwrap();
    assert!((-1.4..=-0.6).contains(&report.slope), "{report:?}");
    assert!(report.max_z() < 3.0, "{report:?}");
}

#[test]
fn kernel_variance_decays_like_inverse_width() {
    let (x1, x2) = (vec![0.8, 0.6, 0.0], vec![0.0, 0.6, 0.8]);
    let report = kernel_variance_check(&x1, &x2, 1, &[16, 64, 256], 4_000, 3).unwrap();
    assert!((-1.4..=-0.6).contains(&report.slope), "{report:?}");
    // Θ̂ = n⁻¹[Σ (w_i·x_1)(w_i·x_2) + |a|² x_1·x_2], a sum of independent terms.
    let c = dot(&x1, &x2);
    for (k, &n) in report.widths.iter().enumerate() {
        let want = (dot(&x1, &x1) * dot(&x2, &x2) + 3.0 * c * c) / n as f64;
        assert!((report.exact[k] - want).abs() < 1e-12, "{} vs {want}", report.exact[k]);
        assert!((report.variances[k] / want - 1.0).abs() < 0.15, "{} vs {want}", report.variances[k]);
    }
}

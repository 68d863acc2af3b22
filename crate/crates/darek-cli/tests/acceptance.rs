//! Acceptance suite: one test per shipped claim, each printing a PASS line
//! with the measured value (visible under `cargo test -- --nocapture`).

use darek::baselines::{ensemble_train, gp_fit, EnsembleModel};
use darek::bound::{
    interp_bound, knot_error_bound, multi_layer_bound, two_layer_bound, DarekQuery,
    LipschitzBudget,
};
use darek::kan::{Dataset, NetworkPlan, TrainConfig};
use darek::oracle::{lagrange_eval, WorstCaseFn};
use darek::poly::{locate_segment, newton_fit, KnotSet, SamplePoints};
use darek_cli::config::{ExperimentConfig, SynthShape};
use darek_cli::{bench, experiments};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn uniform_knot_set(lo: f64, hi: f64, m: usize) -> KnotSet {
    let knots: Vec<f64> = (0..m)
        .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
        .collect();
    KnotSet::new(knots).unwrap()
}

fn temp_out(tag: &str) -> (ExperimentConfig, tempfile::TempDir) {
    let dir = tempfile::Builder::new().prefix(tag).tempdir().unwrap();
    let cfg = ExperimentConfig {
        out: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    (cfg, dir)
}

/// Thm-tightness: on the function with constant (k+1)-th derivative the
/// interpolation bound equals the true stencil-interpolation error.
#[test]
fn criterion_01_tightness_on_the_worst_case_function() {
    let start = Instant::now();
    let mut worst_rel: f64 = 0.0;
    for order in [1usize, 2, 3] {
        let f = WorstCaseFn::new(1.0, order);
        let knots = uniform_knot_set(0.0, 7.0, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + order as u64);
        for _ in 0..200 {
            let x = rng.gen_range(0.0..7.0);
            let bound = interp_bound(&knots, x, order, 1.0).unwrap();
            let j = locate_segment(&knots, x, order);
            let stencil: Vec<(f64, f64)> = knots.as_slice()[j..=j + order]
                .iter()
                .map(|&t| (t, f.eval(t)))
                .collect();
            let true_error = (f.eval(x) - lagrange_eval(&stencil, x).unwrap()).abs();
            let rel = ((true_error - bound) / bound).abs();
            worst_rel = worst_rel.max(rel);
            assert!(rel <= 1e-9, "order {order} at x = {x}: rel {rel}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("PASS criterion 1: tightness, worst relative gap {worst_rel:.2e} in {elapsed:?}");
}

#[test]
fn criterion_02_newton_exactness_on_random_polynomials() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..100 {
        let k = rng.gen_range(0..=5usize);
        let coeffs: Vec<f64> = (0..=k).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let f = |x: f64| coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        let shift = rng.gen_range(-5.0..5.0);
        let xs: Vec<f64> = (0..=k).map(|i| shift + i as f64 * rng.gen_range(0.5..1.5)).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let p = newton_fit(&SamplePoints::from_slices(&xs, &ys).unwrap());
        for _ in 0..100 {
            let x = rng.gen_range(-10.0..10.0);
            let expect = f(x);
            let got = p.eval(x);
            // relative to the evaluation scale: near roots the value itself
            // cancels below what any floating-point route can resolve
            let scale = coeffs
                .iter()
                .rev()
                .fold(0.0f64, |acc, &c| acc * x.abs() + c.abs());
            assert!(
                (got - expect).abs() <= 1e-9 * scale.max(1.0),
                "trial {trial}, degree {k}, x = {x}: {got} vs {expect}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("PASS criterion 2: Newton exactness on 100 random polynomials in {elapsed:?}");
}

#[test]
fn criterion_03_knot_error_bound_reductions() {
    let knots = uniform_knot_set(-3.0, 4.0, 9);
    let zeros = vec![0.0; 9];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let x = rng.gen_range(-5.0..6.0);
        let lk1 = rng.gen_range(0.0..3.0);
        let a = interp_bound(&knots, x, 3, lk1).unwrap();
        let b = knot_error_bound(&knots, &zeros, x, 3, lk1).unwrap();
        assert_eq!(a.to_bits(), b.to_bits(), "zero errors must reduce bitwise");
    }
    let c = 0.37;
    let constant = vec![c; 9];
    for _ in 0..1000 {
        let x = rng.gen_range(-5.0..6.0);
        let a = interp_bound(&knots, x, 3, 1.0).unwrap();
        let b = knot_error_bound(&knots, &constant, x, 3, 1.0).unwrap();
        assert!((b - (a + c)).abs() <= 1e-12, "constant error shift at {x}");
    }
    println!("PASS criterion 3: knot-error bound reductions (bitwise zero case, 1e-12 constant case)");
}

#[test]
fn criterion_04_composition_reductions() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let n = rng.gen_range(1..6);
        let u_g: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
        let u_h = rng.gen_range(0.0..5.0);
        let l1 = rng.gen_range(0.0..3.0);
        let direct = two_layer_bound(u_h, l1, &u_g);
        let composed = multi_layer_bound(&[u_g.clone(), vec![u_h]], &[rng.gen_range(0.0..2.0), l1]);
        assert_eq!(direct.to_bits(), composed.to_bits());
        let single = multi_layer_bound(&[u_g.clone()], &[l1]);
        assert_eq!(single.to_bits(), u_g.iter().sum::<f64>().to_bits());
    }
    println!("PASS criterion 4: multi-layer composition reduces exactly to the two-layer and single-layer forms");
}

#[test]
fn criterion_05_cos_enclosure_at_the_reference_config() {
    let start = Instant::now();
    let (cfg, _dir) = temp_out("acc_cos");
    assert_eq!(cfg.samples, 20);
    assert_eq!(cfg.knots_for_cos(), 9);
    assert_eq!(cfg.order, 3);
    assert_eq!((cfg.l1, cfg.lk1), (1.0, 1.0));
    assert_eq!(cfg.epochs(), 200);
    assert_eq!(cfg.lr(), 1.0);
    let summary = experiments::run_cos1(&cfg).unwrap();
    let elapsed = start.elapsed();
    assert!(
        summary.enclosure_rate >= 0.99,
        "enclosure {} below 0.99",
        summary.enclosure_rate
    );
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "PASS criterion 5: cos enclosure {:.4} (rmse {:.4}) in {elapsed:?}",
        summary.enclosure_rate, summary.final_rmse
    );
}

#[test]
fn criterion_06_distance_awareness_and_knot_annihilation() {
    let knots = uniform_knot_set(-2.0, 2.0, 7);
    let mut previous = interp_bound(&knots, 2.0, 3, 1.0).unwrap();
    for i in 1..=50 {
        let x = 2.0 + 0.15 * i as f64;
        let u = interp_bound(&knots, x, 3, 1.0).unwrap();
        assert!(u > previous, "bound must strictly increase at x = {x}");
        previous = u;
    }
    let zeros = vec![0.0; 7];
    for &tau in knots.as_slice() {
        let u = knot_error_bound(&knots, &zeros, tau, 3, 1.0).unwrap();
        assert_eq!(u, 0.0, "bound must vanish at stencil knot {tau}");
    }
    println!("PASS criterion 6: bound grows monotonically past the data and vanishes at knots");
}

#[test]
fn criterion_07_gradients_match_finite_differences() {
    let xs: Vec<f64> = (0..16).map(|i| -1.0 + 2.0 * i as f64 / 15.0).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| (2.5 * x).cos()).collect();
    let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let data = Dataset::from_scalar(&xs, &ys).unwrap();
    let plan = NetworkPlan {
        arch: vec![1, 3, 1],
        order: 3,
        input_knots: vec![uniform_knot_set(-1.0, 1.0, 6)],
        hidden_knot_count: 6,
    };
    let cfg = TrainConfig {
        seed: 7,
        ..TrainConfig::default()
    };
    let net = plan.build(&inputs, &cfg).unwrap();
    let grad = net.mse_gradient(&data).unwrap();
    let flat = net.coefficients();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let idx = rng.gen_range(0..flat.len());
        let mut probe = net.clone();
        let mut bumped = flat.clone();
        bumped[idx] += h;
        probe.set_coefficients(&bumped).unwrap();
        let up = probe.mse_loss(&data).unwrap();
        bumped[idx] -= 2.0 * h;
        probe.set_coefficients(&bumped).unwrap();
        let down = probe.mse_loss(&data).unwrap();
        let fd = (up - down) / (2.0 * h);
        let rel = (grad[idx] - fd).abs() / fd.abs().max(grad[idx].abs()).max(1e-10);
        worst = worst.max(rel);
        assert!(rel <= 1e-5, "coefficient {idx}: analytic {} vs fd {fd}", grad[idx]);
    }
    println!("PASS criterion 7: gradient vs finite differences, worst relative gap {worst:.2e}");
}

#[test]
fn criterion_08_baseline_oracles() {
    // dense-solve oracle, written out with an explicit Gauss-Jordan inverse
    let n = 20;
    let xs: Vec<f64> = (0..n).map(|i| -10.0 + 20.0 * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| x.cos() + 0.1 * x).collect();
    let jitter = 1e-8;
    let gp = gp_fit(&xs, &ys, 1.0, 1.0, Some(jitter)).unwrap();
    let kernel = |a: f64, b: f64| (-(a - b) * (a - b) / 2.0).exp();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            k[i * n + j] = kernel(xs[i], xs[j]);
        }
        k[i * n + i] += jitter;
    }
    let k_inv = gauss_jordan_inverse(&k, n);
    let mut worst: f64 = 0.0;
    for &x in &[-8.3, -4.0, -0.5, 0.0, 2.2, 6.9, 12.0] {
        let k_star: Vec<f64> = xs.iter().map(|&xi| kernel(x, xi)).collect();
        let mut mean = 0.0;
        let mut reduction = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += k_inv[i * n + j] * k_star[j];
            }
            mean += row * ys[i];
            reduction += row * k_star[i];
        }
        let var_expect = (1.0 - reduction).max(0.0);
        let (m, v) = gp.predict(x);
        worst = worst.max((m - mean).abs()).max((v - var_expect).abs());
        assert!((m - mean).abs() <= 1e-8, "mean at {x}: {m} vs {mean}");
        assert!((v - var_expect).abs() <= 1e-8, "variance at {x}: {v} vs {var_expect}");
    }
    // posterior collapse at a training point
    for &x in xs.iter().take(5) {
        let (_, v) = gp.predict(x);
        assert!(v <= 10.0 * gp.jitter(), "variance {v} at training point {x}");
    }
    // identical ensemble members have zero spread
    let (xs20, ys20) = experiments::cos_samples(20);
    let plan = NetworkPlan {
        arch: vec![1, 1],
        order: 3,
        input_knots: vec![uniform_knot_set(-6.0, 6.0, 7)],
        hidden_knot_count: 7,
    };
    let cfg = TrainConfig {
        epochs: 20,
        ..TrainConfig::default()
    };
    let data = Dataset::from_scalar(&xs20, &ys20).unwrap();
    let mut member = plan.build(data.inputs(), &cfg).unwrap();
    member.train(&data, &cfg).unwrap();
    let twins = EnsembleModel::from_members(vec![member.clone(), member.clone(), member]).unwrap();
    let (_, sigma) = twins.predict(&[0.8]).unwrap();
    assert_eq!(sigma, 0.0);
    println!("PASS criterion 8: GP matches the dense-solve oracle (worst gap {worst:.2e}), collapses at data, identical ensemble has zero spread");
}

#[test]
fn criterion_09_query_speed_and_scaling() {
    let start = Instant::now();
    let (cfg, _dir) = temp_out("acc_bench");
    let summary = bench::run_bench(&cfg).unwrap();
    let elapsed = start.elapsed();
    assert!(
        summary.darek_m20_median_ns < summary.ensemble_q10_m20_median_ns,
        "bound query {} ns not faster than ensemble {} ns",
        summary.darek_m20_median_ns,
        summary.ensemble_q10_m20_median_ns
    );
    assert!(
        summary.scaling_ratio < 8.0,
        "t(1024)/t(16) = {} not sublinear",
        summary.scaling_ratio
    );
    for row in &summary.rows {
        assert!(row.max_comparisons <= row.comparison_budget);
    }
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "PASS criterion 9: bound query {} ns < ensemble {} ns; t(1024)/t(16) = {:.2} in {elapsed:?}",
        summary.darek_m20_median_ns, summary.ensemble_q10_m20_median_ns, summary.scaling_ratio
    );
}

#[test]
fn criterion_10_shape_enclosure_on_the_synthetic_circle() {
    let (mut cfg, _dir) = temp_out("acc_scan");
    cfg.synth = Some(SynthShape::Circle);
    assert_eq!(cfg.knots_for_scan(), 20);
    let summary = experiments::run_scan(&cfg).unwrap();
    let rate = summary.boundary_enclosure_rate.expect("synthetic truth");
    assert_eq!(summary.test_angles, 180);
    assert!(rate >= 0.90, "boundary enclosure {rate} below 0.90");
    println!(
        "PASS criterion 10: circle boundary enclosure {:.4} over {} angles (rmse {:.4})",
        rate, summary.test_angles, summary.final_rmse
    );
}

/// Row-reduction inverse used as the independent linear-algebra oracle.
fn gauss_jordan_inverse(a: &[f64], n: usize) -> Vec<f64> {
    let w = 2 * n;
    let mut aug = vec![0.0; n * w];
    for i in 0..n {
        for j in 0..n {
            aug[i * w + j] = a[i * n + j];
        }
        aug[i * w + n + i] = 1.0;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| {
                aug[r * w + col]
                    .abs()
                    .partial_cmp(&aug[s * w + col].abs())
                    .unwrap()
            })
            .unwrap();
        if pivot_row != col {
            for j in 0..w {
                aug.swap(col * w + j, pivot_row * w + j);
            }
        }
        let pivot = aug[col * w + col];
        for j in 0..w {
            aug[col * w + j] /= pivot;
        }
        for row in 0..n {
            if row != col {
                let factor = aug[row * w + col];
                for j in 0..w {
                    aug[row * w + j] -= factor * aug[col * w + j];
                }
            }
        }
    }
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            inv[i * n + j] = aug[i * w + n + j];
        }
    }
    inv
}

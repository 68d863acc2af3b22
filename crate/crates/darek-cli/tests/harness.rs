//! Harness-level behavior: determinism of emitted files, pipeline totality,
//! degenerate-scan flagging, and the CLI's exit-code contract.

use darek_cli::config::ExperimentConfig;
use darek_cli::experiments;
use std::fs;
use std::process::Command;

fn temp_cfg(tag: &str) -> (ExperimentConfig, tempfile::TempDir) {
    let dir = tempfile::Builder::new().prefix(tag).tempdir().unwrap();
    let cfg = ExperimentConfig {
        out: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    (cfg, dir)
}

#[test]
fn cos1_output_is_byte_identical_across_runs() {
    let (cfg_a, _dir_a) = temp_cfg("cos1a");
    let (cfg_b, _dir_b) = temp_cfg("cos1b");
    experiments::run_cos1(&cfg_a).unwrap();
    experiments::run_cos1(&cfg_b).unwrap();
    let a = fs::read(cfg_a.out.join("cos1.csv")).unwrap();
    let b = fs::read(cfg_b.out.join("cos1.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn summary_enclosure_rate_is_recomputable_from_the_csv() {
    let (cfg, _dir) = temp_cfg("cos1r");
    let summary = experiments::run_cos1(&cfg).unwrap();
    let text = fs::read_to_string(cfg.out.join("cos1.csv")).unwrap();
    let mut inside = 0usize;
    let mut rows = 0usize;
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (f_true, _f_hat, u, lo, hi) = (cols[1], cols[2], cols[3], cols[4], cols[5]);
        assert!(u >= 0.0);
        assert_eq!(lo, cols[2] - u);
        assert_eq!(hi, cols[2] + u);
        if f_true >= lo && f_true <= hi {
            inside += 1;
        }
        rows += 1;
    }
    assert_eq!(rows, summary.grid_points);
    assert_eq!(summary.enclosure_rate, inside as f64 / rows as f64);
}

#[test]
fn zero_epoch_run_still_produces_bounds() {
    let (mut cfg, _dir) = temp_cfg("cos1z");
    cfg.epochs = Some(0);
    let summary = experiments::run_cos1(&cfg).unwrap();
    assert!(summary.enclosure_rate.is_finite());
    assert!(summary.final_rmse > 0.1, "untrained net should fit poorly");
    let text = fs::read_to_string(cfg.out.join("cos1.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[3].is_finite() && cols[3] >= 0.0);
    }
}

#[test]
fn exact_fit_variant_has_zero_bounds_at_knots() {
    // synthetic variant of the cosine run: anchor the bound at the net's own
    // knot values so knot errors vanish, then the bound is zero at each knot
    use darek::bound::{DarekQuery, LipschitzBudget};
    use darek::kan::{select_knots, Dataset, NetworkPlan, TrainConfig};
    use darek::poly::KnotSet;

    let (xs, ys) = experiments::cos_samples(20);
    let knot_xs = select_knots(&xs, 9, 1);
    let plan = NetworkPlan {
        arch: vec![1, 1],
        order: 3,
        input_knots: vec![KnotSet::new(knot_xs.clone()).unwrap()],
        hidden_knot_count: 9,
    };
    let tc = TrainConfig::default();
    let data = Dataset::from_scalar(&xs, &ys).unwrap();
    let mut net = plan.build(data.inputs(), &tc).unwrap();
    net.train(&data, &tc).unwrap();
    let own: Vec<f64> = knot_xs
        .iter()
        .map(|&x| net.predict_scalar(&[x]).unwrap())
        .collect();
    let exact = Dataset::from_scalar(&knot_xs, &own).unwrap();
    let query =
        DarekQuery::build(&net, &exact, &LipschitzBudget::new(1.0, 1.0, 3, 1)).unwrap();
    for &tau in &knot_xs {
        let (_, u) = query.bound(&[tau]).unwrap();
        assert_eq!(u, 0.0, "bound must vanish at knot {tau}");
    }
}

#[test]
fn compare_emits_finite_bands_and_gp_collapses_at_training_points() {
    let (cfg, _dir) = temp_cfg("cmp");
    let summary = experiments::run_compare(&cfg).unwrap();
    assert!(summary.darek_enclosure_rate.is_finite());
    let text = fs::read_to_string(cfg.out.join("compare.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "x,f_true,darek_pred,darek_u,darek_lo,darek_hi,\
         ens_mean,ens_sigma,ens_lo,ens_hi,gp_mean,gp_sigma,gp_lo,gp_hi"
    );
    let mut min_gp_sigma = f64::INFINITY;
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols.iter().all(|v| v.is_finite()), "non-finite band value");
        // the grid passes close to training points where the noise-free GP
        // posterior collapses
        min_gp_sigma = min_gp_sigma.min(cols[11]);
    }
    assert!(
        min_gp_sigma < 1e-3,
        "GP sigma never collapsed: min {min_gp_sigma}"
    );
}

#[test]
fn degenerate_single_ray_scan_trains_and_flags_the_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let scan_path = dir.path().join("one_ray.csv");
    fs::write(&scan_path, "theta,range\n0.0,2.0\n").unwrap();
    let cfg = ExperimentConfig {
        out: dir.path().to_path_buf(),
        scan: Some(scan_path),
        epochs: Some(40),
        ..ExperimentConfig::default()
    };
    let summary = experiments::run_scan(&cfg).unwrap();
    assert!(
        !summary.degenerate_fallbacks.is_empty(),
        "collapsed images must be flagged"
    );
    assert!(summary.boundary_enclosure_rate.is_none());
    assert!(summary.final_rmse.is_finite());
}

#[test]
fn scan_hit_point_predictions_are_near_zero() {
    let (mut cfg, _dir) = temp_cfg("scanhit");
    cfg.synth = Some(darek_cli::config::SynthShape::Circle);
    cfg.rays = 40;
    let summary = experiments::run_scan(&cfg).unwrap();
    // the fit rmse bounds the typical hit-point residual
    assert!(summary.final_rmse < 0.1, "rmse {}", summary.final_rmse);
}

fn darek_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_darek"))
}

#[test]
fn cli_exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    // validation error: no scan source
    let out = darek_bin()
        .args(["scan", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    // validation error: malformed scan file, line cited
    let scan_path = dir.path().join("bad.csv");
    fs::write(&scan_path, "theta,range\n0.0,2.0\n0.1,-1\n").unwrap();
    let out = darek_bin()
        .args(["scan", "--scan"])
        .arg(&scan_path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");

    // numerical failure: guaranteed divergence
    let out = darek_bin()
        .args(["cos1", "--lr", "1e9", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("diverged"), "stderr: {stderr}");
}

#[test]
fn cli_runs_cos1_and_reports_the_enclosure() {
    let dir = tempfile::tempdir().unwrap();
    let out = darek_bin()
        .args(["cos1", "--epochs", "50", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("enclosure"), "stdout: {stdout}");
    assert!(dir.path().join("cos1.csv").exists());
    assert!(dir.path().join("cos1_summary.json").exists());
}

#[test]
fn config_file_sets_values_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.json");
    fs::write(
        &config_path,
        format!(
            "{{\"seed\": 7, \"epochs\": 25, \"out\": {:?}}}",
            dir.path().display().to_string()
        ),
    )
    .unwrap();
    let out = darek_bin()
        .args(["cos1", "--config"])
        .arg(&config_path)
        .args(["--seed", "9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let summary = fs::read_to_string(dir.path().join("cos1_summary.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(value["seed"], 9, "flag must override the config file");
    assert_eq!(value["epochs"], 25, "config value must survive");
}

#[test]
fn plot_flag_writes_svg() {
    let (mut cfg, _dir) = temp_cfg("plot");
    cfg.plot = true;
    cfg.epochs = Some(20);
    experiments::run_cos1(&cfg).unwrap();
    let svg = fs::read_to_string(cfg.out.join("cos1.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

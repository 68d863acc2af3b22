//! The reproducible experiment runs: one- and two-layer cosine enclosure,
//! baseline comparison, and object-shape estimation from a laser scan.
//!
//! Every run is deterministic given its configuration and seed; result CSVs
//! are byte-identical across repeats. Timings never go into CSVs, only into
//! the summary JSON.

use crate::config::{CliError, ExperimentConfig};
use crate::plot;
use crate::scan::{self, LaserScan};
use darek::baselines::{ensemble_train, gp_fit, EnsembleModel};
use darek::bound::{DarekQuery, LipschitzBudget};
use darek::kan::{select_knots, Dataset, NetworkPlan, TrainConfig};
use darek::poly::KnotSet;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Evaluation grid size for the cosine experiments.
pub const GRID_POINTS: usize = 400;
/// Test angles for the scan experiment's boundary sweep.
pub const SCAN_TEST_ANGLES: usize = 180;
/// Ensemble size for the comparison experiment.
pub const ENSEMBLE_SIZE: usize = 10;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))
}

/// Cosine training data: equally spaced samples over `[-2pi, 2pi]`.
pub fn cos_samples(n: usize) -> (Vec<f64>, Vec<f64>) {
    let xs = linspace(-TWO_PI, TWO_PI, n);
    let ys = xs.iter().map(|x| x.cos()).collect();
    (xs, ys)
}

fn train_config(cfg: &ExperimentConfig, learning_rate: f64) -> TrainConfig {
    TrainConfig {
        epochs: cfg.epochs(),
        learning_rate,
        seed: cfg.seed,
        init_scale: 0.1,
    }
}

/// Summary of a cosine enclosure run.
#[derive(Debug, Clone, Serialize)]
pub struct CosSummary {
    pub experiment: String,
    pub seed: u64,
    pub order: usize,
    pub l1: f64,
    pub lk1: f64,
    pub samples: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub knot_abscissae: Vec<f64>,
    pub grid_points: usize,
    pub enclosure_rate: f64,
    pub final_rmse: f64,
    pub csv: String,
}

struct CosArtifacts {
    summary: CosSummary,
    grid: Vec<f64>,
    truth: Vec<f64>,
    prediction: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn run_cos_arch(
    cfg: &ExperimentConfig,
    arch: Vec<usize>,
    name: &str,
) -> Result<CosArtifacts, CliError> {
    cfg.validate()?;
    let (xs, ys) = cos_samples(cfg.samples);
    let knot_xs = select_knots(&xs, cfg.knots_for_cos(), cfg.seed);
    let knot_ys: Vec<f64> = knot_xs.iter().map(|x| x.cos()).collect();
    let n_layers = arch.len() - 1;
    let plan = NetworkPlan {
        arch,
        order: cfg.order,
        input_knots: vec![KnotSet::new(knot_xs.clone())?],
        hidden_knot_count: cfg.knots_for_cos(),
    };
    let tc = train_config(cfg, cfg.lr());
    let data = Dataset::from_scalar(&xs, &ys)?;
    let mut net = plan.build(data.inputs(), &tc)?;
    net.train(&data, &tc)?;
    let final_rmse = net.mse_loss(&data)?.sqrt();

    let bound_data = Dataset::from_scalar(&knot_xs, &knot_ys)?;
    let budget = LipschitzBudget::new(cfg.l1, cfg.lk1, cfg.order, n_layers);
    let query = DarekQuery::build(&net, &bound_data, &budget)?;

    let grid = linspace(-TWO_PI, TWO_PI, GRID_POINTS);
    let mut csv = String::from("x,f_true,f_hat,u,lo,hi\n");
    let mut truth = Vec::with_capacity(GRID_POINTS);
    let mut prediction = Vec::with_capacity(GRID_POINTS);
    let mut lo_band = Vec::with_capacity(GRID_POINTS);
    let mut hi_band = Vec::with_capacity(GRID_POINTS);
    let mut enclosed = 0usize;
    for &x in &grid {
        let f_true = x.cos();
        let (f_hat, u) = query.bound(&[x])?;
        let (lo, hi) = (f_hat - u, f_hat + u);
        if f_true >= lo && f_true <= hi {
            enclosed += 1;
        }
        csv.push_str(&format!("{x},{f_true},{f_hat},{u},{lo},{hi}\n"));
        truth.push(f_true);
        prediction.push(f_hat);
        lo_band.push(lo);
        hi_band.push(hi);
    }
    let enclosure_rate = enclosed as f64 / GRID_POINTS as f64;

    let csv_path = cfg.out.join(format!("{name}.csv"));
    write_file(&csv_path, &csv)?;
    let summary = CosSummary {
        experiment: name.to_string(),
        seed: cfg.seed,
        order: cfg.order,
        l1: cfg.l1,
        lk1: cfg.lk1,
        samples: cfg.samples,
        epochs: tc.epochs,
        learning_rate: tc.learning_rate,
        knot_abscissae: knot_xs,
        grid_points: GRID_POINTS,
        enclosure_rate,
        final_rmse,
        csv: csv_path.display().to_string(),
    };
    write_file(
        &cfg.out.join(format!("{name}_summary.json")),
        &to_pretty_json(&summary)?,
    )?;
    Ok(CosArtifacts {
        summary,
        grid,
        truth,
        prediction,
        lo: lo_band,
        hi: hi_band,
    })
}

fn maybe_plot_cos(cfg: &ExperimentConfig, name: &str, art: &CosArtifacts) -> Result<(), CliError> {
    if !cfg.plot {
        return Ok(());
    }
    let path = cfg.out.join(format!("{name}.svg"));
    plot::write_band_plot(
        &path,
        name,
        &art.grid,
        &[("f_true", &art.truth), ("f_hat", &art.prediction)],
        Some((&art.lo, &art.hi)),
    )?;
    Ok(())
}

/// One-layer cosine enclosure run.
pub fn run_cos1(cfg: &ExperimentConfig) -> Result<CosSummary, CliError> {
    let art = run_cos_arch(cfg, vec![1, 1], "cos1")?;
    maybe_plot_cos(cfg, "cos1", &art)?;
    Ok(art.summary)
}

/// Two-layer cosine enclosure run on the same data, architecture `[1, 2, 1]`.
pub fn run_cos2(cfg: &ExperimentConfig) -> Result<CosSummary, CliError> {
    let art = run_cos_arch(cfg, vec![1, 2, 1], "cos2")?;
    maybe_plot_cos(cfg, "cos2", &art)?;
    Ok(art.summary)
}

/// Summary of the baseline comparison run.
#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub experiment: String,
    pub seed: u64,
    pub ensemble_size: usize,
    pub darek_enclosure_rate: f64,
    pub ensemble_enclosure_rate: f64,
    pub gp_enclosure_rate: f64,
    /// Median wall-clock per query, nanoseconds (not in the CSV: timings are
    /// machine-dependent).
    pub darek_query_median_ns: u64,
    pub ensemble_query_median_ns: u64,
    pub csv: String,
}

fn median_ns(mut op: impl FnMut(usize), reps: usize) -> u64 {
    let mut times: Vec<u64> = (0..reps)
        .map(|i| {
            let start = Instant::now();
            op(i);
            start.elapsed().as_nanos() as u64
        })
        .collect();
    times.sort_unstable();
    times[times.len() / 2]
}

/// Two-layer bound model against a 10-member ensemble and an exact GP, all on
/// the cosine data.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<CompareSummary, CliError> {
    cfg.validate()?;
    let (xs, ys) = cos_samples(cfg.samples);
    let knot_xs = select_knots(&xs, cfg.knots_for_cos(), cfg.seed);
    let knot_ys: Vec<f64> = knot_xs.iter().map(|x| x.cos()).collect();
    let plan = NetworkPlan {
        arch: vec![1, 2, 1],
        order: cfg.order,
        input_knots: vec![KnotSet::new(knot_xs.clone())?],
        hidden_knot_count: cfg.knots_for_cos(),
    };
    let tc = train_config(cfg, cfg.lr());
    let data = Dataset::from_scalar(&xs, &ys)?;
    let mut net = plan.build(data.inputs(), &tc)?;
    net.train(&data, &tc)?;
    let bound_data = Dataset::from_scalar(&knot_xs, &knot_ys)?;
    let budget = LipschitzBudget::new(cfg.l1, cfg.lk1, cfg.order, 2);
    let query = DarekQuery::build(&net, &bound_data, &budget)?;

    let ensemble = ensemble_train(&plan, &data, ENSEMBLE_SIZE, cfg.seed, &tc)?;
    let gp = gp_fit(&xs, &ys, 1.0, 1.0, None).map_err(CliError::from)?;

    let grid = linspace(-TWO_PI, TWO_PI, GRID_POINTS);
    let mut csv = String::from(
        "x,f_true,darek_pred,darek_u,darek_lo,darek_hi,\
         ens_mean,ens_sigma,ens_lo,ens_hi,gp_mean,gp_sigma,gp_lo,gp_hi\n",
    );
    let mut inside = [0usize; 3];
    for &x in &grid {
        let f_true = x.cos();
        let (dp, du) = query.bound(&[x])?;
        let (em, es) = ensemble.predict(&[x])?;
        let (gm, gv) = gp.predict(x);
        let gs = gv.sqrt();
        let bands = [
            (dp - du, dp + du),
            (em - 3.0 * es, em + 3.0 * es),
            (gm - 3.0 * gs, gm + 3.0 * gs),
        ];
        for (slot, &(lo, hi)) in bands.iter().enumerate() {
            if f_true >= lo && f_true <= hi {
                inside[slot] += 1;
            }
        }
        csv.push_str(&format!(
            "{x},{f_true},{dp},{du},{},{},{em},{es},{},{},{gm},{gs},{},{}\n",
            bands[0].0, bands[0].1, bands[1].0, bands[1].1, bands[2].0, bands[2].1
        ));
    }
    let csv_path = cfg.out.join("compare.csv");
    write_file(&csv_path, &csv)?;

    let (darek_ns, ensemble_ns) = time_query_vs_ensemble(&query, &ensemble, &grid)?;
    let summary = CompareSummary {
        experiment: "compare".to_string(),
        seed: cfg.seed,
        ensemble_size: ENSEMBLE_SIZE,
        darek_enclosure_rate: inside[0] as f64 / GRID_POINTS as f64,
        ensemble_enclosure_rate: inside[1] as f64 / GRID_POINTS as f64,
        gp_enclosure_rate: inside[2] as f64 / GRID_POINTS as f64,
        darek_query_median_ns: darek_ns,
        ensemble_query_median_ns: ensemble_ns,
        csv: csv_path.display().to_string(),
    };
    write_file(&cfg.out.join("compare_summary.json"), &to_pretty_json(&summary)?)?;
    if cfg.plot {
        let mut darek_lo = Vec::new();
        let mut darek_hi = Vec::new();
        let mut truth = Vec::new();
        for &x in &grid {
            let (p, u) = query.bound(&[x])?;
            darek_lo.push(p - u);
            darek_hi.push(p + u);
            truth.push(x.cos());
        }
        plot::write_band_plot(
            &cfg.out.join("compare.svg"),
            "compare",
            &grid,
            &[("f_true", &truth)],
            Some((&darek_lo, &darek_hi)),
        )?;
    }
    Ok(summary)
}

/// Median per-query wall clock of the bound query and the ensemble
/// prediction over the same points.
pub fn time_query_vs_ensemble(
    query: &DarekQuery,
    ensemble: &EnsembleModel,
    points: &[f64],
) -> Result<(u64, u64), CliError> {
    let reps = points.len().max(1000);
    let darek_ns = median_ns(
        |i| {
            let x = points[i % points.len()];
            std::hint::black_box(query.bound(&[x]).expect("query"));
        },
        reps,
    );
    let ensemble_ns = median_ns(
        |i| {
            let x = points[i % points.len()];
            std::hint::black_box(ensemble.predict(&[x]).expect("predict"));
        },
        reps,
    );
    Ok((darek_ns, ensemble_ns))
}

/// Summary of the scan run.
#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub experiment: String,
    pub seed: u64,
    pub rays: usize,
    pub training_samples: usize,
    pub knots: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub final_rmse: f64,
    /// Fraction of test angles whose true boundary lies inside the band;
    /// absent for file scans without ground truth.
    pub boundary_enclosure_rate: Option<f64>,
    pub test_angles: usize,
    pub degenerate_fallbacks: Vec<String>,
    pub sdf_csv: String,
    pub boundary_csv: String,
}

/// Two-layer `[2, 20, 1]` signed-distance fit on a laser scan, with bounds on
/// test rays and a radial boundary report.
pub fn run_scan(cfg: &ExperimentConfig) -> Result<ScanSummary, CliError> {
    cfg.validate()?;
    let (laser, truth): (LaserScan, Option<(crate::config::SynthShape, f64, f64)>) =
        match (&cfg.scan, cfg.synth) {
            (Some(path), _) => (scan::load_scan(path)?, None),
            (None, Some(shape)) => (
                scan::synth_scan(
                    shape,
                    scan::Pose::default(),
                    cfg.radius,
                    cfg.dist,
                    cfg.rays,
                    cfg.seed,
                )?,
                Some((shape, cfg.radius, cfg.dist)),
            ),
            (None, None) => {
                return Err(CliError::Validation(
                    "scan needs --scan FILE or --synth circle|box".into(),
                ))
            }
        };
    let (inputs, targets) = scan::sdf_dataset(&laser);
    if inputs.is_empty() {
        return Err(CliError::Validation("scan produced no SDF samples".into()));
    }
    let knot_count = cfg.knots_for_scan();
    let input_knots: Vec<KnotSet> = (0..2)
        .map(|d| {
            let column: Vec<f64> = inputs.iter().map(|p| p[d]).collect();
            KnotSet::new(scan::quantile_knots(&column, knot_count)).map_err(CliError::from)
        })
        .collect::<Result<_, _>>()?;
    let plan = NetworkPlan {
        arch: vec![2, 20, 1],
        order: cfg.order,
        input_knots,
        hidden_knot_count: knot_count,
    };
    let tc = train_config(cfg, cfg.lr_for_scan());
    let target_rows: Vec<Vec<f64>> = targets.iter().map(|&t| vec![t]).collect();
    let data = Dataset::new(inputs.clone(), target_rows)?;
    let mut net = plan.build(data.inputs(), &tc)?;
    net.train(&data, &tc)?;
    let final_rmse = net.mse_loss(&data)?.sqrt();

    let budget = LipschitzBudget::new(cfg.l1, cfg.lk1, cfg.order, 2);
    let query = DarekQuery::build(&net, &data, &budget)?;
    let probe = query.report(&inputs[0])?;
    let degenerate = probe.degenerate_fallbacks.clone();

    // test sweep: angles strictly inside the training cone
    let records = laser.records();
    let (theta_lo, theta_hi) = (records[0].0, records[records.len() - 1].0);
    let margin = 0.02 * (theta_hi - theta_lo);
    let test_angles = linspace(theta_lo + margin, theta_hi - margin, SCAN_TEST_ANGLES);
    let range_hi = records
        .iter()
        .map(|r| r.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let range_lo = records.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);

    let mut sdf_csv = String::from("x,y,sdf_true,sdf_pred,u,lo,hi\n");
    let mut boundary_csv = String::from("theta,r_true,r_pred,u,r_lo,r_hi,x,y,enclosed\n");
    let mut enclosed_count = 0usize;
    let mut truth_count = 0usize;
    for &theta in &test_angles {
        let r_true = truth.and_then(|(shape, radius, dist)| {
            scan::ray_range(shape, radius, dist, theta)
        });
        // SDF rows along the test ray around the observed range band
        let d_lo = (range_lo - scan::SDF_TRUNCATION).max(scan::SDF_STEP);
        let d_hi = range_hi + scan::SDF_TRUNCATION;
        let mut d = d_lo;
        while d <= d_hi + 1e-12 {
            let (px, py) = laser.pose.project(theta, d);
            let (pred, u) = query.bound(&[px, py]).map_err(CliError::from)?;
            let sdf_true = match r_true {
                Some(r) => (r - d).clamp(-scan::SDF_TRUNCATION, scan::SDF_TRUNCATION),
                None => f64::NAN,
            };
            sdf_csv.push_str(&format!(
                "{px},{py},{sdf_true},{pred},{u},{},{}\n",
                pred - u,
                pred + u
            ));
            d += scan::SDF_STEP;
        }
        // predicted boundary: zero crossing of the SDF estimate along the ray
        let crossing = find_zero_crossing(
            |d| {
                let (px, py) = laser.pose.project(theta, d);
                query.bound(&[px, py]).map(|(p, _)| p)
            },
            d_lo,
            d_hi,
        )?;
        match crossing {
            Some(r_pred) => {
                let (px, py) = laser.pose.project(theta, r_pred);
                let (_, u) = query.bound(&[px, py]).map_err(CliError::from)?;
                let enclosed = match r_true {
                    Some(r) => {
                        truth_count += 1;
                        let hit = (r - r_pred).abs() <= u;
                        if hit {
                            enclosed_count += 1;
                        }
                        hit as u8
                    }
                    None => 0,
                };
                boundary_csv.push_str(&format!(
                    "{theta},{},{r_pred},{u},{},{},{px},{py},{enclosed}\n",
                    r_true.unwrap_or(f64::NAN),
                    r_pred - u,
                    r_pred + u
                ));
            }
            None => {
                if r_true.is_some() {
                    truth_count += 1;
                }
                boundary_csv.push_str(&format!(
                    "{theta},{},NaN,NaN,NaN,NaN,NaN,NaN,0\n",
                    r_true.unwrap_or(f64::NAN)
                ));
            }
        }
    }
    let boundary_enclosure_rate =
        (truth_count > 0).then(|| enclosed_count as f64 / truth_count as f64);

    let sdf_path = cfg.out.join("scan_sdf.csv");
    let boundary_path = cfg.out.join("scan_boundary.csv");
    write_file(&sdf_path, &sdf_csv)?;
    write_file(&boundary_path, &boundary_csv)?;
    let summary = ScanSummary {
        experiment: "scan".to_string(),
        seed: cfg.seed,
        rays: laser.len(),
        training_samples: inputs.len(),
        knots: knot_count,
        epochs: tc.epochs,
        learning_rate: tc.learning_rate,
        final_rmse,
        boundary_enclosure_rate,
        test_angles: SCAN_TEST_ANGLES,
        degenerate_fallbacks: degenerate,
        sdf_csv: sdf_path.display().to_string(),
        boundary_csv: boundary_path.display().to_string(),
    };
    write_file(&cfg.out.join("scan_summary.json"), &to_pretty_json(&summary)?)?;
    if cfg.plot {
        let thetas: Vec<f64> = test_angles.clone();
        let mut r_pred = Vec::new();
        let mut r_lo = Vec::new();
        let mut r_hi = Vec::new();
        for line in boundary_csv.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let p: f64 = cols[2].parse().unwrap_or(f64::NAN);
            let u: f64 = cols[3].parse().unwrap_or(f64::NAN);
            r_pred.push(p);
            r_lo.push(p - u);
            r_hi.push(p + u);
        }
        plot::write_band_plot(
            &cfg.out.join("scan_boundary.svg"),
            "scan boundary",
            &thetas,
            &[("r_pred", &r_pred)],
            Some((&r_lo, &r_hi)),
        )?;
    }
    Ok(summary)
}

/// First positive-to-negative zero crossing of `f` on `[lo, hi]`, refined by
/// bisection. The SDF convention is positive before the boundary.
fn find_zero_crossing(
    mut f: impl FnMut(f64) -> Result<f64, darek::Error>,
    lo: f64,
    hi: f64,
) -> Result<Option<f64>, CliError> {
    const COARSE_STEP: f64 = 0.02;
    let mut previous_d = lo;
    let mut previous_v = f(lo).map_err(CliError::from)?;
    let mut d = lo + COARSE_STEP;
    while d <= hi + 1e-12 {
        let v = f(d).map_err(CliError::from)?;
        if previous_v >= 0.0 && v < 0.0 {
            // bisection on [previous_d, d]
            let (mut a, mut b) = (previous_d, d);
            for _ in 0..50 {
                let mid = 0.5 * (a + b);
                let vm = f(mid).map_err(CliError::from)?;
                if vm >= 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        previous_d = d;
        previous_v = v;
        d += COARSE_STEP;
    }
    Ok(None)
}

/// Loads `--config FILE` if present, then overlays explicit CLI flags.
pub fn resolve_config(
    file: Option<&PathBuf>,
    overlay: impl FnOnce(&mut ExperimentConfig),
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match file {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    overlay(&mut cfg);
    Ok(cfg)
}

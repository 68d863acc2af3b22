//! Bound-query latency measurements: scaling in the knot count against the
//! logarithmic segment-search budget, and the head-to-head with ensemble
//! prediction at a matched architecture.

use crate::config::{CliError, ExperimentConfig};
use crate::experiments;
use darek::baselines::{ensemble_train, gp_fit};
use darek::bound::{DarekQuery, LipschitzBudget};
use darek::kan::{select_knots, Dataset, NetworkPlan, TrainConfig};
use darek::poly::KnotSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

/// Knot counts swept by the scaling benchmark.
pub const BENCH_SIZES: [usize; 4] = [16, 64, 256, 1024];
/// Queries per latency median.
pub const BENCH_QUERIES: usize = 1000;

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub m: usize,
    pub darek_median_ns: u64,
    pub gp_fit_ns: u64,
    pub max_comparisons: u32,
    pub comparison_budget: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchSummary {
    pub experiment: String,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
    /// Matched-architecture head-to-head at 20 training points.
    pub darek_m20_median_ns: u64,
    pub ensemble_q10_m20_median_ns: u64,
    /// Scaling ratio t(m=1024) / t(m=16).
    pub scaling_ratio: f64,
    pub csv: String,
}

fn median(mut samples: Vec<u64>) -> u64 {
    samples.sort_unstable();
    samples[samples.len() / 2]
}

/// One-layer query object over `m` uniformly spaced knots, bounds anchored at
/// all `m` samples.
fn scaling_query(m: usize, order: usize, seed: u64) -> Result<DarekQuery, CliError> {
    let xs: Vec<f64> = (0..m)
        .map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|x| (std::f64::consts::PI * x).sin()).collect();
    let plan = NetworkPlan {
        arch: vec![1, 1],
        order,
        input_knots: vec![KnotSet::new(xs.clone())?],
        hidden_knot_count: m,
    };
    let tc = TrainConfig {
        epochs: 0, // latency does not depend on the fitted values
        learning_rate: 1.0,
        seed,
        init_scale: 0.1,
    };
    let data = Dataset::from_scalar(&xs, &ys)?;
    let net = plan.build(data.inputs(), &tc)?;
    let budget = LipschitzBudget::new(1.0, 1.0, order, 1);
    DarekQuery::build(&net, &data, &budget).map_err(CliError::from)
}

/// Runs the latency sweep and the matched-architecture comparison; writes
/// `bench.csv` (values that are machine-dependent stay out of the other
/// experiments' CSVs) plus `bench_summary.json`.
pub fn run_bench(cfg: &ExperimentConfig) -> Result<BenchSummary, CliError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xbe0c);
    let mut rows = Vec::with_capacity(BENCH_SIZES.len());
    for &m in &BENCH_SIZES {
        let query = scaling_query(m, cfg.order, cfg.seed)?;
        let points: Vec<f64> = (0..BENCH_QUERIES).map(|_| rng.gen_range(-1.3..1.3)).collect();
        // warm-up pass keeps cold caches out of the medians
        for &x in points.iter().take(50) {
            std::hint::black_box(query.bound(&[x]).map_err(CliError::from)?);
        }
        let samples: Vec<u64> = points
            .iter()
            .map(|&x| {
                let start = Instant::now();
                let out = query.bound(&[x]);
                let dt = start.elapsed().as_nanos() as u64;
                std::hint::black_box(out).map(|_| dt)
            })
            .collect::<Result<_, _>>()
            .map_err(CliError::from)?;
        let darek_median_ns = median(samples);

        let mut max_comparisons = 0u32;
        let mut comparison_budget = 0u32;
        for &x in points.iter().take(100) {
            let (_, stats) = query.bound_with_stats(&[x]).map_err(CliError::from)?;
            if !stats.all_within_budget() {
                return Err(CliError::Numerical(format!(
                    "segment search exceeded its comparison budget at m = {m}"
                )));
            }
            for (c, b) in stats.per_spline {
                max_comparisons = max_comparisons.max(c);
                comparison_budget = comparison_budget.max(b);
            }
        }

        let xs: Vec<f64> = (0..m)
            .map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64)
            .collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.cos()).collect();
        let start = Instant::now();
        std::hint::black_box(gp_fit(&xs, &ys, 1.0, 1.0, None).map_err(CliError::from)?);
        let gp_fit_ns = start.elapsed().as_nanos() as u64;

        rows.push(BenchRow {
            m,
            darek_median_ns,
            gp_fit_ns,
            max_comparisons,
            comparison_budget,
        });
    }

    // matched architecture head-to-head at 20 points
    let (xs, ys) = experiments::cos_samples(20);
    let knot_xs = select_knots(&xs, 9, cfg.seed);
    let knot_ys: Vec<f64> = knot_xs.iter().map(|x| x.cos()).collect();
    let plan = NetworkPlan {
        arch: vec![1, 2, 1],
        order: cfg.order,
        input_knots: vec![KnotSet::new(knot_xs.clone())?],
        hidden_knot_count: 9,
    };
    let tc = TrainConfig {
        epochs: 0,
        learning_rate: 1.0,
        seed: cfg.seed,
        init_scale: 0.1,
    };
    let data = Dataset::from_scalar(&xs, &ys)?;
    let net = plan.build(data.inputs(), &tc)?;
    let bound_data = Dataset::from_scalar(&knot_xs, &knot_ys)?;
    let budget = LipschitzBudget::new(1.0, 1.0, cfg.order, 2);
    let query = DarekQuery::build(&net, &bound_data, &budget)?;
    let ensemble = ensemble_train(&plan, &data, 10, cfg.seed, &tc)?;
    let probe_points: Vec<f64> = (0..BENCH_QUERIES)
        .map(|_| rng.gen_range(-7.0..7.0))
        .collect();
    let (darek_m20, ensemble_m20) =
        experiments::time_query_vs_ensemble(&query, &ensemble, &probe_points)?;

    let scaling_ratio = rows[rows.len() - 1].darek_median_ns as f64 / rows[0].darek_median_ns as f64;
    let mut csv = String::from("m,darek_median_ns,gp_fit_ns,max_comparisons,comparison_budget\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.m, row.darek_median_ns, row.gp_fit_ns, row.max_comparisons, row.comparison_budget
        ));
    }
    let csv_path = cfg.out.join("bench.csv");
    write_out(&csv_path, &csv)?;
    let summary = BenchSummary {
        experiment: "bench".to_string(),
        seed: cfg.seed,
        rows,
        darek_m20_median_ns: darek_m20,
        ensemble_q10_m20_median_ns: ensemble_m20,
        scaling_ratio,
        csv: csv_path.display().to_string(),
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    write_out(&cfg.out.join("bench_summary.json"), &json)?;
    Ok(summary)
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

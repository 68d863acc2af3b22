//! `darek` CLI: reproducible experiments for spline-network error bounds.
//! Exit codes: 0 success, 2 validation error, 3 numerical failure.

use clap::{Args, Parser, Subcommand};
use darek_cli::config::{CliError, ExperimentConfig, SynthShape};
use darek_cli::{bench, experiments};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "darek", version, about = "Spline-network error-bound experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// RNG seed for knot selection and initialization
    #[arg(long)]
    seed: Option<u64>,
    /// Spline order (polynomial degree)
    #[arg(long)]
    order: Option<usize>,
    /// First-order Lipschitz constant of the target
    #[arg(long)]
    l1: Option<f64>,
    /// Order-(k+1) Lipschitz constant of the target
    #[arg(long)]
    lk1: Option<f64>,
    /// Number of training samples
    #[arg(long)]
    samples: Option<usize>,
    /// Number of knots (bound anchors for cos runs, spline knots for scan)
    #[arg(long)]
    knots: Option<usize>,
    /// Training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags override its values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Additionally write SVG line plots
    #[arg(long)]
    plot: bool,
}

#[derive(Args, Clone)]
struct ScanOpts {
    /// Scan CSV with header "theta,range"
    #[arg(long, value_name = "FILE", conflicts_with = "synth")]
    scan: Option<PathBuf>,
    /// Synthetic obstacle shape
    #[arg(long, value_name = "circle|box")]
    synth: Option<SynthShape>,
    /// Obstacle radius (circle) or half-side (box), meters
    #[arg(long)]
    radius: Option<f64>,
    /// Obstacle center distance ahead of the sensor, meters
    #[arg(long)]
    dist: Option<f64>,
    /// Number of synthetic rays
    #[arg(long)]
    rays: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// One-layer cosine fit with error bounds
    Cos1(CommonOpts),
    /// Two-layer cosine fit with error bounds
    Cos2(CommonOpts),
    /// Two-layer bounds against ensemble and GP baselines
    Compare(CommonOpts),
    /// Signed-distance estimation from a laser scan
    Scan {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        scan: ScanOpts,
    },
    /// Query-latency measurements
    Bench(CommonOpts),
}

fn apply_common(cfg: &mut ExperimentConfig, opts: &CommonOpts) {
    if let Some(v) = opts.seed {
        cfg.seed = v;
    }
    if let Some(v) = opts.order {
        cfg.order = v;
    }
    if let Some(v) = opts.l1 {
        cfg.l1 = v;
    }
    if let Some(v) = opts.lk1 {
        cfg.lk1 = v;
    }
    if let Some(v) = opts.samples {
        cfg.samples = v;
    }
    if let Some(v) = opts.knots {
        cfg.knots = Some(v);
    }
    if let Some(v) = opts.epochs {
        cfg.epochs = Some(v);
    }
    if let Some(v) = opts.lr {
        cfg.lr = Some(v);
    }
    if let Some(v) = &opts.out {
        cfg.out = v.clone();
    }
    if opts.plot {
        cfg.plot = true;
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cos1(opts) => {
            let cfg = experiments::resolve_config(opts.config.as_ref(), |c| {
                apply_common(c, &opts)
            })?;
            let summary = experiments::run_cos1(&cfg)?;
            println!(
                "cos1: enclosure {:.4}, rmse {:.4} -> {}",
                summary.enclosure_rate, summary.final_rmse, summary.csv
            );
        }
        Command::Cos2(opts) => {
            let cfg = experiments::resolve_config(opts.config.as_ref(), |c| {
                apply_common(c, &opts)
            })?;
            let summary = experiments::run_cos2(&cfg)?;
            println!(
                "cos2: enclosure {:.4}, rmse {:.4} -> {}",
                summary.enclosure_rate, summary.final_rmse, summary.csv
            );
        }
        Command::Compare(opts) => {
            let cfg = experiments::resolve_config(opts.config.as_ref(), |c| {
                apply_common(c, &opts)
            })?;
            let summary = experiments::run_compare(&cfg)?;
            println!(
                "compare: enclosure darek {:.4} / ensemble {:.4} / gp {:.4}; \
                 query medians {} ns vs {} ns -> {}",
                summary.darek_enclosure_rate,
                summary.ensemble_enclosure_rate,
                summary.gp_enclosure_rate,
                summary.darek_query_median_ns,
                summary.ensemble_query_median_ns,
                summary.csv
            );
        }
        Command::Scan { common, scan } => {
            let cfg = experiments::resolve_config(common.config.as_ref(), |c| {
                apply_common(c, &common);
                if let Some(v) = &scan.scan {
                    c.scan = Some(v.clone());
                }
                if let Some(v) = scan.synth {
                    c.synth = Some(v);
                }
                if let Some(v) = scan.radius {
                    c.radius = v;
                }
                if let Some(v) = scan.dist {
                    c.dist = v;
                }
                if let Some(v) = scan.rays {
                    c.rays = v;
                }
            })?;
            let summary = experiments::run_scan(&cfg)?;
            match summary.boundary_enclosure_rate {
                Some(rate) => println!(
                    "scan: boundary enclosure {:.4} over {} angles, rmse {:.4} -> {}",
                    rate, summary.test_angles, summary.final_rmse, summary.boundary_csv
                ),
                None => println!(
                    "scan: no ground truth (file scan), rmse {:.4} -> {}",
                    summary.final_rmse, summary.boundary_csv
                ),
            }
            if !summary.degenerate_fallbacks.is_empty() {
                eprintln!(
                    "warning: degenerate knot images, conservative fallback used for: {}",
                    summary.degenerate_fallbacks.join("; ")
                );
            }
        }
        Command::Bench(opts) => {
            let cfg = experiments::resolve_config(opts.config.as_ref(), |c| {
                apply_common(c, &opts)
            })?;
            let summary = bench::run_bench(&cfg)?;
            println!(
                "bench: scaling t(1024)/t(16) = {:.2}; m=20 darek {} ns vs ensemble {} ns -> {}",
                summary.scaling_ratio,
                summary.darek_m20_median_ns,
                summary.ensemble_q10_m20_median_ns,
                summary.csv
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

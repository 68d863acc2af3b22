//! Experiment configuration and the CLI error/exit-code policy.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

/// Harness-level error, split by exit code: validation problems exit with 2,
/// numerical failures with 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<darek::Error> for CliError {
    fn from(err: darek::Error) -> Self {
        match err {
            darek::Error::Divergence { .. }
            | darek::Error::FactorizationFailed { .. }
            | darek::Error::DegenerateImages { .. }
            | darek::Error::NonFinite { .. } => CliError::Numerical(err.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Validation(err.to_string())
    }
}

/// Synthetic obstacle shapes for the scan experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthShape {
    Circle,
    Box,
}

impl std::str::FromStr for SynthShape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "circle" => Ok(SynthShape::Circle),
            "box" => Ok(SynthShape::Box),
            other => Err(format!("unknown shape {other:?}, expected circle or box")),
        }
    }
}

/// Shared experiment settings. Optional fields fall back to per-experiment
/// defaults (cubic splines and unit Lipschitz constants throughout; the cos
/// runs use 20 samples, 9 knots, 200 epochs at learning rate 1; the scan run
/// uses 20 knots and learning rate 0.05, stable for its wider architecture).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub order: usize,
    pub l1: f64,
    pub lk1: f64,
    pub samples: usize,
    pub knots: Option<usize>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub out: PathBuf,
    pub plot: bool,
    pub scan: Option<PathBuf>,
    pub synth: Option<SynthShape>,
    pub radius: f64,
    pub dist: f64,
    pub rays: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            order: 3,
            l1: 1.0,
            lk1: 1.0,
            samples: 20,
            knots: None,
            epochs: None,
            lr: None,
            out: PathBuf::from("out"),
            plot: false,
            scan: None,
            synth: None,
            radius: 1.0,
            dist: 3.0,
            rays: 60,
        }
    }
}

impl ExperimentConfig {
    pub fn knots_for_cos(&self) -> usize {
        self.knots.unwrap_or(9)
    }

    pub fn knots_for_scan(&self) -> usize {
        self.knots.unwrap_or(20)
    }

    pub fn epochs(&self) -> usize {
        self.epochs.unwrap_or(200)
    }

    pub fn lr(&self) -> f64 {
        self.lr.unwrap_or(1.0)
    }

    /// The `[2, 20, 1]` scan network sums twenty spline paths, so its stable
    /// step size is smaller than the cosine runs'.
    pub fn lr_for_scan(&self) -> f64 {
        self.lr.unwrap_or(0.05)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.samples < 2 {
            return Err(CliError::Validation(format!(
                "need at least 2 samples, got {}",
                self.samples
            )));
        }
        if let Some(k) = self.knots {
            if k < 2 {
                return Err(CliError::Validation(format!("need at least 2 knots, got {k}")));
            }
            if k > self.samples {
                return Err(CliError::Validation(format!(
                    "cannot select {k} knots from {} samples",
                    self.samples
                )));
            }
        }
        if self.lr() <= 0.0 {
            return Err(CliError::Validation(format!(
                "learning rate must be positive, got {}",
                self.lr()
            )));
        }
        if self.l1 < 0.0 || self.lk1 < 0.0 {
            return Err(CliError::Validation(
                "Lipschitz constants must be nonnegative".into(),
            ));
        }
        if self.radius <= 0.0 || self.dist <= 0.0 {
            return Err(CliError::Validation(
                "synthetic obstacle radius and distance must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Loads a JSON config file and overlays it onto the defaults.
    pub fn from_json_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }
}

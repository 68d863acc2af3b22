//! Comparison uncertainty estimators: a deep ensemble of independently
//! seeded networks and exact Gaussian-process regression with an RBF kernel.

use crate::error::Error;
use crate::kan::{Dataset, KanNetwork, NetworkPlan, TrainConfig};
use crate::linalg;

/// Ensemble of independently initialized and trained networks.
#[derive(Debug, Clone)]
pub struct EnsembleModel {
    members: Vec<KanNetwork>,
}

/// Trains `q` members of `plan` with seeds `base_seed .. base_seed + q`.
/// A diverging member is dropped as long as at least two remain.
pub fn ensemble_train(
    plan: &NetworkPlan,
    data: &Dataset,
    q: usize,
    base_seed: u64,
    cfg: &TrainConfig,
) -> Result<EnsembleModel, Error> {
    if q < 2 {
        return Err(Error::TooFewMembers { actual: q });
    }
    let mut members = Vec::with_capacity(q);
    let mut last_divergence = None;
    for i in 0..q {
        let member_cfg = TrainConfig {
            seed: base_seed + i as u64,
            ..cfg.clone()
        };
        let mut net = plan.build(data.inputs(), &member_cfg)?;
        match net.train(data, &member_cfg) {
            Ok(_) => members.push(net),
            Err(err @ Error::Divergence { .. }) => last_divergence = Some(err),
            Err(other) => return Err(other),
        }
    }
    if members.len() < 2 {
        return Err(last_divergence.unwrap_or(Error::TooFewMembers {
            actual: members.len(),
        }));
    }
    Ok(EnsembleModel { members })
}

impl EnsembleModel {
    pub fn members(&self) -> &[KanNetwork] {
        &self.members
    }

    /// From pre-trained members; still requires at least two.
    pub fn from_members(members: Vec<KanNetwork>) -> Result<Self, Error> {
        if members.len() < 2 {
            return Err(Error::TooFewMembers {
                actual: members.len(),
            });
        }
        Ok(Self { members })
    }

    /// Sample mean and population standard deviation of the members' scalar
    /// outputs at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64), Error> {
        let q = self.members.len() as f64;
        let mut outputs = Vec::with_capacity(self.members.len());
        for member in &self.members {
            outputs.push(member.predict_scalar(x)?);
        }
        let mean = outputs.iter().sum::<f64>() / q;
        let variance = outputs.iter().map(|o| (o - mean) * (o - mean)).sum::<f64>() / q;
        Ok((mean, variance.sqrt()))
    }
}

/// Exact GP regression: RBF kernel, Cholesky-factorized kernel matrix.
#[derive(Debug, Clone)]
pub struct GpModel {
    train_x: Vec<f64>,
    lengthscale: f64,
    variance: f64,
    jitter: f64,
    /// Lower Cholesky factor of `K + jitter I`.
    chol: Vec<f64>,
    /// `(K + jitter I)^{-1} y`.
    alpha: Vec<f64>,
}

fn rbf(a: f64, b: f64, lengthscale: f64, variance: f64) -> f64 {
    let d = a - b;
    variance * (-d * d / (2.0 * lengthscale * lengthscale)).exp()
}

/// Fits the GP. `jitter` defaults to `1e-8 * variance`; on factorization
/// failure it is raised once by a factor of ten before giving up.
pub fn gp_fit(
    xs: &[f64],
    ys: &[f64],
    lengthscale: f64,
    variance: f64,
    jitter: Option<f64>,
) -> Result<GpModel, Error> {
    if xs.len() != ys.len() {
        return Err(Error::ShapeMismatch {
            context: "GP training data",
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    let n = xs.len();
    let base_jitter = jitter.unwrap_or(1e-8 * variance);
    if n == 0 {
        return Ok(GpModel {
            train_x: Vec::new(),
            lengthscale,
            variance,
            jitter: base_jitter,
            chol: Vec::new(),
            alpha: Vec::new(),
        });
    }
    {
        let mut sorted = xs.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let span = sorted[n - 1] - sorted[0];
        let tolerance = 1e-12 * span.max(1.0);
        for w in sorted.windows(2) {
            if w[1] - w[0] < tolerance {
                return Err(Error::DuplicateKnots {
                    value: w[0],
                    gap: w[1] - w[0],
                    tolerance,
                });
            }
        }
    }
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            kernel[i * n + j] = rbf(xs[i], xs[j], lengthscale, variance);
        }
    }
    let mut current_jitter = base_jitter;
    for attempt in 0..2 {
        let mut k = kernel.clone();
        for i in 0..n {
            k[i * n + i] += current_jitter;
        }
        if let Some(chol) = linalg::cholesky_factor(&k, n) {
            let alpha = linalg::cholesky_solve(&chol, n, ys);
            return Ok(GpModel {
                train_x: xs.to_vec(),
                lengthscale,
                variance,
                jitter: current_jitter,
                chol,
                alpha,
            });
        }
        if attempt == 0 {
            current_jitter *= 10.0;
        }
    }
    Err(Error::FactorizationFailed {
        jitter: current_jitter,
    })
}

impl GpModel {
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.train_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_x.is_empty()
    }

    /// Posterior mean and variance at `x`. The variance is clamped to
    /// `[0, prior variance + jitter]`.
    pub fn predict(&self, x: f64) -> (f64, f64) {
        let n = self.train_x.len();
        if n == 0 {
            return (0.0, self.variance);
        }
        let k_star: Vec<f64> = self
            .train_x
            .iter()
            .map(|&xi| rbf(x, xi, self.lengthscale, self.variance))
            .collect();
        let mean: f64 = k_star.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        let v = linalg::solve_lower(&self.chol, n, &k_star);
        let reduction: f64 = v.iter().map(|z| z * z).sum();
        let variance = (self.variance - reduction).clamp(0.0, self.variance + self.jitter);
        (mean, variance)
    }
}

//! B-spline Kolmogorov-Arnold networks with distance-aware worst-case error
//! bounds.
//!
//! The crate is organized around the pipeline used by the experiment harness:
//!
//! - [`poly`] — divided differences, Newton polynomials, knot-segment search.
//! - [`spline`] — B-spline bases over clamped knot vectors and 1-D splines.
//! - [`kan`] — networks whose edges are 1-D splines, with full-batch
//!   gradient training.
//! - [`bound`] — the error-bound engine: per-spline interpolation bounds,
//!   knot-error correction, and their composition across layers.
//! - [`baselines`] — deep-ensemble and Gaussian-process comparison models.
//! - [`oracle`] — independent brute-force reference implementations used by
//!   the test suites.

pub mod baselines;
pub mod bound;
pub mod error;
pub mod kan;
mod linalg;
pub mod oracle;
pub mod poly;
pub mod spline;

pub use error::Error;

/// `n!` as a float; exact for every `n` that fits a spline order.
pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

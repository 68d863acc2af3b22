//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Two abscissae are equal, or closer than the dedup tolerance.
    #[error("abscissae must be distinct: values near {value} collide (gap {gap:e} below tolerance {tolerance:e})")]
    DuplicateKnots { value: f64, gap: f64, tolerance: f64 },

    /// A knot sequence is not sorted in increasing order.
    #[error("knots must be strictly increasing: knots[{index}] = {value} does not increase")]
    UnsortedKnots { index: usize, value: f64 },

    /// Fewer knots than the operation requires.
    #[error("need at least {required} knots, got {actual}")]
    InsufficientKnots { required: usize, actual: usize },

    /// An operation received no data.
    #[error("empty input: at least one sample point is required")]
    EmptyInput,

    /// A vector length does not match what the receiver expects.
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A value that must be finite is NaN or infinite.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    /// A spline's knot images collapsed below the stencil size.
    #[error("degenerate knot images for {spline}: {distinct} distinct abscissae, need {required}")]
    DegenerateImages {
        spline: String,
        distinct: usize,
        required: usize,
    },

    /// An ensemble cannot be formed or kept with fewer than two members.
    #[error("ensemble needs at least 2 members, got {actual}")]
    TooFewMembers { actual: usize },

    /// Cholesky factorization failed even after the jitter retry.
    #[error("kernel matrix factorization failed at jitter {jitter:e}")]
    FactorizationFailed { jitter: f64 },

    /// Model (de)serialization failed.
    #[error("model serialization: {0}")]
    Serialization(#[from] serde_json::Error),

    /// Reading or writing a data file failed.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// A data file row could not be parsed.
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

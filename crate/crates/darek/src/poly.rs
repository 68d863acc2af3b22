//! Divided differences, Newton-form interpolation, and knot-segment search.
//!
//! Indexing convention: knots are 1-based in the mathematical statements the
//! crate documents and 0-based everywhere in code. The translation happens
//! here and only here: `locate_segment` returns the 0-based segment index
//! `j` with `knots[j] <= x < knots[j + 1]`, which corresponds to segment
//! `j + 1` in 1-based notation.

use crate::error::Error;
use serde::{Deserialize, Serialize};

/// Two abscissae closer than this fraction of the data range are duplicates.
pub const KNOT_DEDUP_REL_TOL: f64 = 1e-12;

fn check_distinct_sorted(sorted: &[f64]) -> Result<(), Error> {
    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "knots" });
    }
    let span = sorted[sorted.len() - 1] - sorted[0];
    let tolerance = KNOT_DEDUP_REL_TOL * span.max(1.0);
    for w in sorted.windows(2) {
        let gap = w[1] - w[0];
        if gap < tolerance {
            return Err(Error::DuplicateKnots {
                value: w[0],
                gap,
                tolerance,
            });
        }
    }
    Ok(())
}

/// Strictly increasing sequence of at least two distinct knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct KnotSet {
    knots: Vec<f64>,
}

impl KnotSet {
    pub fn new(knots: Vec<f64>) -> Result<Self, Error> {
        if knots.len() < 2 {
            return Err(Error::InsufficientKnots {
                required: 2,
                actual: knots.len(),
            });
        }
        for (i, w) in knots.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::UnsortedKnots {
                    index: i + 1,
                    value: w[1],
                });
            }
        }
        check_distinct_sorted(&knots)?;
        Ok(Self { knots })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor guarantees at least two knots
    }

    pub fn min(&self) -> f64 {
        self.knots[0]
    }

    pub fn max(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }
}

impl TryFrom<Vec<f64>> for KnotSet {
    type Error = Error;
    fn try_from(knots: Vec<f64>) -> Result<Self, Error> {
        KnotSet::new(knots)
    }
}

impl From<KnotSet> for Vec<f64> {
    fn from(ks: KnotSet) -> Vec<f64> {
        ks.knots
    }
}

/// Knot/value pairs with distinct abscissae. Order is preserved as given;
/// divided differences are permutation-symmetric so sortedness is not
/// required here.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoints {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl SamplePoints {
    pub fn new(points: &[(f64, f64)]) -> Result<Self, Error> {
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        Self::from_slices(&xs, &ys)
    }

    pub fn from_slices(xs: &[f64], ys: &[f64]) -> Result<Self, Error> {
        if xs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if xs.len() != ys.len() {
            return Err(Error::ShapeMismatch {
                context: "sample points",
                expected: xs.len(),
                actual: ys.len(),
            });
        }
        if ys.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "sample values",
            });
        }
        let mut sorted = xs.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.len() > 1 {
            check_distinct_sorted(&sorted)?;
        } else if !sorted[0].is_finite() {
            return Err(Error::NonFinite { context: "knots" });
        }
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty input
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
}

/// Interpolating polynomial in Newton form: divided-difference coefficients
/// over a stencil of base points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonPoly {
    base_points: Vec<f64>,
    coeffs: Vec<f64>,
}

impl NewtonPoly {
    pub fn base_points(&self) -> &[f64] {
        &self.base_points
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Nested (Horner-like) evaluation of the Newton form.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.coeffs.len();
        let mut value = self.coeffs[n - 1];
        for i in (0..n - 1).rev() {
            value = self.coeffs[i] + (x - self.base_points[i]) * value;
        }
        value
    }
}

/// Top row of the divided-difference triangle for `points`:
/// `([x_0]f, [x_0,x_1]f, ..., [x_0..x_{m-1}]f)`.
pub fn divided_differences(points: &SamplePoints) -> Vec<f64> {
    let xs = points.xs();
    let n = xs.len();
    let mut c = points.ys().to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            c[i] = (c[i] - c[i - 1]) / (xs[i] - xs[i - j]);
        }
    }
    c
}

/// Newton interpolant through `points`; the unique polynomial of degree
/// `points.len() - 1` matching every sample.
pub fn newton_fit(points: &SamplePoints) -> NewtonPoly {
    NewtonPoly {
        base_points: points.xs().to_vec(),
        coeffs: divided_differences(points),
    }
}

/// Binary-search segment location with an explicit comparison count.
///
/// Returns the 0-based index `j` in `0..=m-k-1` such that
/// `knots[j] <= x < knots[j + 1]`, clamped to the nearest valid stencil for
/// out-of-range `x` (so extrapolation queries still get a segment). The
/// second element counts comparisons of `x` against knot values, at most
/// `ceil(log2(m)) + 1`.
pub fn locate_segment_counted(knots: &KnotSet, x: f64, order: usize) -> (usize, u32) {
    let ks = knots.as_slice();
    let m = ks.len();
    assert!(
        m >= order + 1,
        "segment search needs at least order + 1 = {} knots, got {m}",
        order + 1
    );
    // partition point: number of knots <= x
    let mut lo = 0usize;
    let mut hi = m;
    let mut comparisons = 0u32;
    while lo < hi {
        let mid = (lo + hi) / 2;
        comparisons += 1;
        if ks[mid] <= x {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let j = lo.saturating_sub(1).min(m - order - 1);
    (j, comparisons)
}

/// Segment index for `x` among `knots` with an order-`k` stencil; see
/// [`locate_segment_counted`] for the exact contract.
pub fn locate_segment(knots: &KnotSet, x: f64, order: usize) -> usize {
    locate_segment_counted(knots, x, order).0
}

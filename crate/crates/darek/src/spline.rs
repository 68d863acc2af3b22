//! B-spline basis evaluation and differentiation over clamped knot vectors,
//! plus the 1-D spline used as the network activation primitive.
//!
//! "Order k" here means polynomial degree k (cubic means k = 3). The
//! classical "order = degree + 1" convention is not used anywhere in this
//! crate.

use crate::error::Error;
use crate::linalg;
use crate::poly::{self, KnotSet};
use serde::{Deserialize, Serialize};

/// Clamped (open-uniform) knot vector: the interior knots with the boundary
/// knot repeated `order` extra times on each end. Clamping keeps the basis a
/// partition of unity over the whole interior range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "KnotVectorRepr", into = "KnotVectorRepr")]
pub struct ExtendedKnotVector {
    interior: KnotSet,
    order: usize,
    padded: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KnotVectorRepr {
    interior: KnotSet,
    order: usize,
}

impl From<KnotVectorRepr> for ExtendedKnotVector {
    fn from(repr: KnotVectorRepr) -> Self {
        ExtendedKnotVector::clamped(repr.interior, repr.order)
    }
}

impl From<ExtendedKnotVector> for KnotVectorRepr {
    fn from(kv: ExtendedKnotVector) -> Self {
        KnotVectorRepr {
            interior: kv.interior,
            order: kv.order,
        }
    }
}

impl ExtendedKnotVector {
    pub fn clamped(interior: KnotSet, order: usize) -> Self {
        let m = interior.len();
        let mut padded = Vec::with_capacity(m + 2 * order);
        padded.extend(std::iter::repeat(interior.min()).take(order));
        padded.extend_from_slice(interior.as_slice());
        padded.extend(std::iter::repeat(interior.max()).take(order));
        Self {
            interior,
            order,
            padded,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn interior(&self) -> &KnotSet {
        &self.interior
    }

    pub fn padded(&self) -> &[f64] {
        &self.padded
    }

    /// Basis dimension: number of padded knots minus order minus 1.
    pub fn basis_len(&self) -> usize {
        self.padded.len() - self.order - 1
    }

    /// Index `s` of the nonempty padded span with `padded[s] <= x <
    /// padded[s+1]`, clamped so out-of-range `x` evaluates the boundary
    /// piece's polynomial extension.
    fn span_for(&self, x: f64) -> usize {
        poly::locate_segment(&self.interior, x, 1) + self.order
    }

    /// The `degree + 1` basis values of the given degree that are nonzero on
    /// span `s`, lowest index first (indices `s - degree ..= s`).
    fn basis_window(&self, span: usize, degree: usize, x: f64) -> Vec<f64> {
        let t = &self.padded;
        let mut values = vec![0.0; degree + 1];
        values[0] = 1.0;
        let mut left = vec![0.0; degree + 1];
        let mut right = vec![0.0; degree + 1];
        for j in 1..=degree {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = values[r] / denom;
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        values
    }

    /// Active basis values at `x`: the first active (dense) index and the
    /// `order + 1` nonzero values.
    pub fn active_basis(&self, x: f64) -> (usize, Vec<f64>) {
        let span = self.span_for(x);
        (span - self.order, self.basis_window(span, self.order, x))
    }

    /// All `basis_len()` basis values at `x`. At most `order + 1` entries are
    /// nonzero; they sum to one. Outside the interior range this is the
    /// polynomial extension of the boundary piece.
    pub fn basis_eval(&self, x: f64) -> Vec<f64> {
        let (first, window) = self.active_basis(x);
        let mut dense = vec![0.0; self.basis_len()];
        dense[first..first + window.len()].copy_from_slice(&window);
        dense
    }

    /// Active basis derivatives at `x` via the order-(k-1) difference
    /// formula. Requires `order >= 1`.
    pub fn active_basis_derivative(&self, x: f64) -> (usize, Vec<f64>) {
        let p = self.order;
        assert!(p >= 1, "basis derivative needs order >= 1");
        let span = self.span_for(x);
        let t = &self.padded;
        let lower = self.basis_window(span, p - 1, x); // indices span-p+1 ..= span
        let first = span - p;
        let mut derivs = vec![0.0; p + 1];
        for (offset, d) in derivs.iter_mut().enumerate() {
            let i = first + offset;
            let mut value = 0.0;
            // B_{i,p-1} term: active iff i >= span - p + 1
            if offset >= 1 {
                let denom = t[i + p] - t[i];
                if denom > 0.0 {
                    value += lower[offset - 1] / denom;
                }
            }
            // B_{i+1,p-1} term: active iff i + 1 <= span
            if offset < p {
                let denom = t[i + p + 1] - t[i + 1];
                if denom > 0.0 {
                    value -= lower[offset] / denom;
                }
            }
            *d = p as f64 * value;
        }
        (first, derivs)
    }

    /// Dense vector of basis derivatives at `x`.
    pub fn basis_derivative(&self, x: f64) -> Vec<f64> {
        let (first, window) = self.active_basis_derivative(x);
        let mut dense = vec![0.0; self.basis_len()];
        dense[first..first + window.len()].copy_from_slice(&window);
        dense
    }
}

/// Linear combination of B-spline basis functions over a clamped knot vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spline1D {
    kv: ExtendedKnotVector,
    coeffs: Vec<f64>,
}

impl Spline1D {
    pub fn new(kv: ExtendedKnotVector, coeffs: Vec<f64>) -> Result<Self, Error> {
        if coeffs.len() != kv.basis_len() {
            return Err(Error::ShapeMismatch {
                context: "spline coefficients",
                expected: kv.basis_len(),
                actual: coeffs.len(),
            });
        }
        Ok(Self { kv, coeffs })
    }

    pub fn knot_vector(&self) -> &ExtendedKnotVector {
        &self.kv
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Spline value at `x`: dot product of the coefficients with the
    /// `order + 1` active basis functions.
    pub fn eval(&self, x: f64) -> f64 {
        let (first, window) = self.kv.active_basis(x);
        window
            .iter()
            .enumerate()
            .map(|(i, b)| b * self.coeffs[first + i])
            .sum()
    }

    /// Derivative of the spline at `x`.
    pub fn derivative(&self, x: f64) -> f64 {
        let (first, window) = self.kv.active_basis_derivative(x);
        window
            .iter()
            .enumerate()
            .map(|(i, d)| d * self.coeffs[first + i])
            .sum()
    }

    /// Value and derivative with a single span search.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let (first, values) = self.kv.active_basis(x);
        let (dfirst, derivs) = self.kv.active_basis_derivative(x);
        debug_assert_eq!(first, dfirst);
        let v = values
            .iter()
            .enumerate()
            .map(|(i, b)| b * self.coeffs[first + i])
            .sum();
        let d = derivs
            .iter()
            .enumerate()
            .map(|(i, g)| g * self.coeffs[first + i])
            .sum();
        (v, d)
    }

    /// Least-squares fit of spline coefficients to samples, via the normal
    /// equations. Fails when some basis function has no sample support.
    pub fn fit_least_squares(
        kv: ExtendedKnotVector,
        xs: &[f64],
        ys: &[f64],
    ) -> Result<Self, Error> {
        if xs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if xs.len() != ys.len() {
            return Err(Error::ShapeMismatch {
                context: "least-squares samples",
                expected: xs.len(),
                actual: ys.len(),
            });
        }
        let n = kv.basis_len();
        let mut gram = vec![0.0; n * n];
        let mut rhs = vec![0.0; n];
        for (&x, &y) in xs.iter().zip(ys) {
            let (first, window) = kv.active_basis(x);
            for (a, &wa) in window.iter().enumerate() {
                rhs[first + a] += y * wa;
                for (b, &wb) in window.iter().enumerate() {
                    gram[(first + a) * n + (first + b)] += wa * wb;
                }
            }
        }
        let l = linalg::cholesky_factor(&gram, n)
            .ok_or(Error::FactorizationFailed { jitter: 0.0 })?;
        let coeffs = linalg::cholesky_solve(&l, n, &rhs);
        Self::new(kv, coeffs)
    }

    /// The spline reproducing `x` exactly: coefficients at the Greville
    /// abscissae. Requires `order >= 1`.
    pub fn identity(kv: ExtendedKnotVector) -> Self {
        let k = kv.order();
        assert!(k >= 1, "order-0 splines cannot represent the identity");
        let t = kv.padded();
        let coeffs: Vec<f64> = (0..kv.basis_len())
            .map(|i| t[i + 1..=i + k].iter().sum::<f64>() / k as f64)
            .collect();
        Self { kv, coeffs }
    }

    /// Constant spline: every coefficient equal to `value`.
    pub fn constant(kv: ExtendedKnotVector, value: f64) -> Self {
        let coeffs = vec![value; kv.basis_len()];
        Self { kv, coeffs }
    }
}

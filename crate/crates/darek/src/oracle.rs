//! Independent brute-force reference implementations backing the test suites.
//!
//! Everything here is written in the most direct form available (Lagrange
//! sums, iterated central differences, monomial evaluation) and shares no
//! code with the interpolation and bound paths it is used to check.

use crate::error::Error;
use crate::factorial;

/// Function with a constant `(k+1)`-th derivative: `L x^{k+1}/(k+1)!` plus an
/// optional polynomial of degree at most `k`. This is the extremal case for
/// an order-`(k+1)` Lipschitz budget: interpolation error meets its bound
/// exactly everywhere.
#[derive(Debug, Clone)]
pub struct WorstCaseFn {
    lipschitz: f64,
    order: usize,
    /// Monomial coefficients of the offset, lowest power first.
    offset: Vec<f64>,
}

impl WorstCaseFn {
    pub fn new(lipschitz: f64, order: usize) -> Self {
        assert!(lipschitz >= 0.0, "Lipschitz constant must be nonnegative");
        Self {
            lipschitz,
            order,
            offset: Vec::new(),
        }
    }

    /// Adds a degree-`<= order` polynomial; the `(k+1)`-th derivative is
    /// unchanged.
    pub fn with_offset(lipschitz: f64, order: usize, offset: Vec<f64>) -> Self {
        assert!(
            offset.len() <= order + 1,
            "offset degree must not exceed the order"
        );
        Self {
            lipschitz,
            order,
            offset,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn eval(&self, x: f64) -> f64 {
        let lead = self.lipschitz * x.powi(self.order as i32 + 1) / factorial(self.order + 1);
        let mut poly = 0.0;
        for &c in self.offset.iter().rev() {
            poly = poly * x + c;
        }
        lead + poly
    }
}

/// Lagrange-form interpolation through `points`, evaluated at `x`.
/// Deliberately the textbook double sum, independent of the Newton machinery.
pub fn lagrange_eval(points: &[(f64, f64)], x: f64) -> Result<f64, Error> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted: Vec<f64> = points.iter().map(|p| p.0).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let span = sorted[sorted.len() - 1] - sorted[0];
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
    let mut total = 0.0;
    for (i, &(xi, yi)) in points.iter().enumerate() {
        let mut weight = 1.0;
        for (j, &(xj, _)) in points.iter().enumerate() {
            if i != j {
                weight *= (x - xj) / (xi - xj);
            }
        }
        total += yi * weight;
    }
    Ok(total)
}

/// `n`-th derivative of `f` at `x` by iterated central differences with
/// step `h`.
pub fn central_derivative<F: Fn(f64) -> f64>(f: &F, x: f64, n: usize, h: f64) -> f64 {
    if n == 0 {
        return f(x);
    }
    (central_derivative(f, x + h, n - 1, h) - central_derivative(f, x - h, n - 1, h)) / (2.0 * h)
}

/// Step size for an `n`-th central-difference derivative over a span.
/// 1e-5 is the sweet spot for first derivatives; higher orders need a larger
/// step to stay above round-off.
fn central_step(span: f64, n: usize) -> f64 {
    let round_off_floor = f64::EPSILON.powf(1.0 / (n as f64 + 2.0));
    span * round_off_floor.max(1e-5)
}

/// Estimates the order-`order` Lipschitz constant of `f` over `grid`: the
/// largest chord slope of the `(order-1)`-th finite-difference derivative
/// over all grid pairs. A lower bound on the true constant.
pub fn finite_diff_lipschitz<F: Fn(f64) -> f64>(f: F, order: usize, grid: &[f64]) -> f64 {
    assert!(order >= 1, "Lipschitz order starts at 1");
    assert!(grid.len() >= 2, "need at least two grid points");
    let span = grid[grid.len() - 1] - grid[0];
    let n = order - 1;
    let h = central_step(span.abs().max(1.0), n);
    let derivs: Vec<f64> = grid.iter().map(|&x| central_derivative(&f, x, n, h)).collect();
    let mut best: f64 = 0.0;
    for i in 0..grid.len() {
        for j in (i + 1)..grid.len() {
            let dx = (grid[j] - grid[i]).abs();
            if dx > 0.0 {
                best = best.max((derivs[j] - derivs[i]).abs() / dx);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn worst_case_order_one_is_half_square() {
        let f = WorstCaseFn::new(1.0, 1);
        for x in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            assert_relative_eq!(f.eval(x), x * x / 2.0, max_relative = 1e-15);
        }
        // second derivative is the Lipschitz constant
        let d2 = central_derivative(&|x| f.eval(x), 0.7, 2, 1e-4);
        assert_abs_diff_eq!(d2, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn zero_lipschitz_reduces_to_offset() {
        let f = WorstCaseFn::with_offset(0.0, 2, vec![3.0, -1.0, 0.5]);
        for x in [-1.0, 0.0, 2.0] {
            assert_relative_eq!(f.eval(x), 3.0 - x + 0.5 * x * x, max_relative = 1e-15);
        }
    }

    #[test]
    fn worst_case_error_against_chord_is_exact_bound() {
        // knots (0,1), f = x^2/2: the line through (0, f(0)), (1, f(1)) misses
        // f at 0.5 by exactly 1/2! * |0.5 * (0.5 - 1)| = 0.125.
        let f = WorstCaseFn::new(1.0, 1);
        let line = lagrange_eval(&[(0.0, f.eval(0.0)), (1.0, f.eval(1.0))], 0.5).unwrap();
        assert_relative_eq!((f.eval(0.5) - line).abs(), 0.125, max_relative = 1e-14);
    }

    #[test]
    fn lagrange_two_points_is_linear() {
        let v = lagrange_eval(&[(0.0, 0.0), (1.0, 1.0)], 0.5).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn lagrange_reproduces_square() {
        for x in [-1.0, 0.3, 2.5, 4.0] {
            let v = lagrange_eval(&[(0.0, 0.0), (1.0, 1.0), (3.0, 9.0)], x).unwrap();
            assert_relative_eq!(v, x * x, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn lagrange_matches_monomials_on_random_cubic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c: [f64; 4] = rng.gen();
        let cubic = |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
        let samples: Vec<(f64, f64)> = [-3.0, -1.0, 2.0, 5.0]
            .iter()
            .map(|&x| (x, cubic(x)))
            .collect();
        for _ in 0..100 {
            let x = rng.gen_range(-10.0..10.0);
            let v = lagrange_eval(&samples, x).unwrap();
            assert_relative_eq!(v, cubic(x), max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn lagrange_rejects_duplicates() {
        let err = lagrange_eval(&[(1.0, 0.0), (1.0, 2.0)], 0.5).unwrap_err();
        assert!(matches!(err, Error::DuplicateKnots { .. }));
    }

    #[test]
    fn lipschitz_of_cos_is_one() {
        let grid: Vec<f64> = (0..=504)
            .map(|i| -2.0 * std::f64::consts::PI + i as f64 * 4.0 * std::f64::consts::PI / 504.0)
            .collect();
        let l = finite_diff_lipschitz(|x| x.cos(), 1, &grid);
        assert!(l <= 1.0 + 1e-9, "chord slope cannot exceed max |sin| = 1, got {l}");
        assert!((l - 1.0).abs() < 0.02, "estimate {l} not within 2% of 1");
    }

    #[test]
    fn lipschitz_of_line_is_slope() {
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 / 10.0).collect();
        let l = finite_diff_lipschitz(|x| -3.5 * x + 1.0, 1, &grid);
        assert_relative_eq!(l, 3.5, max_relative = 1e-12);
    }

    #[test]
    fn lipschitz_of_worst_case_recovers_the_constant() {
        for k in 1..=3usize {
            let f = WorstCaseFn::new(2.0, k);
            let grid: Vec<f64> = (0..=200).map(|i| -4.0 + i as f64 * 8.0 / 200.0).collect();
            let l = finite_diff_lipschitz(|x| f.eval(x), k + 1, &grid);
            assert!(
                (l - 2.0).abs() < 0.04,
                "order {} estimate {} not within 2% of 2",
                k + 1,
                l
            );
        }
    }
}

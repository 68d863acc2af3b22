//! Small dense symmetric positive-definite solves, enough for normal
//! equations and kernel matrices at desk scale. Row-major storage.

/// Cholesky factorization `A = L Lᵀ` of an `n x n` SPD matrix.
/// Returns the lower factor, or `None` when a pivot is not strictly positive.
pub(crate) fn cholesky_factor(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Forward substitution `L z = b` for a lower-triangular `L`.
pub(crate) fn solve_lower(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * z[k];
        }
        z[i] = sum / l[i * n + i];
    }
    z
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor.
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let z = solve_lower(l, n, b);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = z[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn factor_and_solve_roundtrip() {
        // A = Mᵀ M + I for a fixed M, guaranteed SPD.
        let n = 4;
        let m: Vec<f64> = (0..n * n).map(|i| ((i * 7 + 3) % 11) as f64 / 11.0).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    a[i * n + j] += m[k * n + i] * m[k * n + j];
                }
            }
            a[i * n + i] += 1.0;
        }
        let l = cholesky_factor(&a, n).expect("SPD matrix must factor");
        let b = vec![1.0, -2.0, 0.5, 3.0];
        let x = cholesky_solve(&l, n, &b);
        for i in 0..n {
            let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            assert_relative_eq!(ax, b[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = vec![1.0, 2.0, 2.0, 1.0]; // eigenvalues 3, -1
        assert!(cholesky_factor(&a, 2).is_none());
    }
}

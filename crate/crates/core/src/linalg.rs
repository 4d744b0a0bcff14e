//! Minimal dense symmetric linear algebra: Cholesky factorization and
//! triangular solves, shared by the Mahalanobis distance and the ANOVA
//! least-squares fits.

/// Lower-triangular Cholesky factor of a symmetric matrix stored row-major.
/// Returns `None` if the matrix is not positive definite.
pub fn cholesky(n: usize, a: &[f64]) -> Option<Vec<f64>> {
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
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve L x = b with L lower triangular (forward substitution), in place.
pub fn solve_lower(n: usize, l: &[f64], b: &mut [f64]) {
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * b[k];
        }
        b[i] = sum / l[i * n + i];
    }
}

/// Solve Lᵀ x = b with L lower triangular (back substitution), in place.
pub fn solve_lower_transpose(n: usize, l: &[f64], b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * b[k];
        }
        b[i] = sum / l[i * n + i];
    }
}

/// Solve A x = b for symmetric positive-definite A via Cholesky.
pub fn spd_solve(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let l = cholesky(n, a)?;
    let mut x = b.to_vec();
    solve_lower(n, &l, &mut x);
    solve_lower_transpose(n, &l, &mut x);
    Some(x)
}

/// Residual sum of squares of the least-squares fit y ≈ X β, where X is
/// n_rows × n_cols row-major. Solved through the normal equations; `None`
/// when XᵀX is singular (collinear design).
pub fn least_squares_rss(n_rows: usize, n_cols: usize, x: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), n_rows * n_cols);
    debug_assert_eq!(y.len(), n_rows);
    let mut xtx = vec![0.0; n_cols * n_cols];
    let mut xty = vec![0.0; n_cols];
    for r in 0..n_rows {
        let row = &x[r * n_cols..(r + 1) * n_cols];
        for i in 0..n_cols {
            xty[i] += row[i] * y[r];
            for j in 0..=i {
                xtx[i * n_cols + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..n_cols {
        for j in (i + 1)..n_cols {
            xtx[i * n_cols + j] = xtx[j * n_cols + i];
        }
    }
    let beta = spd_solve(n_cols, &xtx, &xty)?;
    let mut rss = 0.0;
    for r in 0..n_rows {
        let row = &x[r * n_cols..(r + 1) * n_cols];
        let mut fit = 0.0;
        for i in 0..n_cols {
            fit += row[i] * beta[i];
        }
        let e = y[r] - fit;
        rss += e * e;
    }
    Some(rss)
}

use super::{check_dim, solve_upper, Matrix, NumericsError, SINGULARITY_TOL};

/// Multi-response least-squares fit `Y = X·B + E`.
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Regressors × responses.
    pub coefficients: Matrix,
    /// Observations × responses.
    pub residuals: Matrix,
    /// `EᵀE / dof`.
    pub residual_covariance: Matrix,
    pub dof: usize,
    /// `(XᵀX)⁻¹`, kept for standard errors.
    pub xtx_inv: Matrix,
}

impl OlsFit {
    pub fn nobs(&self) -> usize {
        self.residuals.rows()
    }

    /// Standard errors of the coefficients, shaped like `coefficients`.
    pub fn standard_errors(&self) -> Matrix {
        let k = self.coefficients.rows();
        let m = self.coefficients.cols();
        Matrix::from_fn(k, m, |i, j| {
            (self.xtx_inv[(i, i)] * self.residual_covariance[(j, j)]).max(0.0).sqrt()
        })
    }

    /// Residual cross-product divided by the number of observations, the
    /// maximum-likelihood normalization.
    pub fn ml_covariance(&self) -> Matrix {
        self.residuals
            .t_matmul(&self.residuals)
            .scale(1.0 / self.nobs() as f64)
    }
}

/// Ordinary least squares through a Householder QR factorization of `X`.
///
/// A column whose QR pivot falls below `1e-10 · max|R_ii|` is reported as
/// [`NumericsError::Singular`] with its index.
pub fn ols_fit(x: &Matrix, y: &Matrix) -> Result<OlsFit, NumericsError> {
    let n = x.rows();
    let k = x.cols();
    let m = y.cols();
    if y.rows() != n {
        return Err(NumericsError::Shape(format!(
            "X has {n} rows but Y has {}",
            y.rows()
        )));
    }
    if k == 0 {
        return Err(NumericsError::Shape("X has no columns".into()));
    }
    if n <= k {
        return Err(NumericsError::Shape(format!(
            "{n} observations for {k} regressors"
        )));
    }
    check_dim(k)?;

    // Householder QR in place; `qty` receives Qᵀ·Y.
    let mut a = x.clone();
    let mut qty = y.clone();
    let mut r_diag = vec![0.0; k];
    for j in 0..k {
        let norm = (j..n).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            r_diag[j] = 0.0;
            continue;
        }
        let alpha = if a[(j, j)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..n).map(|i| a[(i, j)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            for c in j..k {
                let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * a[(j + t, c)]).sum();
                let f = 2.0 * dot / vnorm2;
                for (t, vi) in v.iter().enumerate() {
                    a[(j + t, c)] -= f * vi;
                }
            }
            for c in 0..m {
                let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * qty[(j + t, c)]).sum();
                let f = 2.0 * dot / vnorm2;
                for (t, vi) in v.iter().enumerate() {
                    qty[(j + t, c)] -= f * vi;
                }
            }
        }
        r_diag[j] = a[(j, j)];
    }

    let max_pivot = r_diag.iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
    if let Some(col) = r_diag
        .iter()
        .position(|d| d.abs() <= SINGULARITY_TOL * max_pivot || max_pivot == 0.0)
    {
        return Err(NumericsError::Singular { column: col });
    }

    let r = Matrix::from_fn(k, k, |i, j| if j >= i { a[(i, j)] } else { 0.0 });
    let rhs = qty.block(0, 0, k, m);
    let coefficients = solve_upper(&r, &rhs);
    let residuals = y.sub(&x.matmul(&coefficients));
    let dof = n - k;
    let residual_covariance = residuals.t_matmul(&residuals).scale(1.0 / dof as f64);

    let r_inv = solve_upper(&r, &Matrix::identity(k));
    let xtx_inv = r_inv.matmul(&r_inv.transpose());

    Ok(OlsFit {
        coefficients,
        residuals,
        residual_covariance,
        dof,
        xtx_inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::cholesky_factor;
    use crate::numerics::solve_lower;
    use proptest::prelude::*;

    #[test]
    fn intercept_only_is_the_mean() {
        let x = Matrix::from_row_major(3, 1, vec![1.0; 3]).unwrap();
        let y = Matrix::column_vector(&[1.0, 2.0, 3.0]);
        let fit = ols_fit(&x, &y).unwrap();
        assert!((fit.coefficients[(0, 0)] - 2.0).abs() < 1e-14);
        assert_eq!(fit.dof, 2);
        assert!((fit.residual_covariance[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_fit_in_span_has_zero_residuals() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = Matrix::from_rows(&[
            vec![s, 0.0],
            vec![s, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 0.0],
        ])
        .unwrap();
        let y = Matrix::column_vector(&[3.0 * s, 3.0 * s, -2.0, 0.0]);
        let fit = ols_fit(&x, &y).unwrap();
        assert!(fit.residuals.max_abs() < 1e-14);
        assert!((fit.coefficients[(0, 0)] - 3.0).abs() < 1e-12);
        assert!((fit.coefficients[(1, 0)] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_is_singular() {
        let x = Matrix::from_rows(&[
            vec![1.0, 0.3, 0.3],
            vec![1.0, 1.1, 1.1],
            vec![1.0, -0.4, -0.4],
            vec![1.0, 2.0, 2.0],
            vec![1.0, 0.7, 0.7],
        ])
        .unwrap();
        let y = Matrix::column_vector(&[1.0, 2.0, 0.5, 3.0, 1.0]);
        assert_eq!(ols_fit(&x, &y).unwrap_err(), NumericsError::Singular { column: 2 });
    }

    #[test]
    fn too_few_rows() {
        let x = Matrix::identity(2);
        let y = Matrix::column_vector(&[1.0, 2.0]);
        assert!(matches!(ols_fit(&x, &y), Err(NumericsError::Shape(_))));
    }

    fn design(seed: u64, n: usize, k: usize) -> (Matrix, Matrix) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_fn(n, k, |_, j| if j == 0 { 1.0 } else { rng.gen_range(-2.0..2.0) });
        let y = Matrix::from_fn(n, 2, |_, _| rng.gen_range(-5.0..5.0));
        (x, y)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn residuals_orthogonal_to_regressors(seed in any::<u64>(), n in 8usize..40, k in 1usize..6) {
            let (x, y) = design(seed, n, k);
            let fit = ols_fit(&x, &y).unwrap();
            let xe = x.t_matmul(&fit.residuals);
            let scale = x.max_abs() * y.max_abs() * n as f64;
            prop_assert!(xe.max_abs() <= 1e-8 * scale.max(1.0));
        }

        #[test]
        fn agrees_with_cholesky_normal_equations(seed in any::<u64>(), n in 10usize..40, k in 1usize..6) {
            let (x, y) = design(seed, n, k);
            let fit = ols_fit(&x, &y).unwrap();
            let l = cholesky_factor(&x.t_matmul(&x)).unwrap();
            let z = solve_lower(&l, &x.t_matmul(&y));
            let b = solve_upper(&l.transpose(), &z);
            prop_assert!(b.sub(&fit.coefficients).max_abs() < 1e-8);
        }
    }
}

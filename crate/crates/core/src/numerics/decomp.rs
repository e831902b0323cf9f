use super::{check_dim, Matrix, NumericsError};

const SYMMETRY_TOL: f64 = 1e-10;
const PD_PIVOT_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Lower-triangular `L` with `L·Lᵀ = S`.
pub fn cholesky_factor(s: &Matrix) -> Result<Matrix, NumericsError> {
    if !s.is_square() {
        return Err(NumericsError::Shape(format!(
            "cholesky of a {}x{} matrix",
            s.rows(),
            s.cols()
        )));
    }
    let n = s.rows();
    check_dim(n)?;
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(NumericsError::NotSymmetric(asym));
    }
    let max_diag = s.diag().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > PD_PIVOT_TOL * max_diag) {
            return Err(NumericsError::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

/// Forward substitution `L·X = B` for lower-triangular `L`.
pub fn solve_lower(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut v = x[(i, c)];
            for k in 0..i {
                v -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = v / l[(i, i)];
        }
    }
    x
}

/// Back substitution `U·X = B` for upper-triangular `U`.
pub fn solve_upper(u: &Matrix, b: &Matrix) -> Matrix {
    let n = u.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in (0..n).rev() {
            let mut v = x[(i, c)];
            for k in (i + 1)..n {
                v -= u[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = v / u[(i, i)];
        }
    }
    x
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
///
/// The matrix is first equilibrated by its diagonal, so badly scaled but
/// well-conditioned inputs invert accurately.
pub fn spd_inverse(s: &Matrix) -> Result<Matrix, NumericsError> {
    let n = s.rows();
    if !s.is_square() {
        return Err(NumericsError::Shape("inverse of a non-square matrix".into()));
    }
    let d: Vec<f64> = s
        .diag()
        .iter()
        .map(|v| if *v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
        .collect();
    let scaled = Matrix::from_fn(n, n, |i, j| d[i] * s[(i, j)] * d[j]);
    let l = cholesky_factor(&scaled)?;
    let l_inv = solve_lower(&l, &Matrix::identity(n));
    let inv = l_inv.t_matmul(&l_inv);
    Ok(Matrix::from_fn(n, n, |i, j| d[i] * 0.5 * (inv[(i, j)] + inv[(j, i)]) * d[j]))
}

/// Solves `A·X = B` for square `A` by LU with partial pivoting.
pub fn lu_solve(a: &Matrix, b: &Matrix) -> Result<Matrix, NumericsError> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(NumericsError::Shape(format!(
            "lu_solve with a {}x{} system and {} right-hand rows",
            a.rows(),
            a.cols(),
            b.rows()
        )));
    }
    let n = a.rows();
    check_dim(n)?;
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| lu[(i, col)].abs().total_cmp(&lu[(j, col)].abs()))
            .unwrap();
        if lu[(piv, col)].abs() <= super::SINGULARITY_TOL * scale {
            return Err(NumericsError::Singular { column: col });
        }
        if piv != col {
            for c in 0..n {
                let tmp = lu[(col, c)];
                lu[(col, c)] = lu[(piv, c)];
                lu[(piv, c)] = tmp;
            }
            for c in 0..x.cols() {
                let tmp = x[(col, c)];
                x[(col, c)] = x[(piv, c)];
                x[(piv, c)] = tmp;
            }
        }
        for i in (col + 1)..n {
            let f = lu[(i, col)] / lu[(col, col)];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                lu[(i, c)] -= f * lu[(col, c)];
            }
            for c in 0..x.cols() {
                x[(i, c)] -= f * x[(col, c)];
            }
        }
    }
    Ok(solve_upper(&lu, &x))
}

/// Thin QR `X = Q·R` (Q: n×k orthonormal columns, R: k×k upper triangular)
/// by modified Gram–Schmidt with one reorthogonalization pass.
///
/// Fails with [`NumericsError::Singular`] when a column's remaining norm
/// falls below `tol` times its original norm.
pub fn thin_qr(x: &Matrix, tol: f64) -> Result<(Matrix, Matrix), NumericsError> {
    let n = x.rows();
    let k = x.cols();
    if n < k {
        return Err(NumericsError::Shape(format!("thin QR of a {n}x{k} matrix")));
    }
    check_dim(k)?;
    let mut q = x.clone();
    let mut r = Matrix::zeros(k, k);
    for j in 0..k {
        let original = (0..n).map(|i| q[(i, j)] * q[(i, j)]).sum::<f64>().sqrt();
        for _pass in 0..2 {
            for prev in 0..j {
                let dot: f64 = (0..n).map(|i| q[(i, prev)] * q[(i, j)]).sum();
                r[(prev, j)] += dot;
                for i in 0..n {
                    q[(i, j)] -= dot * q[(i, prev)];
                }
            }
        }
        let norm = (0..n).map(|i| q[(i, j)] * q[(i, j)]).sum::<f64>().sqrt();
        if !(norm > tol * original) {
            return Err(NumericsError::Singular { column: j });
        }
        r[(j, j)] = norm;
        for i in 0..n {
            q[(i, j)] /= norm;
        }
    }
    Ok((q, r))
}

/// Eigenvalues in descending order with matching orthonormal eigenvector
/// columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn symmetric_eigendecomposition(s: &Matrix) -> Result<SymmetricEigen, NumericsError> {
    if !s.is_square() {
        return Err(NumericsError::Shape("eigendecomposition of a non-square matrix".into()));
    }
    let n = s.rows();
    check_dim(n)?;
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(NumericsError::NotSymmetric(asym));
    }
    // Symmetrize so rounding noise in the input cannot bias the rotations.
    let mut a = Matrix::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let mut v = Matrix::identity(n);
    let norm = a.frobenius_norm();

    let mut converged = n <= 1 || norm == 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 1e-2 * norm {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let new_kp = c * akp - sn * akq;
                    let new_kq = sn * akp + c * akq;
                    a[(k, p)] = new_kp;
                    a[(p, k)] = new_kp;
                    a[(k, q)] = new_kq;
                    a[(q, k)] = new_kq;
                }
                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(NumericsError::NoConvergence("Jacobi eigendecomposition"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = v.select_columns(&order);
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
    })
}

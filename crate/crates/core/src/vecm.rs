//! Vector error-correction model estimation at a fixed cointegrating rank.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::johansen::{
    concentrate_matrix, concentrated_log_likelihood, solve_cointegration_eigenproblem, DeterministicCase,
    JohansenError, MomentMatrices,
};
use crate::lag_selection::{information_criteria, LagError};
use crate::numerics::{general_eigenvalues, lu_solve, ols_fit, spd_inverse, Matrix, NumericsError, OlsFit};
use crate::panel::{LogLevelPanel, PanelError, Variable};

/// Two-sided 5% normal critical value.
pub const Z_CRITICAL_5PCT: f64 = 1.96;

/// Moduli this close to 1 count as common stochastic trends.
pub const UNIT_ROOT_TOL: f64 = 1e-2;

const STABLE_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VecmError {
    #[error("rank 0 requested: with no cointegration, model the differences as a VAR instead")]
    RankZero,
    #[error("rank {r} must be below the number of variables {p}")]
    RankTooLarge { r: usize, p: usize },
    #[error("cointegrating vector cannot be normalized on {0}")]
    NonNormalizable(String),
    #[error("normalized equation needs exactly one cointegrating vector, got {0}")]
    NotSingleEquation(usize),
    #[error("dependent variable sb must be listed first")]
    DependentNotFirst,
    #[error("history has {got} observations, need {need}")]
    InsufficientHistory { need: usize, got: usize },
    #[error("inconsistent model dimensions: {0}")]
    Dimension(String),
    #[error(transparent)]
    Johansen(#[from] JohansenError),
    #[error(transparent)]
    Criteria(#[from] LagError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// Estimated VECM `Δz_t = α·β′·z̃_{t−1} + Σ Γ_i·Δz_{t−i} + μ + ε_t`, where
/// `z̃` appends a 1 when the constant is restricted to the relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VecmModel {
    pub vars: Vec<Variable>,
    pub k: usize,
    pub r: usize,
    pub case: DeterministicCase,
    pub alpha: Matrix,
    /// `p × r`, or `(p + 1) × r` with the constant row last.
    pub beta: Matrix,
    pub gamma: Vec<Matrix>,
    /// Zero under a restricted constant.
    pub mu: Vec<f64>,
    pub sigma: Matrix,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_params: usize,
    pub t_eff: usize,
    /// Conditional standard errors aligned to `beta`; `None` on normalized entries.
    pub beta_se: Vec<Vec<Option<f64>>>,
    pub beta_z: Vec<Vec<Option<f64>>>,
    pub wald_chi2: f64,
    pub wald_dof: usize,
    pub eigenvalues: Vec<f64>,
    /// Sample mean of each `β′z̃_{t−1}` over the estimation rows.
    pub ect_mean: Vec<f64>,
}

impl VecmModel {
    pub fn p(&self) -> usize {
        self.vars.len()
    }

    /// Builds a model from known parameters (simulation and fixtures). Fit
    /// statistics are zero and standard errors are absent.
    pub fn from_parameters(
        vars: Vec<Variable>,
        case: DeterministicCase,
        alpha: Matrix,
        beta: Matrix,
        gamma: Vec<Matrix>,
        mu: Vec<f64>,
    ) -> Result<Self, VecmError> {
        let p = vars.len();
        let r = alpha.cols();
        let p1 = p + usize::from(case == DeterministicCase::RestrictedConstant);
        if alpha.rows() != p || beta.rows() != p1 || beta.cols() != r || mu.len() != p {
            return Err(VecmError::Dimension(format!(
                "alpha {}x{}, beta {}x{}, mu {} for p = {p}",
                alpha.rows(),
                alpha.cols(),
                beta.rows(),
                beta.cols(),
                mu.len()
            )));
        }
        if gamma.iter().any(|g| g.rows() != p || g.cols() != p) {
            return Err(VecmError::Dimension("each gamma must be p x p".into()));
        }
        Ok(VecmModel {
            k: gamma.len() + 1,
            r,
            case,
            beta_se: vec![vec![None; r]; p1],
            beta_z: vec![vec![None; r]; p1],
            alpha,
            beta,
            gamma,
            mu,
            sigma: Matrix::identity(p),
            loglik: 0.0,
            aic: 0.0,
            bic: 0.0,
            n_params: 0,
            t_eff: 0,
            wald_chi2: 0.0,
            wald_dof: r * (p - r.min(p)),
            eigenvalues: Vec::new(),
            ect_mean: vec![0.0; r],
            vars,
        })
    }

    /// `Π = α·β′` restricted to the level coordinates.
    pub fn pi(&self) -> Matrix {
        let p = self.p();
        let beta_levels = self.beta.select_rows(0..p);
        self.alpha.matmul(&beta_levels.transpose())
    }
}

/// Free parameters: α, the unnormalized part of β, Γ_i and μ.
pub fn vecm_parameter_count(p: usize, r: usize, k: usize, case: DeterministicCase) -> usize {
    let p1 = p + usize::from(case == DeterministicCase::RestrictedConstant);
    p * r + r * (p1 - r) + p * p * (k - 1) + if case == DeterministicCase::UnrestrictedConstant { p } else { 0 }
}

pub fn estimate_vecm(
    panel: &LogLevelPanel,
    vars: &[Variable],
    k: usize,
    r: usize,
    case: DeterministicCase,
) -> Result<VecmModel, VecmError> {
    let data = panel.matrix(vars)?;
    estimate_vecm_matrix(&data, vars, k, r, case)
}

/// Estimation on a `T × p` matrix of log levels whose columns follow `vars`.
pub fn estimate_vecm_matrix(
    data: &Matrix,
    vars: &[Variable],
    k: usize,
    r: usize,
    case: DeterministicCase,
) -> Result<VecmModel, VecmError> {
    let p = data.cols();
    if vars.len() != p {
        return Err(VecmError::Dimension(format!("{} names for {p} columns", vars.len())));
    }
    if r == 0 {
        return Err(VecmError::RankZero);
    }
    if r >= p {
        return Err(VecmError::RankTooLarge { r, p });
    }
    let m = concentrate_matrix(data, k, case)?;
    let eig = solve_cointegration_eigenproblem(&m)?;
    let raw = eig.beta_candidates.select_columns(&(0..r).collect::<Vec<_>>());
    let beta = normalize_beta(&raw, vars)?;

    let cond = fit_given_beta(data, k, &beta, case)?;
    let ols = &cond.ols;
    let alpha = Matrix::from_fn(p, r, |i, j| ols.coefficients[(j, i)]);
    let gamma = (1..k)
        .map(|lag| Matrix::from_fn(p, p, |i, j| ols.coefficients[(r + p * (lag - 1) + j, i)]))
        .collect::<Vec<_>>();
    let mu = if case == DeterministicCase::UnrestrictedConstant {
        let row = r + p * (k - 1);
        (0..p).map(|i| ols.coefficients[(row, i)]).collect()
    } else {
        vec![0.0; p]
    };
    let sigma = ols.ml_covariance();
    let n_params = vecm_parameter_count(p, r, k, case);
    let ic = information_criteria(&sigma, m.t_eff, n_params)?;

    let implied = concentrated_log_likelihood(&m, &eig.eigenvalues, r)?;
    debug_assert!(
        (ic.loglik - implied).abs() <= 1e-6 * implied.abs().max(1.0),
        "VECM log-likelihood {} disagrees with the eigenvalue-implied {}",
        ic.loglik,
        implied
    );

    let inference = beta_inference(&m, &alpha, &sigma, &beta)?;
    let ect_mean = (0..r)
        .map(|j| (0..cond.ect.rows()).map(|t| cond.ect[(t, j)]).sum::<f64>() / cond.ect.rows() as f64)
        .collect();

    Ok(VecmModel {
        vars: vars.to_vec(),
        k,
        r,
        case,
        alpha,
        beta,
        gamma,
        mu,
        sigma,
        loglik: ic.loglik,
        aic: ic.aic,
        bic: ic.bic,
        n_params,
        t_eff: m.t_eff,
        beta_se: inference.se,
        beta_z: inference.z,
        wald_chi2: inference.wald,
        wald_dof: r * (p - r),
        eigenvalues: eig.eigenvalues,
        ect_mean,
    })
}

/// Rescales `β` so its top `r × r` block is the identity (for r = 1: first
/// coordinate exactly +1).
fn normalize_beta(raw: &Matrix, vars: &[Variable]) -> Result<Matrix, VecmError> {
    let r = raw.cols();
    let top = raw.select_rows(0..r);
    let name = || vars.iter().take(r).map(|v| v.name()).collect::<Vec<_>>().join(",");
    let scale = raw.max_abs();
    if r == 1 {
        let lead = raw[(0, 0)];
        if lead.abs() <= 1e-10 * scale {
            return Err(VecmError::NonNormalizable(name()));
        }
        let mut b = raw.scale(1.0 / lead);
        b[(0, 0)] = 1.0;
        return Ok(b);
    }
    // β·top⁻¹ = (top⁻ᵀ·βᵀ)ᵀ
    let solved = lu_solve(&top.transpose(), &raw.transpose()).map_err(|_| VecmError::NonNormalizable(name()))?;
    let mut b = solved.transpose();
    for i in 0..r {
        for j in 0..r {
            b[(i, j)] = if i == j { 1.0 } else { 0.0 };
        }
    }
    Ok(b)
}

/// Short-run regression with `β` held fixed.
#[derive(Debug, Clone)]
pub struct ConditionalFit {
    pub ols: OlsFit,
    /// Regressors `[β′z̃_{t−1}, Δz_{t−1..t−k+1}, 1?]`.
    pub x: Matrix,
    /// `Δz_t` on the estimation rows.
    pub y: Matrix,
    pub ect: Matrix,
}

/// OLS of `Δz_t` on `(β′z̃_{t−1}, Δz_{t−1}, …, Δz_{t−k+1}, 1?)`.
pub fn fit_given_beta(
    data: &Matrix,
    k: usize,
    beta: &Matrix,
    case: DeterministicCase,
) -> Result<ConditionalFit, VecmError> {
    let p = data.cols();
    let r = beta.cols();
    let restricted = case == DeterministicCase::RestrictedConstant;
    if beta.rows() != p + usize::from(restricted) {
        return Err(VecmError::Dimension(format!("beta has {} rows for p = {p}", beta.rows())));
    }
    let t_eff = data.rows().saturating_sub(k);
    let level = |t: usize, i: usize| if i < p { data[(t, i)] } else { 1.0 };
    let ect = Matrix::from_fn(t_eff, r, |row, j| {
        let t = k + row - 1;
        (0..beta.rows()).map(|i| beta[(i, j)] * level(t, i)).sum()
    });
    let n_short = p * (k - 1);
    let ncols = r + n_short + usize::from(!restricted);
    let x = Matrix::from_fn(t_eff, ncols, |row, c| {
        let t = k + row;
        if c < r {
            ect[(row, c)]
        } else if c < r + n_short {
            let lag = (c - r) / p + 1;
            let j = (c - r) % p;
            data[(t - lag, j)] - data[(t - lag - 1, j)]
        } else {
            1.0
        }
    });
    let y = Matrix::from_fn(t_eff, p, |row, j| data[(k + row, j)] - data[(k + row - 1, j)]);
    let ols = ols_fit(&x, &y)?;
    Ok(ConditionalFit { ols, x, y, ect })
}

struct BetaInference {
    se: Vec<Vec<Option<f64>>>,
    z: Vec<Vec<Option<f64>>>,
    wald: f64,
}

// With β = [I_r; B], Var(vec B) = (α′Σ⁻¹α)⁻¹ ⊗ (R1bᵀR1b)⁻¹ where R1b are the
// concentrated level residuals of the free coordinates.
fn beta_inference(m: &MomentMatrices, alpha: &Matrix, sigma: &Matrix, beta: &Matrix) -> Result<BetaInference, VecmError> {
    let r = beta.cols();
    let p1 = beta.rows();
    let q = p1 - r;
    let sigma_inv = spd_inverse(sigma)?;
    let a = alpha.t_matmul(&sigma_inv.matmul(alpha));
    let a_inv = spd_inverse(&a)?;
    let r1b = m.r1.select_columns(&(r..p1).collect::<Vec<_>>());
    let mm = r1b.t_matmul(&r1b);
    let m_inv = spd_inverse(&mm)?;

    let mut se = vec![vec![None; r]; p1];
    let mut z = vec![vec![None; r]; p1];
    for i in 0..q {
        for j in 0..r {
            let s = (a_inv[(j, j)] * m_inv[(i, i)]).sqrt();
            se[r + i][j] = Some(s);
            z[r + i][j] = Some(beta[(r + i, j)] / s);
        }
    }

    // Joint test on the free level coefficients (the restricted constant is
    // a nuisance and excluded).
    let n_levels = m.p - r;
    let sub = m_inv.block(0, 0, n_levels, n_levels);
    let sub_inv = spd_inverse(&sub)?;
    let mut wald = 0.0;
    for ja in 0..r {
        for jb in 0..r {
            for i in 0..n_levels {
                for j in 0..n_levels {
                    wald += beta[(r + i, ja)] * a[(ja, jb)] * sub_inv[(i, j)] * beta[(r + j, jb)];
                }
            }
        }
    }
    Ok(BetaInference { se, z, wald })
}

/// The long-run relation solved for ln SB: `ln SB = Σ c_j·ln x_j + C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CointegratingEquation {
    /// Every regressor of the full variable set; omitted ones are structural zeros.
    pub coefficients: BTreeMap<Variable, f64>,
    pub intercept: f64,
    pub std_errors: BTreeMap<Variable, Option<f64>>,
    pub z_scores: BTreeMap<Variable, Option<f64>>,
    pub significant_at_5pct: BTreeMap<Variable, Option<bool>>,
    pub intercept_z: Option<f64>,
    pub included: Vec<Variable>,
}

impl CointegratingEquation {
    /// β column (up to scale) implied by the equation, ordered like `vars`
    /// with the constant last when `with_constant`.
    pub fn reconstruct_beta(&self, vars: &[Variable], with_constant: bool) -> Vec<f64> {
        let mut out: Vec<f64> = vars
            .iter()
            .map(|v| if *v == Variable::Sb { 1.0 } else { -self.coefficients[v] })
            .collect();
        if with_constant {
            out.push(-self.intercept);
        }
        out
    }
}

pub fn normalize_cointegrating_equation(model: &VecmModel) -> Result<CointegratingEquation, VecmError> {
    if model.r != 1 {
        return Err(VecmError::NotSingleEquation(model.r));
    }
    if model.vars.first() != Some(&Variable::Sb) {
        return Err(VecmError::DependentNotFirst);
    }
    let p = model.p();
    let b_sb = model.beta[(0, 0)];
    if b_sb.abs() <= 1e-10 {
        return Err(VecmError::NonNormalizable("sb".into()));
    }
    let mut coefficients = BTreeMap::new();
    let mut std_errors = BTreeMap::new();
    let mut z_scores = BTreeMap::new();
    let mut significant = BTreeMap::new();
    for v in Variable::REGRESSORS {
        coefficients.insert(v, 0.0);
        std_errors.insert(v, None);
        z_scores.insert(v, None);
        significant.insert(v, None);
    }
    for (i, v) in model.vars.iter().enumerate().skip(1) {
        coefficients.insert(*v, -model.beta[(i, 0)] / b_sb);
        let se = model.beta_se[i][0].map(|s| s / b_sb.abs());
        let z = model.beta_z[i][0].map(|z| -z * b_sb.signum());
        std_errors.insert(*v, se);
        z_scores.insert(*v, z);
        significant.insert(*v, z.map(|z| z.abs() >= Z_CRITICAL_5PCT));
    }
    let (intercept, intercept_z) = match model.case {
        DeterministicCase::RestrictedConstant => (
            -model.beta[(p, 0)] / b_sb,
            model.beta_z[p][0].map(|z| -z * b_sb.signum()),
        ),
        DeterministicCase::UnrestrictedConstant => (model.ect_mean[0] / b_sb, None),
    };
    Ok(CointegratingEquation {
        coefficients,
        intercept,
        std_errors,
        z_scores,
        significant_at_5pct: significant,
        intercept_z,
        included: model.vars[1..].to_vec(),
    })
}

/// Level-VAR companion matrix implied by `(α, β, Γ_i)`.
pub fn companion_matrix(model: &VecmModel) -> Matrix {
    let p = model.p();
    let k = model.k;
    let pi = model.pi();
    let mut a: Vec<Matrix> = Vec::with_capacity(k);
    let g = |i: usize| &model.gamma[i - 1];
    let mut a1 = Matrix::identity(p).add(&pi);
    if k > 1 {
        a1 = a1.add(g(1));
    }
    a.push(a1);
    for i in 2..k {
        a.push(g(i).sub(g(i - 1)));
    }
    if k > 1 {
        a.push(g(k - 1).scale(-1.0));
    }
    let n = p * k;
    Matrix::from_fn(n, n, |row, col| {
        if row < p {
            a[col / p][(row, col % p)]
        } else if row - p == col {
            1.0
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub moduli: Vec<f64>,
    pub unit_root_count: usize,
    pub expected_unit_roots: usize,
    pub stable: bool,
}

/// Counts companion roots within [`UNIT_ROOT_TOL`] of the unit circle;
/// stable means exactly `p − r` of them and every other modulus below 1.
pub fn stability_check(model: &VecmModel) -> Result<StabilityReport, VecmError> {
    let p = model.p();
    if model.r == 0 {
        return Err(VecmError::RankZero);
    }
    if model.r >= p {
        return Err(VecmError::RankTooLarge { r: model.r, p });
    }
    let eig = general_eigenvalues(&companion_matrix(model))?;
    let moduli: Vec<f64> = eig.iter().map(|c| c.modulus()).collect();
    let unit_root_count = moduli.iter().filter(|m| (*m - 1.0).abs() <= UNIT_ROOT_TOL).count();
    let expected = p - model.r;
    let others_inside = moduli
        .iter()
        .filter(|m| (*m - 1.0).abs() > UNIT_ROOT_TOL)
        .all(|m| *m < 1.0 - STABLE_MARGIN);
    Ok(StabilityReport {
        moduli,
        unit_root_count,
        expected_unit_roots: expected,
        stable: unit_root_count == expected && others_inside,
    })
}

/// `ẑ_{t+1} = z_t + Σ Γ_i·Δz_{t+1−i} + α·β′·z̃_t + μ` from the last `k` rows of `history`.
pub fn predict_one_step(model: &VecmModel, history: &Matrix) -> Result<Vec<f64>, VecmError> {
    let p = model.p();
    let k = model.k;
    if history.cols() != p {
        return Err(VecmError::Dimension(format!("history has {} columns for p = {p}", history.cols())));
    }
    let n = history.rows();
    if n < k {
        return Err(VecmError::InsufficientHistory { need: k, got: n });
    }
    let last = n - 1;
    let mut out: Vec<f64> = history.row(last).to_vec();
    for (i, mu) in model.mu.iter().enumerate() {
        out[i] += mu;
    }
    for (lag, g) in model.gamma.iter().enumerate() {
        // Γ_{lag+1} multiplies Δz_{t−lag}.
        let t = last - lag;
        for i in 0..p {
            for j in 0..p {
                out[i] += g[(i, j)] * (history[(t, j)] - history[(t - 1, j)]);
            }
        }
    }
    for c in 0..model.r {
        let ect: f64 = (0..model.beta.rows())
            .map(|i| model.beta[(i, c)] * if i < p { history[(last, i)] } else { 1.0 })
            .sum();
        for i in 0..p {
            out[i] += model.alpha[(i, c)] * ect;
        }
    }
    Ok(out)
}

//! Reduced-rank cointegration analysis: concentration, the whitened
//! eigenproblem, and trace / max-eigenvalue rank tests.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    cholesky_factor, ols_fit, solve_lower, solve_upper, spd_inverse, symmetric_eigendecomposition, thin_qr,
    Matrix, NumericsError,
};
use crate::panel::{LogLevelPanel, PanelError, Variable};

// Relative residual-norm floor below which a residual column counts as
// linearly dependent on the others.
const QR_TOL: f64 = 1e-12;

/// Largest `p − r` with tabulated critical values.
pub const MAX_TABULATED_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterministicCase {
    /// Constant confined to the cointegrating relation.
    RestrictedConstant,
    /// Constant in every differenced equation (implies linear trends in levels).
    UnrestrictedConstant,
}

impl DeterministicCase {
    pub fn short_name(self) -> &'static str {
        match self {
            DeterministicCase::RestrictedConstant => "rconst",
            DeterministicCase::UnrestrictedConstant => "uconst",
        }
    }
}

impl std::str::FromStr for DeterministicCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rconst" | "restricted_constant" => Ok(DeterministicCase::RestrictedConstant),
            "uconst" | "unrestricted_constant" => Ok(DeterministicCase::UnrestrictedConstant),
            other => Err(format!("unknown deterministic case '{other}' (expected rconst or uconst)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignificanceLevel {
    #[serde(rename = "10%")]
    Pct10,
    #[serde(rename = "5%")]
    Pct5,
    #[serde(rename = "1%")]
    Pct1,
}

impl SignificanceLevel {
    fn column(self) -> usize {
        match self {
            SignificanceLevel::Pct10 => 0,
            SignificanceLevel::Pct5 => 1,
            SignificanceLevel::Pct1 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankStatistic {
    Trace,
    MaxEigenvalue,
}

// Osterwald-Lenum (1992) asymptotic critical values, indexed [level][p − r − 1]
// with levels ordered 10%, 5%, 1%.
const TRACE_UCONST: [[f64; 6]; 3] = [
    [2.69, 13.33, 26.79, 43.95, 64.84, 89.48],
    [3.76, 15.41, 29.68, 47.21, 68.52, 94.15],
    [6.65, 20.04, 35.65, 54.46, 76.07, 103.18],
];
const MAXEIG_UCONST: [[f64; 6]; 3] = [
    [2.69, 12.07, 18.60, 24.73, 30.90, 36.76],
    [3.76, 14.07, 20.97, 27.07, 33.46, 39.37],
    [6.65, 18.63, 25.52, 32.24, 38.77, 45.10],
];
const TRACE_RCONST: [[f64; 6]; 3] = [
    [7.52, 17.85, 32.00, 49.65, 71.86, 97.18],
    [9.24, 19.96, 34.91, 53.12, 76.07, 102.14],
    [12.97, 24.60, 41.07, 60.16, 84.45, 111.01],
];
const MAXEIG_RCONST: [[f64; 6]; 3] = [
    [7.52, 13.75, 19.77, 25.56, 31.66, 37.45],
    [9.24, 15.67, 22.00, 28.14, 34.40, 40.30],
    [12.97, 20.20, 26.81, 33.24, 39.79, 46.82],
];

/// Tabulated asymptotic critical value, or `None` outside `1..=6`.
pub fn critical_value(
    case: DeterministicCase,
    stat: RankStatistic,
    level: SignificanceLevel,
    p_minus_r: usize,
) -> Option<f64> {
    if p_minus_r == 0 || p_minus_r > MAX_TABULATED_DIM {
        return None;
    }
    let table = match (case, stat) {
        (DeterministicCase::UnrestrictedConstant, RankStatistic::Trace) => &TRACE_UCONST,
        (DeterministicCase::UnrestrictedConstant, RankStatistic::MaxEigenvalue) => &MAXEIG_UCONST,
        (DeterministicCase::RestrictedConstant, RankStatistic::Trace) => &TRACE_RCONST,
        (DeterministicCase::RestrictedConstant, RankStatistic::MaxEigenvalue) => &MAXEIG_RCONST,
    };
    Some(table[level.column()][p_minus_r - 1])
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JohansenError {
    #[error("lag length must be at least 1")]
    ZeroLag,
    #[error("insufficient sample: {nobs} usable rows, need more than {needed}")]
    InsufficientSample { nobs: usize, needed: usize },
    #[error("short-run regressor block is singular: {0}")]
    ShortRunSingular(NumericsError),
    #[error("degenerate moment matrix: {0}")]
    DegenerateMoments(NumericsError),
    #[error("levels are perfectly predicted by the short-run block (eigenvalue at 1)")]
    PerfectFit,
    #[error("dimension {0} exceeds the tabulated maximum of 6")]
    UnsupportedDimension(usize),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// Residual moment matrices after partialling out the short-run block.
#[derive(Debug, Clone)]
pub struct MomentMatrices {
    pub s00: Matrix,
    pub s01: Matrix,
    pub s11: Matrix,
    /// Δz residuals, `T_eff × p`.
    pub r0: Matrix,
    /// Lagged-level residuals, `T_eff × p` (or `p + 1` with a restricted constant).
    pub r1: Matrix,
    pub t_eff: usize,
    pub p: usize,
    pub k: usize,
    pub case: DeterministicCase,
}

impl MomentMatrices {
    pub fn s10(&self) -> Matrix {
        self.s01.transpose()
    }

    /// Builds moments directly from residual blocks (`S_ij = T⁻¹·R_iᵀR_j`).
    pub fn from_residuals(r0: Matrix, r1: Matrix, k: usize, case: DeterministicCase) -> Self {
        let t = r0.rows() as f64;
        let sym = |m: Matrix| {
            let n = m.rows();
            Matrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
        };
        MomentMatrices {
            s00: sym(r0.t_matmul(&r0).scale(1.0 / t)),
            s01: r0.t_matmul(&r1).scale(1.0 / t),
            s11: sym(r1.t_matmul(&r1).scale(1.0 / t)),
            t_eff: r0.rows(),
            p: r0.cols(),
            k,
            case,
            r0,
            r1,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Deterministics {
    // Exercised by tests that check the raw, unprojected moments.
    #[allow(dead_code)]
    None,
    Case(DeterministicCase),
}

pub fn concentrate(
    panel: &LogLevelPanel,
    vars: &[Variable],
    k: usize,
    case: DeterministicCase,
) -> Result<MomentMatrices, JohansenError> {
    let data = panel.matrix(vars)?;
    concentrate_matrix(&data, k, case)
}

/// Concentration on a `T × p` matrix of log levels.
pub fn concentrate_matrix(data: &Matrix, k: usize, case: DeterministicCase) -> Result<MomentMatrices, JohansenError> {
    concentrate_impl(data, k, Deterministics::Case(case))
}

fn concentrate_impl(data: &Matrix, k: usize, det: Deterministics) -> Result<MomentMatrices, JohansenError> {
    if k == 0 {
        return Err(JohansenError::ZeroLag);
    }
    let p = data.cols();
    let t_eff = data.rows().saturating_sub(k);
    let unrestricted = det == Deterministics::Case(DeterministicCase::UnrestrictedConstant);
    let restricted = det == Deterministics::Case(DeterministicCase::RestrictedConstant);
    let n_short = p * (k - 1) + usize::from(unrestricted);
    let p1 = p + usize::from(restricted);
    let needed = n_short + p1 + 2;
    if t_eff <= needed {
        return Err(JohansenError::InsufficientSample { nobs: t_eff, needed });
    }

    let diff = |t: usize, j: usize| data[(t, j)] - data[(t - 1, j)];
    // Row r corresponds to time t = k + r.
    let dz = Matrix::from_fn(t_eff, p, |r, j| diff(k + r, j));
    let lev = Matrix::from_fn(t_eff, p1, |r, j| if j < p { data[(k + r - 1, j)] } else { 1.0 });

    let (r0, r1) = if n_short == 0 {
        (dz, lev)
    } else {
        let w = Matrix::from_fn(t_eff, n_short, |r, c| {
            if c < p * (k - 1) {
                let lag = c / p + 1;
                diff(k + r - lag, c % p)
            } else {
                1.0
            }
        });
        let both = dz.hstack(&lev);
        let fit = ols_fit(&w, &both).map_err(JohansenError::ShortRunSingular)?;
        let res = fit.residuals;
        let idx0: Vec<usize> = (0..p).collect();
        let idx1: Vec<usize> = (p..p + p1).collect();
        (res.select_columns(&idx0), res.select_columns(&idx1))
    };
    let case = match det {
        Deterministics::Case(c) => c,
        Deterministics::None => DeterministicCase::UnrestrictedConstant,
    };
    Ok(MomentMatrices::from_residuals(r0, r1, k, case))
}

#[derive(Debug, Clone)]
pub struct CointegrationEigen {
    /// Descending, in `[0, 1)`, one per variable.
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`; first nonzero coordinate is +1.
    pub beta_candidates: Matrix,
}

/// Solves `|λ·S11 − S10·S00⁻¹·S01| = 0`.
///
/// When the residual blocks are available this works on their thin QR
/// factors, `R_i = Q_i·U_i`: the eigenvalues are those of `CᵀC` with
/// `C = Q0ᵀQ1`, which equals the Cholesky-whitened problem
/// `L⁻¹·S10·S00⁻¹·S01·L⁻ᵀ` (`L = U1ᵀ/√T`) without squaring condition
/// numbers. Bare moment matrices go through the Cholesky whitening directly.
pub fn solve_cointegration_eigenproblem(m: &MomentMatrices) -> Result<CointegrationEigen, JohansenError> {
    let p1 = m.s11.rows();
    let (inner, back) = if m.r0.rows() > 0 {
        let (q0, _) = thin_qr(&m.r0, QR_TOL).map_err(JohansenError::DegenerateMoments)?;
        let (q1, u1) = thin_qr(&m.r1, QR_TOL).map_err(JohansenError::DegenerateMoments)?;
        let c = q0.t_matmul(&q1);
        (c.t_matmul(&c), Back::Upper(u1))
    } else {
        let d1: Vec<f64> = m.s11.diag().iter().map(|v| 1.0 / v.max(f64::MIN_POSITIVE).sqrt()).collect();
        let s11 = Matrix::from_fn(p1, p1, |i, j| d1[i] * m.s11[(i, j)] * d1[j]);
        let l = cholesky_factor(&s11).map_err(JohansenError::DegenerateMoments)?;
        let s00_inv = spd_inverse(&m.s00).map_err(JohansenError::DegenerateMoments)?;
        let s10 = Matrix::from_fn(p1, m.p, |i, j| d1[i] * m.s01[(j, i)]);
        // L⁻¹·S10
        let a = solve_lower(&l, &s10);
        (a.matmul(&s00_inv).matmul(&a.transpose()), Back::Whitened(l, d1))
    };
    let inner = Matrix::from_fn(p1, p1, |i, j| 0.5 * (inner[(i, j)] + inner[(j, i)]));
    let eig = symmetric_eigendecomposition(&inner).map_err(JohansenError::DegenerateMoments)?;

    let n = m.p.min(p1);
    let mut eigenvalues = Vec::with_capacity(n);
    for &lam in &eig.eigenvalues[..n] {
        if lam >= 1.0 - 1e-13 {
            return Err(JohansenError::PerfectFit);
        }
        eigenvalues.push(lam.max(0.0));
    }
    let v = eig.eigenvectors.select_columns(&(0..n).collect::<Vec<_>>());
    let mut beta = match back {
        Back::Upper(u1) => solve_upper(&u1, &v),
        Back::Whitened(l, d1) => {
            let raw = solve_upper(&l.transpose(), &v);
            Matrix::from_fn(p1, n, |i, j| d1[i] * raw[(i, j)])
        }
    };
    for j in 0..n {
        let col = beta.column(j);
        let scale = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if let Some(&lead) = col.iter().find(|v| v.abs() > 1e-12 * scale) {
            for i in 0..p1 {
                beta[(i, j)] /= lead;
            }
        }
    }
    Ok(CointegrationEigen {
        eigenvalues,
        beta_candidates: beta,
    })
}

enum Back {
    Upper(Matrix),
    Whitened(Matrix, Vec<f64>),
}

/// Gaussian log-likelihood of the rank-`r` model implied by the eigenvalues:
/// `−T/2·(p·ln 2π + p + ln det S00 + Σ_{i≤r} ln(1 − λ_i))`.
pub fn concentrated_log_likelihood(m: &MomentMatrices, eigenvalues: &[f64], r: usize) -> Result<f64, JohansenError> {
    let l = cholesky_factor(&m.s00).map_err(JohansenError::DegenerateMoments)?;
    let ln_det_s00 = 2.0 * l.diag().iter().map(|d| d.ln()).sum::<f64>();
    let p = m.p as f64;
    let tail: f64 = eigenvalues[..r].iter().map(|l| (1.0 - l).ln()).sum();
    Ok(-0.5 * m.t_eff as f64 * (p * (2.0 * std::f64::consts::PI).ln() + p + ln_det_s00 + tail))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTestResult {
    pub eigenvalues: Vec<f64>,
    /// Indexed by the null rank r = 0..p−1.
    pub trace_stats: Vec<f64>,
    pub maxeig_stats: Vec<f64>,
    pub trace_critical: Vec<f64>,
    pub maxeig_critical: Vec<f64>,
    pub level: SignificanceLevel,
    /// Smallest r whose trace statistic does not reject; `p` when every null rejects.
    pub selected_rank: usize,
    pub deterministic_case: DeterministicCase,
    pub t_eff: usize,
}

/// Trace and max-eigenvalue statistics with rank chosen by the trace test.
pub fn rank_test(
    m: &MomentMatrices,
    case: DeterministicCase,
    level: SignificanceLevel,
) -> Result<RankTestResult, JohansenError> {
    if m.p > MAX_TABULATED_DIM {
        return Err(JohansenError::UnsupportedDimension(m.p));
    }
    let eig = solve_cointegration_eigenproblem(m)?;
    Ok(rank_test_from_eigenvalues(&eig.eigenvalues, m.t_eff, case, level))
}

/// Statistics and rank selection from precomputed eigenvalues.
pub fn rank_test_from_eigenvalues(
    eigenvalues: &[f64],
    t_eff: usize,
    case: DeterministicCase,
    level: SignificanceLevel,
) -> RankTestResult {
    let p = eigenvalues.len();
    let t = t_eff as f64;
    let maxeig_stats: Vec<f64> = eigenvalues.iter().map(|l| -t * (1.0 - l).ln()).collect();
    let mut trace_stats = vec![0.0; p];
    let mut acc = 0.0;
    for r in (0..p).rev() {
        acc += maxeig_stats[r];
        trace_stats[r] = acc;
    }
    let cv = |stat| -> Vec<f64> {
        (0..p)
            .map(|r| critical_value(case, stat, level, p - r).unwrap_or(f64::NAN))
            .collect()
    };
    let trace_critical = cv(RankStatistic::Trace);
    let maxeig_critical = cv(RankStatistic::MaxEigenvalue);
    let selected_rank = (0..p).find(|&r| trace_stats[r] < trace_critical[r]).unwrap_or(p);
    RankTestResult {
        eigenvalues: eigenvalues.to_vec(),
        trace_stats,
        maxeig_stats,
        trace_critical,
        maxeig_critical,
        level,
        selected_rank,
        deterministic_case: case,
        t_eff,
    }
}

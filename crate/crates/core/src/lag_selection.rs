//! Levels VAR(k) fitting and information-criterion lag selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{cholesky_factor, ols_fit, Matrix, NumericsError, OlsFit};
use crate::panel::{LogLevelPanel, PanelError, Variable};

/// Default upper bound on candidate lags for short annual samples.
pub const DEFAULT_K_MAX: usize = 4;

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LagError {
    #[error("insufficient sample: {nobs} usable rows for {params} parameters per equation at k = {k}")]
    InsufficientSample { k: usize, nobs: usize, params: usize },
    #[error("lag length must be at least 1")]
    ZeroLag,
    #[error("at k = {k}: {source}")]
    AtLag {
        k: usize,
        #[source]
        source: Box<LagError>,
    },
    #[error("residual covariance is singular")]
    SingularCovariance,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// Per-equation OLS of `z_t` on `(1, z_{t−1}, …, z_{t−k})`.
#[derive(Debug, Clone)]
pub struct VarFit {
    pub k: usize,
    pub ols: OlsFit,
    /// `T⁻¹·EᵀE`, comparable across candidate lags on a common sample.
    pub sigma_ml: Matrix,
    pub nobs: usize,
    pub n_params: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationCriteria {
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub hqic: f64,
}

/// Gaussian log-likelihood and per-observation criteria:
/// `AIC = (−2ℓ + 2n)/T`, `BIC = (−2ℓ + n·ln T)/T`, `HQIC = (−2ℓ + 2n·ln ln T)/T`
/// with `ℓ = −T/2·(p·ln 2π + ln det Σ + p)`.
pub fn information_criteria(sigma: &Matrix, t: usize, n_params: usize) -> Result<InformationCriteria, LagError> {
    let p = sigma.rows() as f64;
    let tf = t as f64;
    let ln_det = log_det_spd(sigma)?;
    let loglik = -0.5 * tf * (p * (2.0 * std::f64::consts::PI).ln() + ln_det + p);
    let n = n_params as f64;
    Ok(InformationCriteria {
        loglik,
        aic: (-2.0 * loglik + 2.0 * n) / tf,
        bic: (-2.0 * loglik + n * tf.ln()) / tf,
        hqic: (-2.0 * loglik + 2.0 * n * tf.ln().ln()) / tf,
    })
}

pub(crate) fn log_det_spd(sigma: &Matrix) -> Result<f64, LagError> {
    let l = cholesky_factor(sigma).map_err(|_| LagError::SingularCovariance)?;
    Ok(2.0 * l.diag().iter().map(|d| d.ln()).sum::<f64>())
}

/// Fits a VAR(k) in levels on rows `k..T`.
pub fn fit_var(panel: &LogLevelPanel, vars: &[Variable], k: usize) -> Result<VarFit, LagError> {
    let data = panel.matrix(vars)?;
    fit_var_on(&data, k, k)
}

/// Fits a VAR(k) whose first dependent row is `start` (≥ k), so that fits
/// for different k can share one estimation sample.
pub fn fit_var_on(data: &Matrix, k: usize, start: usize) -> Result<VarFit, LagError> {
    if k == 0 {
        return Err(LagError::ZeroLag);
    }
    assert!(start >= k, "sample start must leave room for k lags");
    let p = data.cols();
    let nobs = data.rows().saturating_sub(start);
    let per_eq = p * k + 1;
    if nobs <= per_eq + 2 {
        return Err(LagError::InsufficientSample { k, nobs, params: per_eq });
    }
    let x = Matrix::from_fn(nobs, per_eq, |r, c| {
        let t = start + r;
        if c == 0 {
            1.0
        } else {
            let lag = (c - 1) / p + 1;
            data[(t - lag, (c - 1) % p)]
        }
    });
    let y = data.select_rows(start..data.rows());
    let ols = ols_fit(&x, &y)?;
    let sigma_ml = ols.ml_covariance();
    Ok(VarFit {
        k,
        ols,
        sigma_ml,
        nobs,
        n_params: p * per_eq,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagCandidate {
    pub k: usize,
    pub n_params: usize,
    #[serde(flatten)]
    pub criteria: InformationCriteria,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChosenLags {
    pub aic: usize,
    pub bic: usize,
    pub hqic: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
    Hqic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelectionTable {
    pub vars: Vec<Variable>,
    pub candidates: Vec<LagCandidate>,
    pub chosen: ChosenLags,
    /// Rows shared by every candidate (the first `k_max` are dropped).
    pub sample_size: usize,
    pub convention: String,
}

impl LagSelectionTable {
    pub fn chosen_by(&self, c: Criterion) -> usize {
        match c {
            Criterion::Aic => self.chosen.aic,
            Criterion::Bic => self.chosen.bic,
            Criterion::Hqic => self.chosen.hqic,
        }
    }
}

/// Evaluates k = 1..=k_max on the common sample and picks the minimizer of
/// each criterion, preferring the smaller k on ties.
pub fn select_lag(panel: &LogLevelPanel, vars: &[Variable], k_max: usize) -> Result<LagSelectionTable, LagError> {
    let data = panel.matrix(vars)?;
    select_lag_on(&data, vars, k_max)
}

pub fn select_lag_on(data: &Matrix, vars: &[Variable], k_max: usize) -> Result<LagSelectionTable, LagError> {
    if k_max == 0 {
        return Err(LagError::ZeroLag);
    }
    let candidates = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let fit = fit_var_on(data, k, k_max).map_err(|e| LagError::AtLag { k, source: Box::new(e) })?;
            let criteria = information_criteria(&fit.sigma_ml, fit.nobs, fit.n_params)
                .map_err(|e| LagError::AtLag { k, source: Box::new(e) })?;
            Ok(LagCandidate {
                k,
                n_params: fit.n_params,
                criteria,
            })
        })
        .collect::<Result<Vec<_>, LagError>>()?;

    for w in candidates.windows(2) {
        let (a, b) = (w[0].criteria.loglik, w[1].criteria.loglik);
        debug_assert!(
            b >= a - 1e-8 * a.abs().max(1.0),
            "nested log-likelihood decreased from k={} to k={}",
            w[0].k,
            w[1].k
        );
    }

    let argmin = |f: fn(&InformationCriteria) -> f64| {
        let mut best = &candidates[0];
        for c in &candidates[1..] {
            if f(&c.criteria) < f(&best.criteria) - TIE_TOL {
                best = c;
            }
        }
        best.k
    };
    let chosen = ChosenLags {
        aic: argmin(|c| c.aic),
        bic: argmin(|c| c.bic),
        hqic: argmin(|c| c.hqic),
    };
    Ok(LagSelectionTable {
        vars: vars.to_vec(),
        candidates,
        chosen,
        sample_size: data.rows() - k_max,
        convention: "per-observation: (-2*loglik + penalty) / T on a common sample".into(),
    })
}

//! Augmented Dickey–Fuller unit-root testing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{ols_fit, Matrix, NumericsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdfDeterministic {
    Constant,
    ConstantTrend,
}

/// Left-tail critical values at the three conventional levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfCriticalValues {
    pub pct1: f64,
    pub pct5: f64,
    pub pct10: f64,
    /// Tabulated sample size the values were taken from (`None` = asymptotic).
    pub table_t: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-ratio on the lagged level.
    pub statistic: f64,
    pub lags: usize,
    pub deterministic: AdfDeterministic,
    pub critical_values: AdfCriticalValues,
    pub reject_unit_root_at_5pct: bool,
    /// Rows in the test regression.
    pub nobs: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdfError {
    #[error("series of length {len} is too short for {lags} lags (need at least lags + 10)")]
    TooShort { len: usize, lags: usize },
    #[error("sample size {0} is below the 12-observation floor")]
    SampleBelowFloor(usize),
    #[error("series is constant")]
    ConstantSeries,
    #[error("test regression fits exactly; the t-ratio is undefined")]
    ExactFit,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

// Dickey–Fuller tau critical values (Fuller 1976 tables, as reproduced in
// Hamilton's Table B.6), rows T = 25, 50, 100, 250, 500, ∞; columns 1%, 5%, 10%.
const TABLE_T: [Option<usize>; 6] = [Some(25), Some(50), Some(100), Some(250), Some(500), None];
const TAU_CONSTANT: [[f64; 3]; 6] = [
    [-3.75, -3.00, -2.63],
    [-3.58, -2.93, -2.60],
    [-3.51, -2.89, -2.58],
    [-3.46, -2.88, -2.57],
    [-3.44, -2.87, -2.57],
    [-3.43, -2.86, -2.57],
];
const TAU_TREND: [[f64; 3]; 6] = [
    [-4.38, -3.60, -3.24],
    [-4.15, -3.50, -3.18],
    [-4.04, -3.45, -3.15],
    [-3.99, -3.43, -3.13],
    [-3.98, -3.42, -3.13],
    [-3.96, -3.41, -3.12],
];

/// Critical values for the tabulated sample size nearest to `nobs`, with
/// nearness measured on the `1/T` scale the response surfaces use.
pub fn adf_critical_values(deterministic: AdfDeterministic, nobs: usize) -> AdfCriticalValues {
    let inv = 1.0 / nobs.max(1) as f64;
    let row = TABLE_T
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let da = (inv - a.map_or(0.0, |t| 1.0 / t as f64)).abs();
            let db = (inv - b.map_or(0.0, |t| 1.0 / t as f64)).abs();
            da.total_cmp(&db)
        })
        .map(|(i, _)| i)
        .unwrap();
    let table = match deterministic {
        AdfDeterministic::Constant => &TAU_CONSTANT,
        AdfDeterministic::ConstantTrend => &TAU_TREND,
    };
    AdfCriticalValues {
        pct1: table[row][0],
        pct5: table[row][1],
        pct10: table[row][2],
        table_t: TABLE_T[row],
    }
}

/// Schwert's rule `floor(12·(T/100)^{1/4})`, capped at `T − 10` so that the
/// test regression stays estimable.
pub fn default_adf_lags(t: usize) -> Result<usize, AdfError> {
    if t < 12 {
        return Err(AdfError::SampleBelowFloor(t));
    }
    let schwert = (12.0 * (t as f64 / 100.0).powf(0.25)).floor() as usize;
    Ok(schwert.min(t - 10))
}

/// Fits `Δy_t = c [+ b·t] + γ·y_{t−1} + Σ φ_i·Δy_{t−i} + ε_t` and returns
/// the t-ratio of `γ` against the Dickey–Fuller table.
pub fn adf_test(y: &[f64], lags: usize, deterministic: AdfDeterministic) -> Result<AdfResult, AdfError> {
    let n = y.len();
    if n < lags + 10 {
        return Err(AdfError::TooShort { len: n, lags });
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    if y.iter().all(|v| (v - mean).abs() == 0.0) {
        return Err(AdfError::ConstantSeries);
    }

    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    // Row t (in y indexing) runs from lags + 1 to n − 1.
    let rows: Vec<usize> = (lags + 1..n).collect();
    let nobs = rows.len();
    let trend = deterministic == AdfDeterministic::ConstantTrend;
    let level_col = if trend { 2 } else { 1 };
    let k = level_col + 1 + lags;

    let x = Matrix::from_fn(nobs, k, |r, c| {
        let t = rows[r];
        match c {
            0 => 1.0,
            1 if trend => t as f64,
            c if c == level_col => y[t - 1],
            c => dy[t - 1 - (c - level_col)],
        }
    });
    let target = Matrix::from_fn(nobs, 1, |r, _| dy[rows[r] - 1]);

    let fit = ols_fit(&x, &target)?;
    let se = fit.standard_errors()[(level_col, 0)];
    let gamma = fit.coefficients[(level_col, 0)];
    let scale = target.max_abs().max(f64::MIN_POSITIVE);
    if fit.residuals.max_abs() <= 1e-12 * scale || se == 0.0 {
        return Err(AdfError::ExactFit);
    }
    let statistic = gamma / se;
    let critical_values = adf_critical_values(deterministic, nobs);
    Ok(AdfResult {
        statistic,
        lags,
        deterministic,
        critical_values,
        reject_unit_root_at_5pct: statistic < critical_values.pct5,
        nobs,
    })
}

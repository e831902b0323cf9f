//! Specification search over regressor subsets and the sign/significance
//! aggregation across admissible models.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::johansen::{concentrate, rank_test, DeterministicCase, RankTestResult, SignificanceLevel};
use crate::panel::{AgencyId, LogLevelPanel, Variable};
use crate::vecm::{estimate_vecm, normalize_cointegrating_equation, CointegratingEquation, VecmModel, Z_CRITICAL_5PCT};

/// Default smallest subset: sb plus three regressors.
pub const DEFAULT_MIN_SIZE: usize = 4;

pub const DEFAULT_K_CANDIDATES: [usize; 2] = [1, 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("min_size must be at least 2 (sb plus one regressor), got {0}")]
    InvalidMinSize(usize),
    #[error("variable set must include sb")]
    MissingDependent,
    #[error("no admissible specification: none of {} candidates selected rank 1", failures.len())]
    NoAdmissible { failures: Vec<SpecFailure> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecCriteria {
    pub chi2: f64,
    pub chi2_dof: usize,
    pub aic: f64,
    pub bic: f64,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFit {
    /// 1-based position among admissible specs.
    pub index: usize,
    pub vars: Vec<Variable>,
    pub k: usize,
    pub rank_test: RankTestResult,
    pub model: VecmModel,
    pub equation: CointegratingEquation,
    pub criteria: SpecCriteria,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFailure {
    pub vars: Vec<Variable>,
    pub k: usize,
    pub selected_rank: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "none")]
    None,
}

impl Sign {
    fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::None
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
            Sign::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub variable: Variable,
    pub sign: Sign,
    pub significant_at_5pct: bool,
    /// 1-based index of the spec whose coefficient has the largest |z|.
    pub source_spec: Option<usize>,
    pub coefficient: Option<f64>,
    pub z: Option<f64>,
    /// Admissible specs disagree on the sign.
    pub conflict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecificationReport {
    pub agency_id: AgencyId,
    pub case: DeterministicCase,
    pub specs: Vec<SpecFit>,
    pub failures: Vec<SpecFailure>,
    pub correlation_row: Vec<CorrelationEntry>,
}

fn canonical(vars: &mut [Variable]) {
    vars.sort_by_key(|v| v.index());
}

/// Every subset containing sb with at least `min_size` members, largest
/// first and lexicographic (in canonical variable order) within a size.
pub fn enumerate_specifications(vars: &[Variable], min_size: usize) -> Result<Vec<Vec<Variable>>, SpecError> {
    if min_size < 2 {
        return Err(SpecError::InvalidMinSize(min_size));
    }
    if !vars.contains(&Variable::Sb) {
        return Err(SpecError::MissingDependent);
    }
    let mut others: Vec<Variable> = vars.iter().copied().filter(|v| *v != Variable::Sb).collect();
    canonical(&mut others);
    others.dedup();
    let n = others.len();
    let mut out: Vec<Vec<Variable>> = (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize + 1 >= min_size)
        .map(|mask| {
            let mut s = vec![Variable::Sb];
            s.extend((0..n).filter(|i| mask & (1 << i) != 0).map(|i| others[i]));
            s
        })
        .collect();
    out.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then_with(|| a.iter().map(|v| v.index()).cmp(b.iter().map(|v| v.index())))
    });
    Ok(out)
}

enum Outcome {
    Fit(Box<(Vec<Variable>, usize, RankTestResult, VecmModel, CointegratingEquation)>),
    Failed(SpecFailure),
}

fn fit_one(panel: &LogLevelPanel, vars: &[Variable], k: usize, case: DeterministicCase) -> Outcome {
    let fail = |selected_rank, reason: String| {
        Outcome::Failed(SpecFailure {
            vars: vars.to_vec(),
            k,
            selected_rank,
            reason,
        })
    };
    let rt = match concentrate(panel, vars, k, case).and_then(|m| rank_test(&m, case, SignificanceLevel::Pct5)) {
        Ok(rt) => rt,
        Err(e) => return fail(None, format!("rank test: {e}")),
    };
    if rt.selected_rank != 1 {
        return fail(Some(rt.selected_rank), format!("selected rank {} (need exactly 1)", rt.selected_rank));
    }
    let model = match estimate_vecm(panel, vars, k, 1, case) {
        Ok(m) => m,
        Err(e) => return fail(Some(1), format!("estimation: {e}")),
    };
    match normalize_cointegrating_equation(&model) {
        Ok(eq) => Outcome::Fit(Box::new((vars.to_vec(), k, rt, model, eq))),
        Err(e) => fail(Some(1), format!("normalization: {e}")),
    }
}

/// Fits every subset × lag; keeps rank-1 outcomes and records the rest
/// with reasons. The correlation row is left empty.
pub fn fit_specifications(
    panel: &LogLevelPanel,
    subsets: &[Vec<Variable>],
    k_candidates: &[usize],
    case: DeterministicCase,
) -> Result<SpecificationReport, SpecError> {
    let jobs: Vec<(&Vec<Variable>, usize)> =
        subsets.iter().flat_map(|s| k_candidates.iter().map(move |&k| (s, k))).collect();
    let outcomes: Vec<Outcome> = jobs.par_iter().map(|(vars, k)| fit_one(panel, vars, *k, case)).collect();

    let mut specs = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Fit(b) => {
                let (vars, k, rank_test, model, equation) = *b;
                specs.push(SpecFit {
                    index: specs.len() + 1,
                    vars,
                    k,
                    criteria: SpecCriteria {
                        chi2: model.wald_chi2,
                        chi2_dof: model.wald_dof,
                        aic: model.aic,
                        bic: model.bic,
                        loglik: model.loglik,
                    },
                    rank_test,
                    model,
                    equation,
                });
            }
            Outcome::Failed(f) => failures.push(f),
        }
    }
    if specs.is_empty() {
        return Err(SpecError::NoAdmissible { failures });
    }
    Ok(SpecificationReport {
        agency_id: panel.agency_id.clone(),
        case,
        specs,
        failures,
        correlation_row: Vec::new(),
    })
}

pub fn build_correlation_table(report: &SpecificationReport) -> Vec<CorrelationEntry> {
    let eqs: Vec<(usize, &CointegratingEquation)> = report.specs.iter().map(|s| (s.index, &s.equation)).collect();
    correlation_from_equations(&eqs)
}

/// Per regressor: sign and significance from the coefficient with the
/// largest |z| (earlier spec on ties); conflict when signs disagree.
pub fn correlation_from_equations(eqs: &[(usize, &CointegratingEquation)]) -> Vec<CorrelationEntry> {
    Variable::REGRESSORS
        .iter()
        .map(|&v| {
            let mut best: Option<(usize, f64, f64)> = None;
            let mut signs = Vec::new();
            for &(idx, eq) in eqs {
                if !eq.included.contains(&v) {
                    continue;
                }
                let coef = eq.coefficients[&v];
                signs.push(Sign::of(coef));
                if let Some(z) = eq.z_scores[&v] {
                    if best.map_or(true, |(_, _, bz)| z.abs() > bz.abs()) {
                        best = Some((idx, coef, z));
                    }
                }
            }
            let conflict = signs.contains(&Sign::Positive) && signs.contains(&Sign::Negative);
            match best {
                Some((idx, coef, z)) => CorrelationEntry {
                    variable: v,
                    sign: Sign::of(coef),
                    significant_at_5pct: z.abs() >= Z_CRITICAL_5PCT,
                    source_spec: Some(idx),
                    coefficient: Some(coef),
                    z: Some(z),
                    conflict,
                },
                None => CorrelationEntry {
                    variable: v,
                    sign: Sign::None,
                    significant_at_5pct: false,
                    source_spec: None,
                    coefficient: None,
                    z: None,
                    conflict,
                },
            }
        })
        .collect()
}

/// Full search: enumerate, fit, aggregate.
pub fn search(
    panel: &LogLevelPanel,
    vars: &[Variable],
    min_size: usize,
    k_candidates: &[usize],
    case: DeterministicCase,
) -> Result<SpecificationReport, SpecError> {
    let subsets = enumerate_specifications(vars, min_size)?;
    let mut report = fit_specifications(panel, &subsets, k_candidates, case)?;
    report.correlation_row = build_correlation_table(&report);
    Ok(report)
}

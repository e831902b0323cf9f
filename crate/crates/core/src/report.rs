//! Plain-text tables: per-specification model tables, the cross-agency
//! correlation matrix and the mission cost-sharing table. Each renderer
//! has a reader that recovers the printed cells.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mission::MissionPlan;
use crate::panel::{AgencyId, Variable};
use crate::spec_search::{CorrelationEntry, Sign, SpecFit};
use crate::vecm::{CointegratingEquation, VecmModel};

/// Structural zero / missing cell.
pub const DASH: &str = "—";

const LABEL_W: usize = 10;
const NUM_W: usize = 11;
const FLAG_W: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("table line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn perr(line: usize, message: impl Into<String>) -> ReportError {
    ReportError::Parse {
        line: line + 1,
        message: message.into(),
    }
}

fn cell(x: Option<f64>, decimals: usize) -> String {
    x.map_or_else(|| DASH.to_string(), |v| format!("{v:.decimals$}"))
}

fn parse_cell(s: &str, line: usize) -> Result<Option<f64>, ReportError> {
    if s == DASH {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| perr(line, format!("bad number {s:?}")))
    }
}

fn label(v: Variable) -> String {
    format!("ln {}", v.name().to_uppercase())
}

/// Coefficient table for one admissible model. Coefficients print to one
/// decimal, standard errors and z to two.
pub fn render_model_table(agency: &AgencyId, spec_index: usize, model: &VecmModel, eq: &CointegratingEquation) -> String {
    let mut out = String::new();
    out.push_str(&format!("{agency} Model Specification {spec_index}, χ² = {:.1}\n", model.wald_chi2));
    out.push_str(&format!(
        "dependent ln SB, k = {}, case = {}, T = {}\n",
        model.k,
        model.case.short_name(),
        model.t_eff
    ));
    out.push_str(&format!(
        "{:<LABEL_W$}{:>NUM_W$}{:>NUM_W$}{:>NUM_W$}{:>FLAG_W$}\n",
        "variable", "estimate", "std. err.", "z", "5%"
    ));
    let row = |name: &str, est: Option<f64>, se: Option<f64>, z: Option<f64>| {
        let flag = z.map_or(DASH, |z| if z.abs() >= crate::vecm::Z_CRITICAL_5PCT { "yes" } else { "no" });
        format!(
            "{name:<LABEL_W$}{:>NUM_W$}{:>NUM_W$}{:>NUM_W$}{flag:>FLAG_W$}\n",
            cell(est, 1),
            cell(se, 2),
            cell(z, 2)
        )
    };
    for v in Variable::REGRESSORS {
        if eq.included.contains(&v) {
            out.push_str(&row(&label(v), Some(eq.coefficients[&v]), eq.std_errors[&v], eq.z_scores[&v]));
        } else {
            out.push_str(&row(&label(v), None, None, None));
        }
    }
    let c_se = eq.intercept_z.filter(|z| *z != 0.0).map(|z| (eq.intercept / z).abs());
    out.push_str(&row("C", Some(eq.intercept), c_se, eq.intercept_z));
    out.push_str(&format!(
        "loglik = {:.3}, AIC = {:.3}, BIC = {:.3}\n",
        model.loglik, model.aic, model.bic
    ));
    out
}

pub fn render_spec(agency: &AgencyId, spec: &SpecFit) -> String {
    render_model_table(agency, spec.index, &spec.model, &spec.equation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedRow {
    pub label: String,
    pub estimate: Option<f64>,
    pub std_err: Option<f64>,
    pub z: Option<f64>,
    pub significant: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedModelTable {
    pub agency: String,
    pub spec_index: usize,
    pub chi2: f64,
    pub rows: Vec<ParsedRow>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
}

fn split_fixed(line: &str, widths: &[usize]) -> Vec<String> {
    let chars: Vec<char> = line.chars().collect();
    let mut at = 0;
    widths
        .iter()
        .map(|w| {
            let end = (at + w).min(chars.len());
            let s: String = chars[at.min(end)..end].iter().collect();
            at = end;
            s.trim().to_string()
        })
        .collect()
}

fn after<'a>(s: &'a str, key: &str, line: usize) -> Result<&'a str, ReportError> {
    s.split_once(key).map(|(_, r)| r).ok_or_else(|| perr(line, format!("missing {key:?}")))
}

fn num_until(s: &str, stop: char, line: usize) -> Result<f64, ReportError> {
    let t = s.split(stop).next().unwrap_or("").trim();
    t.parse().map_err(|_| perr(line, format!("bad number {t:?}")))
}

/// Reads back a table produced by [`render_model_table`].
pub fn parse_model_table(text: &str) -> Result<ParsedModelTable, ReportError> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 5 {
        return Err(perr(0, "table too short"));
    }
    let (head, chi) = lines[0].split_once(", χ² = ").ok_or_else(|| perr(0, "missing χ²"))?;
    let (agency, idx) = head
        .split_once(" Model Specification ")
        .ok_or_else(|| perr(0, "missing spec caption"))?;
    let spec_index = idx.trim().parse().map_err(|_| perr(0, "bad spec index"))?;
    let chi2 = chi.trim().parse().map_err(|_| perr(0, "bad χ²"))?;

    let widths = [LABEL_W, NUM_W, NUM_W, NUM_W, FLAG_W];
    let last = lines.len() - 1;
    let rows = lines[3..last]
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let n = i + 3;
            let f = split_fixed(l, &widths);
            let significant = match f[4].as_str() {
                "yes" => Some(true),
                "no" => Some(false),
                s if s == DASH => None,
                s => return Err(perr(n, format!("bad flag {s:?}"))),
            };
            Ok(ParsedRow {
                label: f[0].clone(),
                estimate: parse_cell(&f[1], n)?,
                std_err: parse_cell(&f[2], n)?,
                z: parse_cell(&f[3], n)?,
                significant,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let foot = lines[last];
    Ok(ParsedModelTable {
        agency: agency.to_string(),
        spec_index,
        chi2,
        rows,
        loglik: num_until(after(foot, "loglik = ", last)?, ',', last)?,
        aic: num_until(after(foot, "AIC = ", last)?, ',', last)?,
        bic: num_until(after(foot, "BIC = ", last)?, ',', last)?,
    })
}

/// One correlation cell: `+`/`-` with `*` when insignificant and `~` when
/// specifications conflict; the dash when the variable never appears.
pub fn correlation_cell(e: &CorrelationEntry) -> String {
    match e.sign {
        Sign::None => DASH.to_string(),
        s => {
            let mut c = s.symbol().to_string();
            if !e.significant_at_5pct {
                c.push('*');
            }
            if e.conflict {
                c.push('~');
            }
            c
        }
    }
}

const AGENCY_W: usize = 12;
const CORR_W: usize = 7;

pub fn render_correlation_table(rows: &[(AgencyId, Vec<CorrelationEntry>)]) -> String {
    let mut out = format!("{:<AGENCY_W$}", "agency");
    for v in Variable::REGRESSORS {
        out.push_str(&format!("{:>CORR_W$}", v.name().to_uppercase()));
    }
    out.push('\n');
    for (agency, entries) in rows {
        out.push_str(&format!("{:<AGENCY_W$}", agency.as_str()));
        for v in Variable::REGRESSORS {
            let c = entries
                .iter()
                .find(|e| e.variable == v)
                .map_or_else(|| DASH.to_string(), correlation_cell);
            out.push_str(&format!("{c:>CORR_W$}"));
        }
        out.push('\n');
    }
    out.push_str("* statistically insignificant at 5%\n");
    out.push_str("~ specifications disagree; sign of the larger |z| shown\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedCorrelation {
    pub sign: Sign,
    pub significant_at_5pct: bool,
    pub conflict: bool,
}

/// Reads back [`render_correlation_table`]: per agency, cells in
/// regressor order.
pub fn parse_correlation_table(text: &str) -> Result<Vec<(String, Vec<ParsedCorrelation>)>, ReportError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.starts_with("* ") || line.starts_with("~ ") {
            break;
        }
        let mut widths = vec![AGENCY_W];
        widths.extend([CORR_W; 5]);
        let f = split_fixed(line, &widths);
        let cells = f[1..]
            .iter()
            .map(|c| {
                if c == DASH {
                    return Ok(ParsedCorrelation {
                        sign: Sign::None,
                        significant_at_5pct: false,
                        conflict: false,
                    });
                }
                let sign = match c.chars().next() {
                    Some('+') => Sign::Positive,
                    Some('-') => Sign::Negative,
                    _ => return Err(perr(n, format!("bad cell {c:?}"))),
                };
                Ok(ParsedCorrelation {
                    sign,
                    significant_at_5pct: !c.contains('*'),
                    conflict: c.contains('~'),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push((f[0].clone(), cells));
    }
    Ok(out)
}

const MISSION_WIDTHS: [usize; 5] = [12, 13, 10, 9, 19];

/// One agency per row: budget, launches, modules, contribution.
pub fn render_mission_table(plan: &MissionPlan) -> String {
    let [a, b, l, m, c] = MISSION_WIDTHS;
    let mut out = format!(
        "{:<a$}{:>b$}{:>l$}{:>m$}{:>c$}\n",
        "agency", "budget (B$)", "launches", "modules", "contribution (B$)"
    );
    for g in &plan.agencies {
        out.push_str(&format!(
            "{:<a$}{:>b$.2}{:>l$}{:>m$}{:>c$.2}\n",
            g.agency_id.as_str(),
            g.annual_budget_busd,
            g.launches,
            g.modules,
            g.contribution_busd
        ));
    }
    let budget: f64 = plan.agencies.iter().map(|g| g.annual_budget_busd).sum();
    out.push_str(&format!(
        "{:<a$}{:>b$.2}{:>l$}{:>m$}{:>c$.2}\n",
        "total", budget, plan.totals.launches, plan.totals.modules, plan.totals.cost_busd
    ));
    out.push_str(&mission_headline(plan));
    out.push('\n');
    out
}

/// `pool 34.3 B$, cost 25.0 B$, margin 27.1%`, flagged when infeasible.
pub fn mission_headline(plan: &MissionPlan) -> String {
    let t = &plan.totals;
    let mut s = format!(
        "pool {:.1} B$, cost {:.1} B$, margin {:.1}%",
        t.pool_busd,
        t.cost_busd,
        100.0 * t.margin_fraction
    );
    if plan.infeasible {
        s.push_str(" (INFEASIBLE: pool below cost)");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedMissionRow {
    pub agency: String,
    pub budget_busd: f64,
    pub launches: u32,
    pub modules: u32,
    pub contribution_busd: f64,
}

/// Agency rows plus the total row (last) of [`render_mission_table`].
pub fn parse_mission_table(text: &str) -> Result<Vec<ParsedMissionRow>, ReportError> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 3 {
        return Err(perr(0, "table too short"));
    }
    lines[1..lines.len() - 1]
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let n = i + 1;
            let f = split_fixed(l, &MISSION_WIDTHS);
            let num = |s: &str| s.parse::<f64>().map_err(|_| perr(n, format!("bad number {s:?}")));
            let int = |s: &str| s.parse::<u32>().map_err(|_| perr(n, format!("bad count {s:?}")));
            Ok(ParsedMissionRow {
                agency: f[0].clone(),
                budget_busd: num(&f[1])?,
                launches: int(&f[2])?,
                modules: int(&f[3])?,
                contribution_busd: num(&f[4])?,
            })
        })
        .collect()
}

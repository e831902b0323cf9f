use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use vela_core::johansen::{concentrate, rank_test, DeterministicCase, RankTestResult, SignificanceLevel};
use vela_core::lag_selection::{select_lag, LagError, LagSelectionTable};
use vela_core::mission::{allocate, MissionConfig};
use vela_core::panel::{interpolate_missing, parse_panel, to_log_levels, LogLevelPanel, MacroPanel, Variable};
use vela_core::report::{
    render_correlation_table, render_mission_table, render_model_table, render_spec, DASH,
};
use vela_core::spec_search::{search, SpecError, SpecificationReport};
use vela_core::synthetic::{monte_carlo_critical_values, run_recovery_study, McCriticalValues, RecoverySummary, SyntheticSpec, GENERATOR_ID};
use vela_core::unit_root::{adf_test, default_adf_lags, AdfDeterministic, AdfResult};
use vela_core::vecm::{estimate_vecm, normalize_cointegrating_equation, stability_check, StabilityReport, VecmModel};

use crate::output::{read_file, CliError, RunManifest};
use crate::{AdfArgs, LagArgs, McArgs, MissionArgs, ModelArgs, PanelArgs, SearchArgs, VecmArgs};

pub fn read_text(path: &Path, manifest: &mut RunManifest) -> Result<String, CliError> {
    let bytes = read_file(path)?;
    manifest.input(path, &bytes);
    String::from_utf8(bytes).map_err(|_| CliError::validation(format!("{} is not UTF-8", path.display())))
}

/// ingest → interpolate → log for one agency.
pub fn prepare(text: &str, agency: &str) -> Result<(MacroPanel, MacroPanel, LogLevelPanel), CliError> {
    let raw = parse_panel(text, agency).map_err(|e| CliError::at("ingest", e))?;
    let repaired = interpolate_missing(&raw).map_err(|e| CliError::at("interpolate", e))?;
    let log = to_log_levels(&repaired).map_err(|e| CliError::at("log", e))?;
    Ok((raw, repaired, log))
}

fn load(args: &PanelArgs, manifest: &mut RunManifest) -> Result<(MacroPanel, MacroPanel, LogLevelPanel), CliError> {
    let text = read_text(&args.input, manifest)?;
    prepare(&text, &args.agency)
}

#[derive(Serialize)]
struct IngestResult<'a> {
    agency: String,
    first_year: i32,
    last_year: i32,
    filled_cells: Vec<(Variable, i32)>,
    panel: &'a MacroPanel,
}

pub fn ingest(args: &PanelArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("ingest", args)?;
    let (raw, repaired, _) = load(args, &mut manifest)?;
    let years = repaired.years();
    let result = IngestResult {
        agency: repaired.agency_id.to_string(),
        first_year: years[0],
        last_year: years[years.len() - 1],
        filled_cells: raw.missing_cells(),
        panel: &repaired,
    };
    let mut text = format!(
        "{}: {}-{} ({} years), {} missing cells filled\n",
        result.agency,
        result.first_year,
        result.last_year,
        years.len(),
        result.filled_cells.len()
    );
    for (v, y) in &result.filled_cells {
        let _ = writeln!(text, "  filled ({v}, {y})");
    }
    let _ = write!(text, "{:>6}", "year");
    for v in Variable::ALL {
        let _ = write!(text, "{:>14}", v.name());
    }
    text.push('\n');
    for (i, y) in years.iter().enumerate() {
        let _ = write!(text, "{y:>6}");
        for v in Variable::ALL {
            let _ = write!(text, "{:>14.4}", repaired.series(v)[i].unwrap_or(f64::NAN));
        }
        text.push('\n');
    }
    args.out.output().emit("ingest", &manifest, &result, &text)
}

#[derive(Debug, Clone, Serialize)]
pub struct AdfRow {
    pub variable: Variable,
    pub transform: &'static str,
    pub result: Option<AdfResult>,
    pub error: Option<String>,
}

/// ADF on each log level and its first difference. Failures are recorded
/// per series rather than aborting; nothing downstream depends on them.
pub fn adf_rows(log: &LogLevelPanel, vars: &[Variable], lags: Option<usize>, det: AdfDeterministic) -> Vec<AdfRow> {
    let mut rows = Vec::new();
    for &v in vars {
        let Some(level) = log.series(v) else { continue };
        let diff: Vec<f64> = level.windows(2).map(|w| w[1] - w[0]).collect();
        for (transform, y) in [("level", level.to_vec()), ("difference", diff)] {
            let res = lags
                .map_or_else(|| default_adf_lags(y.len()), Ok)
                .and_then(|l| adf_test(&y, l, det));
            rows.push(AdfRow {
                variable: v,
                transform,
                error: res.as_ref().err().map(ToString::to_string),
                result: res.ok(),
            });
        }
    }
    rows
}

pub fn render_adf(rows: &[AdfRow]) -> String {
    let mut t = format!(
        "{:<8}{:<12}{:>6}{:>11}{:>10}{:>8}\n",
        "series", "transform", "lags", "tau", "5% cv", "I(0)"
    );
    for r in rows {
        match &r.result {
            Some(a) => {
                let _ = writeln!(
                    t,
                    "{:<8}{:<12}{:>6}{:>11.3}{:>10.2}{:>8}",
                    r.variable.name(),
                    r.transform,
                    a.lags,
                    a.statistic,
                    a.critical_values.pct5,
                    if a.reject_unit_root_at_5pct { "yes" } else { "no" }
                );
            }
            None => {
                let _ = writeln!(
                    t,
                    "{:<8}{:<12}  failed: {}",
                    r.variable.name(),
                    r.transform,
                    r.error.as_deref().unwrap_or("")
                );
            }
        }
    }
    t
}

pub fn adf(args: &AdfArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("adf", args)?;
    let (_, _, log) = load(&args.panel, &mut manifest)?;
    let det = if args.trend { AdfDeterministic::ConstantTrend } else { AdfDeterministic::Constant };
    let rows = adf_rows(&log, &args.vars.ordered(), args.lags, det);
    let text = render_adf(&rows);
    args.panel.out.output().emit("adf", &manifest, &rows, &text)
}

fn too_short(e: &LagError) -> bool {
    match e {
        LagError::InsufficientSample { .. } => true,
        LagError::AtLag { source, .. } => too_short(source),
        _ => false,
    }
}

/// Lag table at `kmax`, or at the largest smaller maximum the sample supports.
pub fn select_lag_feasible(
    log: &LogLevelPanel,
    vars: &[Variable],
    kmax: usize,
) -> Result<LagSelectionTable, LagError> {
    let mut last = LagError::ZeroLag;
    for k in (1..=kmax).rev() {
        match select_lag(log, vars, k) {
            Ok(t) => return Ok(t),
            Err(e) if too_short(&e) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

pub fn render_lag_table(t: &LagSelectionTable, requested_kmax: usize) -> String {
    let kmax = t.candidates.len();
    let mut s = format!("lag selection over k = 1..{kmax}, {} rows", t.sample_size);
    if kmax < requested_kmax {
        let _ = write!(s, " (kmax {requested_kmax} reduced to {kmax} by sample size)");
    }
    s.push('\n');
    let _ = writeln!(s, "{:>3}{:>8}{:>12}{:>12}{:>12}{:>12}", "k", "params", "loglik", "AIC", "BIC", "HQIC");
    for c in &t.candidates {
        let mark = |chosen: usize, x: f64| format!("{x:.3}{}", if chosen == c.k { "*" } else { " " });
        let _ = writeln!(
            s,
            "{:>3}{:>8}{:>12.3}{:>12}{:>12}{:>12}",
            c.k,
            c.n_params,
            c.criteria.loglik,
            mark(t.chosen.aic, c.criteria.aic),
            mark(t.chosen.bic, c.criteria.bic),
            mark(t.chosen.hqic, c.criteria.hqic)
        );
    }
    let _ = writeln!(s, "chosen: AIC {}, BIC {}, HQIC {}", t.chosen.aic, t.chosen.bic, t.chosen.hqic);
    s
}

pub fn lagselect(args: &LagArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("lagselect", args)?;
    let (_, _, log) = load(&args.panel, &mut manifest)?;
    let table = select_lag_feasible(&log, &args.vars.ordered(), args.kmax).map_err(|e| CliError::at("lagselect", e))?;
    let text = render_lag_table(&table, args.kmax);
    args.panel.out.output().emit("lagselect", &manifest, &table, &text)
}

pub fn render_rank_test(r: &RankTestResult) -> String {
    let mut s = format!(
        "Johansen rank test, case {}, T = {}, level {}\n",
        r.deterministic_case.short_name(),
        r.t_eff,
        match r.level {
            SignificanceLevel::Pct10 => "10%",
            SignificanceLevel::Pct5 => "5%",
            SignificanceLevel::Pct1 => "1%",
        }
    );
    let _ = writeln!(s, "{:>6}{:>12}{:>12}{:>10}{:>12}{:>10}", "r<=", "eigenvalue", "trace", "cv", "max-eig", "cv");
    let cv = |v: f64| if v.is_finite() { format!("{v:.2}") } else { DASH.to_string() };
    for i in 0..r.eigenvalues.len() {
        let _ = writeln!(
            s,
            "{:>6}{:>12.4}{:>12.2}{:>10}{:>12.2}{:>10}",
            i,
            r.eigenvalues[i],
            r.trace_stats[i],
            cv(r.trace_critical[i]),
            r.maxeig_stats[i],
            cv(r.maxeig_critical[i])
        );
    }
    let _ = writeln!(s, "selected rank: {}", r.selected_rank);
    s
}

pub fn vecrank(args: &ModelArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("vecrank", args)?;
    let (_, _, log) = load(&args.panel, &mut manifest)?;
    let case: DeterministicCase = args.case.into();
    let result = concentrate(&log, &args.vars.ordered(), args.k, case)
        .and_then(|m| rank_test(&m, case, SignificanceLevel::Pct5))
        .map_err(|e| CliError::at("vecrank", e))?;
    let text = render_rank_test(&result);
    args.panel.out.output().emit("vecrank", &manifest, &result, &text)
}

#[derive(Serialize)]
struct VecmResult {
    model: VecmModel,
    stability: StabilityReport,
}

fn render_matrix(name: &str, vars: &[Variable], m: &vela_core::numerics::Matrix) -> String {
    let mut s = format!("{name}\n");
    for i in 0..m.rows() {
        let label = vars.get(i).map_or("const", |v| v.name());
        let _ = write!(s, "  {label:<6}");
        for j in 0..m.cols() {
            let _ = write!(s, "{:>12.4}", m[(i, j)]);
        }
        s.push('\n');
    }
    s
}

pub fn vecm(args: &VecmArgs) -> Result<(), CliError> {
    let a = &args.model;
    let mut manifest = RunManifest::new("vecm", args)?;
    let (_, _, log) = load(&a.panel, &mut manifest)?;
    let vars = a.vars.ordered();
    let model = estimate_vecm(&log, &vars, a.k, args.rank, a.case.into()).map_err(|e| CliError::at("vecm", e))?;
    let stability = stability_check(&model).map_err(|e| CliError::at("stability", e))?;
    let mut text = if model.r == 1 {
        let eq = normalize_cointegrating_equation(&model).map_err(|e| CliError::at("vecm", e))?;
        render_model_table(&log.agency_id, 1, &model, &eq)
    } else {
        let mut t = format!("{} VECM, rank {}, k = {}\n", log.agency_id, model.r, model.k);
        t.push_str(&render_matrix("beta", &vars, &model.beta));
        t.push_str(&render_matrix("alpha", &vars, &model.alpha));
        t
    };
    let _ = writeln!(
        text,
        "stability: {} unit roots (expected {}), max other modulus {:.4}, stable = {}",
        stability.unit_root_count,
        stability.expected_unit_roots,
        stability.moduli.iter().skip(stability.unit_root_count).copied().fold(0.0, f64::max),
        stability.stable
    );
    a.panel.out.output().emit("vecm", &manifest, &VecmResult { model, stability }, &text)
}

pub fn render_search(report: &SpecificationReport) -> String {
    let mut s = String::new();
    for spec in &report.specs {
        s.push_str(&render_spec(&report.agency_id, spec));
        let vars: Vec<&str> = spec.vars.iter().map(|v| v.name()).collect();
        let _ = writeln!(s, "variables {}, k = {}\n", vars.join(" "), spec.k);
    }
    if !report.failures.is_empty() {
        let _ = writeln!(s, "excluded specifications:");
        for f in &report.failures {
            let vars: Vec<&str> = f.vars.iter().map(|v| v.name()).collect();
            let _ = writeln!(s, "  {{{}}} k = {}: {}", vars.join(", "), f.k, f.reason);
        }
        s.push('\n');
    }
    s.push_str(&render_correlation_table(&[(report.agency_id.clone(), report.correlation_row.clone())]));
    s
}

pub fn specsearch(args: &SearchArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("specsearch", args)?;
    let (_, _, log) = load(&args.panel, &mut manifest)?;
    let out = args.panel.out.output();
    match search(&log, &args.vars.ordered(), args.min_size, &args.k_candidates, args.case.into()) {
        Ok(report) => {
            let text = render_search(&report);
            out.emit("specsearch", &manifest, &report, &text)
        }
        Err(e) => {
            let partial = match &e {
                SpecError::NoAdmissible { failures } => failures.clone(),
                _ => Vec::new(),
            };
            Err(out.fail("specsearch", &manifest, &partial, "", CliError::at("specsearch", e)))
        }
    }
}

pub fn mission(args: &MissionArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("mission", args)?;
    let text = match &args.config {
        Some(path) => {
            let bytes = read_file(path)?;
            manifest.config_digest = Some(crate::output::sha256_hex(&bytes));
            String::from_utf8(bytes).map_err(|_| CliError::validation("config is not UTF-8"))?
        }
        None => {
            manifest.config_digest = Some(crate::output::sha256_hex(MissionConfig::sample_json().as_bytes()));
            MissionConfig::sample_json().to_string()
        }
    };
    let mut config = MissionConfig::from_json(&text).map_err(|e| CliError::at("config", e))?;
    if let Some(h) = args.horizon_years {
        config.horizon_years = h;
    }
    let plan = allocate(&config).map_err(|e| CliError::at("allocate", e))?;
    let table = render_mission_table(&plan);
    args.out.output().emit("mission_plan", &manifest, &plan, &table)
}

#[derive(Serialize)]
struct McResult {
    critical_values: Vec<McCriticalValues>,
    recovery: RecoverySummary,
}

pub fn mc_validate(args: &McArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("mc-validate", args)?;
    manifest.seeds = vec![args.seed];
    manifest.generator_id = Some(GENERATOR_ID);
    let mut critical_values = Vec::new();
    for case in [DeterministicCase::RestrictedConstant, DeterministicCase::UnrestrictedConstant] {
        for d in 1..=3 {
            let seed = args.seed.wrapping_add(d as u64 + 10 * u64::from(case == DeterministicCase::UnrestrictedConstant));
            critical_values.push(
                monte_carlo_critical_values(d, case, args.reps, args.t_len, seed)
                    .map_err(|e| CliError::at("critical-values", e))?,
            );
        }
    }
    let recovery = run_recovery_study(&SyntheticSpec::reference_r1(args.recovery_t_len, args.seed), args.recovery_reps)
        .map_err(|e| CliError::at("recovery", e))?;

    let mut text = format!(
        "simulated trace critical values ({} reps, T = {})\n{:<8}{:>5}{:>9}{:>9}{:>9}{:>9}{:>9}\n",
        args.reps, args.t_len, "case", "p-r", "90%", "95%", "99%", "table", "error"
    );
    for mc in &critical_values {
        let _ = writeln!(
            text,
            "{:<8}{:>5}{:>9.2}{:>9.2}{:>9.2}{:>9}{:>9}",
            mc.case.short_name(),
            mc.p_minus_r,
            mc.pct90,
            mc.pct95,
            mc.pct99,
            mc.table95.map_or_else(|| DASH.to_string(), |v| format!("{v:.2}")),
            mc.relative_error95().map_or_else(|| DASH.to_string(), |e| format!("{:.1}%", 100.0 * e))
        );
    }
    let _ = writeln!(
        text,
        "recovery (p = 3, r = 1, T = {}, {} reps): rank accuracy {:.3}, median beta angle {:.3} deg, alpha RMSE {:.4}",
        args.recovery_t_len, recovery.reps, recovery.rank_accuracy, recovery.beta_angle_median_deg, recovery.alpha_rmse
    );

    let out = args.out.output();
    if let Some(dir) = &out.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::validation(e.to_string()))?;
        let f = std::fs::File::create(dir.join("mc_recovery.csv")).map_err(|e| CliError::validation(e.to_string()))?;
        recovery.write_csv(f).map_err(|e| CliError::at("recovery", e))?;
    }
    out.emit("mc_validate", &manifest, &McResult { critical_values, recovery }, &text)
}

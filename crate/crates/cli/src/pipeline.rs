//! ingest → interpolate → log → ADF → lag selection → spec search →
//! correlation table, per agency.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use vela_core::johansen::DeterministicCase;
use vela_core::lag_selection::{LagSelectionTable, DEFAULT_K_MAX};
use vela_core::panel::{list_agencies, Variable};
use vela_core::report::render_correlation_table;
use vela_core::spec_search::{
    search, CorrelationEntry, SpecError, SpecFailure, SpecificationReport, DEFAULT_K_CANDIDATES, DEFAULT_MIN_SIZE,
};
use vela_core::unit_root::AdfDeterministic;

use crate::commands::{adf_rows, prepare, read_text, render_adf, render_lag_table, render_search, select_lag_feasible, AdfRow};
use crate::output::{read_file, sha256_hex, CliError, RunManifest};
use crate::PipelineArgs;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub case: DeterministicCase,
    pub kmax: usize,
    pub min_size: usize,
    pub k_candidates: Vec<usize>,
    pub adf_trend: bool,
    /// Schwert rule when absent.
    pub adf_lags: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            case: DeterministicCase::RestrictedConstant,
            kmax: DEFAULT_K_MAX,
            min_size: DEFAULT_MIN_SIZE,
            k_candidates: DEFAULT_K_CANDIDATES.to_vec(),
            adf_trend: false,
            adf_lags: None,
        }
    }
}

#[derive(Serialize, Default)]
struct AgencyRun {
    agency: String,
    filled_cells: Vec<(Variable, i32)>,
    adf: Vec<AdfRow>,
    lag_selection: Option<LagSelectionTable>,
    specsearch: Option<SpecificationReport>,
    excluded: Vec<SpecFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_stage: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct CorrelationRow {
    agency: String,
    entries: Vec<CorrelationEntry>,
}

#[derive(Serialize)]
struct PipelineResult {
    config: PipelineConfig,
    agencies: Vec<AgencyRun>,
    correlation_table: Vec<CorrelationRow>,
}

fn run_agency(text: &str, agency: &str, cfg: &PipelineConfig, run: &mut AgencyRun, out: &mut String) -> Result<(), CliError> {
    let (raw, _, log) = prepare(text, agency)?;
    run.agency = log.agency_id.to_string();
    run.filled_cells = raw.missing_cells();
    let _ = writeln!(out, "== {} ({} years) ==\n", run.agency, log.len());

    let det = if cfg.adf_trend { AdfDeterministic::ConstantTrend } else { AdfDeterministic::Constant };
    run.adf = adf_rows(&log, &Variable::ALL, cfg.adf_lags, det);
    out.push_str(&render_adf(&run.adf));
    out.push('\n');

    let lags = select_lag_feasible(&log, &Variable::ALL, cfg.kmax).map_err(|e| CliError::at("lagselect", e))?;
    out.push_str(&render_lag_table(&lags, cfg.kmax));
    out.push('\n');
    run.lag_selection = Some(lags);

    match search(&log, &Variable::ALL, cfg.min_size, &cfg.k_candidates, cfg.case) {
        Ok(report) => {
            out.push_str(&render_search(&report));
            out.push('\n');
            run.specsearch = Some(report);
            Ok(())
        }
        Err(e) => {
            if let SpecError::NoAdmissible { failures } = &e {
                run.excluded = failures.clone();
            }
            Err(CliError::at("specsearch", e))
        }
    }
}

pub fn run(args: &PipelineArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("pipeline", args)?;
    let mut cfg = match &args.config {
        Some(path) => {
            let bytes = read_file(path)?;
            manifest.config_digest = Some(sha256_hex(&bytes));
            serde_json::from_slice(&bytes)
                .map_err(|e| CliError::validation(format!("pipeline config {}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(c) = args.case {
        cfg.case = c.into();
    }
    if let Some(k) = args.kmax {
        cfg.kmax = k;
    }
    let out = args.out.output();
    let text = read_text(&args.input, &mut manifest)?;
    let agencies: Vec<String> = match &args.agency {
        Some(a) => vec![a.clone()],
        None => list_agencies(&text)
            .map_err(|e| CliError::at("ingest", e))?
            .iter()
            .map(|a| a.to_string())
            .collect(),
    };

    let mut report_text = String::new();
    let mut runs = Vec::new();
    let mut first_error: Option<CliError> = None;
    for agency in &agencies {
        let mut run = AgencyRun {
            agency: agency.clone(),
            ..AgencyRun::default()
        };
        if let Err(e) = run_agency(&text, agency, &cfg, &mut run, &mut report_text) {
            let _ = writeln!(report_text, "{agency}: {e}\n");
            run.failed_stage = e.stage;
            run.error = Some(e.message.clone());
            first_error.get_or_insert(e);
        }
        runs.push(run);
    }

    let table_rows: Vec<_> = runs
        .iter()
        .filter_map(|r| r.specsearch.as_ref())
        .map(|s| (s.agency_id.clone(), s.correlation_row.clone()))
        .collect();
    let correlation = render_correlation_table(&table_rows);
    report_text.push_str(&correlation);
    let result = PipelineResult {
        config: cfg,
        correlation_table: table_rows
            .into_iter()
            .map(|(a, entries)| CorrelationRow {
                agency: a.to_string(),
                entries,
            })
            .collect(),
        agencies: runs,
    };

    match first_error {
        None => {
            out.write("correlation.txt", &correlation)?;
            out.emit("pipeline", &manifest, &result, &report_text)
        }
        Some(e) => Err(out.fail("pipeline", &manifest, &result, &report_text, e)),
    }
}

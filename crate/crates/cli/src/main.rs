//! `vela`: space-budget econometrics and the Vela mission cost model.

mod commands;
mod output;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use vela_core::johansen::DeterministicCase;
use vela_core::panel::Variable;

use output::{Format, Output};

#[derive(Parser)]
#[command(name = "vela", version, about = "Cointegration analysis of national space budgets and Mars mission cost sharing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load one agency's panel and fill missing cells.
    Ingest(PanelArgs),
    /// Augmented Dickey-Fuller tests on log levels and first differences.
    Adf(AdfArgs),
    /// VAR lag-length criteria.
    Lagselect(LagArgs),
    /// Johansen trace and max-eigenvalue rank tests.
    Vecrank(ModelArgs),
    /// Estimate a VECM at a given lag and rank.
    Vecm(VecmArgs),
    /// Fit every regressor subset and tabulate signs.
    Specsearch(SearchArgs),
    /// Ingest through correlation table for one or all agencies.
    Pipeline(PipelineArgs),
    /// Budget pool, cost rollup and launch/module allocation.
    Mission(MissionArgs),
    /// Simulated critical values and a parameter recovery study.
    #[command(name = "mc-validate")]
    McValidate(McArgs),
}

#[derive(Args, Clone)]
pub struct OutArgs {
    /// Directory for JSON and text artifacts.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

impl OutArgs {
    fn output(&self) -> Output {
        Output {
            out_dir: self.out_dir.clone(),
            format: self.format,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseArg {
    /// Constant restricted to the cointegrating space.
    Rconst,
    /// Unrestricted constant (linear trends in levels).
    Uconst,
}

impl From<CaseArg> for DeterministicCase {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::Rconst => DeterministicCase::RestrictedConstant,
            CaseArg::Uconst => DeterministicCase::UnrestrictedConstant,
        }
    }
}

fn parse_variable(s: &str) -> Result<Variable, String> {
    s.parse::<Variable>().map_err(|e| e.to_string())
}

#[derive(Args, Clone, Serialize)]
pub struct PanelArgs {
    /// Panel CSV (agency,year,sb_usd_b,...).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    agency: String,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArgs,
}

#[derive(Args, Clone, Serialize)]
pub struct VarsArg {
    /// Comma-separated variables; sb is always included and placed first.
    #[arg(long, value_delimiter = ',', value_parser = parse_variable, default_value = "sb,gpc,rd,md,ed,sd")]
    vars: Vec<Variable>,
}

impl VarsArg {
    fn ordered(&self) -> Vec<Variable> {
        let mut v = self.vars.clone();
        v.push(Variable::Sb);
        v.sort_by_key(|x| x.index());
        v.dedup();
        v
    }
}

#[derive(Args, Clone, Serialize)]
pub struct AdfArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[command(flatten)]
    vars: VarsArg,
    /// Augmentation lags; Schwert rule when omitted.
    #[arg(long)]
    lags: Option<usize>,
    /// Include a linear trend in the test regression.
    #[arg(long)]
    trend: bool,
}

#[derive(Args, Clone, Serialize)]
pub struct LagArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[command(flatten)]
    vars: VarsArg,
    #[arg(long, default_value_t = vela_core::lag_selection::DEFAULT_K_MAX)]
    kmax: usize,
}

#[derive(Args, Clone, Serialize)]
pub struct ModelArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[command(flatten)]
    vars: VarsArg,
    /// Lag length of the levels VAR (k - 1 lagged differences).
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum, default_value = "rconst")]
    case: CaseArg,
}

#[derive(Args, Clone, Serialize)]
pub struct VecmArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    rank: usize,
}

#[derive(Args, Clone, Serialize)]
pub struct SearchArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[command(flatten)]
    vars: VarsArg,
    #[arg(long, default_value_t = vela_core::spec_search::DEFAULT_MIN_SIZE)]
    min_size: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    k_candidates: Vec<usize>,
    #[arg(long, value_enum, default_value = "rconst")]
    case: CaseArg,
}

#[derive(Args, Clone, Serialize)]
pub struct PipelineArgs {
    #[arg(long)]
    input: PathBuf,
    /// Single agency; every agency in the file when omitted.
    #[arg(long)]
    agency: Option<String>,
    /// Pipeline settings JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    case: Option<CaseArg>,
    #[arg(long)]
    kmax: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArgs,
}

#[derive(Args, Clone, Serialize)]
pub struct MissionArgs {
    /// MissionConfig JSON; the bundled sample when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    horizon_years: Option<u32>,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArgs,
}

#[derive(Args, Clone, Serialize)]
pub struct McArgs {
    #[arg(long, default_value_t = 20_211_014)]
    seed: u64,
    /// Replications for the critical-value simulation.
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long, default_value_t = 400)]
    t_len: usize,
    #[arg(long, default_value_t = 200)]
    recovery_reps: usize,
    #[arg(long, default_value_t = 500)]
    recovery_t_len: usize,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Adf(a) => commands::adf(a),
        Command::Lagselect(a) => commands::lagselect(a),
        Command::Vecrank(a) => commands::vecrank(a),
        Command::Vecm(a) => commands::vecm(a),
        Command::Specsearch(a) => commands::specsearch(a),
        Command::Pipeline(a) => pipeline::run(a),
        Command::Mission(a) => commands::mission(a),
        Command::McValidate(a) => commands::mc_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Cost-sharing model for the Vela Mars mission: pooled budgets, cost
//! rollup, largest-remainder allocation of launches and modules.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::panel::AgencyId;

/// Remainders closer than this are treated as ties (scale invariance).
const REMAINDER_GRID: f64 = 1e-9;

const SAMPLE_CONFIG: &str = include_str!("../data/vela_sample_mission.json");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigIssue {
    #[error("no agencies configured")]
    NoAgencies,
    #[error("no launch provider: no agency has provides_super_heavy = true")]
    NoLaunchProvider,
    #[error("agency {0} listed more than once")]
    DuplicateAgency(String),
    #[error("agency {agency}: annual budget must be positive, got {value}")]
    Budget { agency: String, value: f64 },
    #[error("agency {agency}: contribution_fraction must be in (0, 1], got {value}")]
    Fraction { agency: String, value: f64 },
    #[error("horizon_years must be at least 1")]
    Horizon,
    #[error("{field} must be finite and non-negative, got {value}")]
    Cost { field: &'static str, value: f64 },
    #[error("esa_module_bias must be >= 1, got {0}")]
    Bias(f64),
    #[error("n_modules ({modules}) exceeds n_payload_launches ({launches}); one module per launch")]
    ModulesExceedLaunches { modules: u32, launches: u32 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MissionError {
    #[error("invalid mission config: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ConfigIssue>),
    #[error("malformed mission config: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgencyConfig {
    pub agency_id: AgencyId,
    /// 2021 level, B$.
    pub annual_budget_busd: f64,
    pub contribution_fraction: f64,
    #[serde(default)]
    pub provides_super_heavy: bool,
}

fn default_horizon() -> u32 {
    5
}
fn default_module_cost() -> f64 {
    0.3
}
fn default_launch_cost() -> f64 {
    2.8
}
fn default_seven() -> u32 {
    7
}
fn default_one() -> u32 {
    1
}
fn default_crew_cost() -> f64 {
    0.5
}
fn default_bias() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    pub agencies: Vec<AgencyConfig>,
    #[serde(default = "default_horizon")]
    pub horizon_years: u32,
    #[serde(default = "default_module_cost")]
    pub module_unit_cost_busd: f64,
    #[serde(default = "default_launch_cost")]
    pub launch_unit_cost_busd: f64,
    #[serde(default = "default_seven")]
    pub n_modules: u32,
    #[serde(default = "default_seven")]
    pub n_payload_launches: u32,
    #[serde(default = "default_one")]
    pub n_crew_launches: u32,
    /// Crew vehicle plus service module; the residual between the launch and
    /// module rollup and the ~25 B$ total.
    #[serde(default = "default_crew_cost")]
    pub crew_systems_cost_busd: f64,
    #[serde(default = "default_bias")]
    pub esa_module_bias: f64,
}

impl MissionConfig {
    /// Default costs and counts around the given agencies.
    pub fn with_agencies(agencies: Vec<AgencyConfig>) -> Self {
        Self {
            agencies,
            horizon_years: default_horizon(),
            module_unit_cost_busd: default_module_cost(),
            launch_unit_cost_busd: default_launch_cost(),
            n_modules: default_seven(),
            n_payload_launches: default_seven(),
            n_crew_launches: default_one(),
            crew_systems_cost_busd: default_crew_cost(),
            esa_module_bias: default_bias(),
        }
    }

    /// The shipped five-agency configuration.
    pub fn sample() -> Self {
        Self::from_json(SAMPLE_CONFIG).expect("bundled sample config is valid")
    }

    pub fn sample_json() -> &'static str {
        SAMPLE_CONFIG
    }

    pub fn from_json(text: &str) -> Result<Self, MissionError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| MissionError::Malformed(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every problem at once, not just the first.
    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        if self.agencies.is_empty() {
            out.push(ConfigIssue::NoAgencies);
        } else if !self.agencies.iter().any(|a| a.provides_super_heavy) {
            out.push(ConfigIssue::NoLaunchProvider);
        }
        for (i, a) in self.agencies.iter().enumerate() {
            let name = a.agency_id.to_string();
            if self.agencies[..i].iter().any(|b| b.agency_id == a.agency_id) {
                out.push(ConfigIssue::DuplicateAgency(name.clone()));
            }
            if !(a.annual_budget_busd.is_finite() && a.annual_budget_busd > 0.0) {
                out.push(ConfigIssue::Budget {
                    agency: name.clone(),
                    value: a.annual_budget_busd,
                });
            }
            if !(a.contribution_fraction > 0.0 && a.contribution_fraction <= 1.0) {
                out.push(ConfigIssue::Fraction {
                    agency: name,
                    value: a.contribution_fraction,
                });
            }
        }
        if self.horizon_years == 0 {
            out.push(ConfigIssue::Horizon);
        }
        for (field, value) in [
            ("module_unit_cost_busd", self.module_unit_cost_busd),
            ("launch_unit_cost_busd", self.launch_unit_cost_busd),
            ("crew_systems_cost_busd", self.crew_systems_cost_busd),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                out.push(ConfigIssue::Cost { field, value });
            }
        }
        if !(self.esa_module_bias.is_finite() && self.esa_module_bias >= 1.0) {
            out.push(ConfigIssue::Bias(self.esa_module_bias));
        }
        if self.n_modules > self.n_payload_launches {
            out.push(ConfigIssue::ModulesExceedLaunches {
                modules: self.n_modules,
                launches: self.n_payload_launches,
            });
        }
        out
    }

    pub fn validate(&self) -> Result<(), MissionError> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(MissionError::Invalid(issues))
        }
    }

    pub fn total_launches(&self) -> u32 {
        self.n_payload_launches + self.n_crew_launches
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgencyAllocation {
    pub agency_id: AgencyId,
    pub annual_budget_busd: f64,
    pub provides_super_heavy: bool,
    pub launches: u32,
    pub modules: u32,
    pub crew_share_busd: f64,
    pub contribution_busd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanTotals {
    pub launches: u32,
    pub modules: u32,
    pub cost_busd: f64,
    pub pool_busd: f64,
    pub margin_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionPlan {
    pub agencies: Vec<AgencyAllocation>,
    pub totals: PlanTotals,
    /// Pool smaller than cost; the plan is still reported.
    pub infeasible: bool,
}

/// Σ budget × fraction × horizon.
pub fn budget_pool(config: &MissionConfig) -> Result<f64, MissionError> {
    if config.agencies.is_empty() {
        return Err(MissionError::Invalid(vec![ConfigIssue::NoAgencies]));
    }
    if config.horizon_years == 0 {
        return Err(MissionError::Invalid(vec![ConfigIssue::Horizon]));
    }
    Ok(config
        .agencies
        .iter()
        .map(|a| a.annual_budget_busd * a.contribution_fraction * f64::from(config.horizon_years))
        .sum())
}

pub fn total_cost(config: &MissionConfig) -> f64 {
    f64::from(config.total_launches()) * config.launch_unit_cost_busd
        + f64::from(config.n_modules) * config.module_unit_cost_busd
        + config.crew_systems_cost_busd
}

/// Hamilton apportionment of `total` seats by `weights`. Leftover seats go
/// to the largest fractional remainders; ties break by `names` ascending.
pub fn largest_remainder(total: u32, weights: &[f64], names: &[&str]) -> Vec<u32> {
    assert_eq!(weights.len(), names.len());
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| f64::from(total) * w / sum).collect();
    let mut seats: Vec<u32> = quotas.iter().map(|q| (q + REMAINDER_GRID).floor() as u32).collect();
    let assigned: u32 = seats.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    let key = |i: usize| ((quotas[i] - f64::from(seats[i])) / REMAINDER_GRID).round() as i64;
    order.sort_by(|&a, &b| key(b).cmp(&key(a)).then_with(|| names[a].cmp(names[b])));
    for &i in order.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        seats[i] += 1;
    }
    seats
}

pub fn allocate(config: &MissionConfig) -> Result<MissionPlan, MissionError> {
    config.validate()?;
    let pool = budget_pool(config)?;
    let cost = total_cost(config);
    let names: Vec<&str> = config.agencies.iter().map(|a| a.agency_id.as_str()).collect();
    let budgets: Vec<f64> = config.agencies.iter().map(|a| a.annual_budget_busd).collect();

    let launch_weights: Vec<f64> = config
        .agencies
        .iter()
        .map(|a| if a.provides_super_heavy { a.annual_budget_busd } else { 0.0 })
        .collect();
    let launches = largest_remainder(config.total_launches(), &launch_weights, &names);

    let module_weights: Vec<f64> = config
        .agencies
        .iter()
        .map(|a| {
            let bias = if a.agency_id == AgencyId::Esa { config.esa_module_bias } else { 1.0 };
            a.annual_budget_busd * bias
        })
        .collect();
    let modules = largest_remainder(config.n_modules, &module_weights, &names);

    let budget_sum: f64 = budgets.iter().sum();
    let agencies: Vec<AgencyAllocation> = config
        .agencies
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let crew_share = config.crew_systems_cost_busd * a.annual_budget_busd / budget_sum;
            AgencyAllocation {
                agency_id: a.agency_id.clone(),
                annual_budget_busd: a.annual_budget_busd,
                provides_super_heavy: a.provides_super_heavy,
                launches: launches[i],
                modules: modules[i],
                crew_share_busd: crew_share,
                contribution_busd: f64::from(launches[i]) * config.launch_unit_cost_busd
                    + f64::from(modules[i]) * config.module_unit_cost_busd
                    + crew_share,
            }
        })
        .collect();

    Ok(MissionPlan {
        totals: PlanTotals {
            launches: launches.iter().sum(),
            modules: modules.iter().sum(),
            cost_busd: cost,
            pool_busd: pool,
            margin_fraction: (pool - cost) / pool,
        },
        infeasible: pool < cost,
        agencies,
    })
}

//! Bundled capability tables: heavy-lift vehicles, LEO habitat modules and
//! Mars launches. The CSVs are compiled in and checked by SHA-256 and shape
//! before parsing.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Payload to LEO that makes a vehicle "super heavy".
pub const SUPER_HEAVY_KG: f64 = 50_000.0;

pub const HABITAT_MASS_BOUNDS_KG: (f64, f64) = (10_000.0, 25_000.0);

struct Bundle {
    name: &'static str,
    text: &'static str,
    sha256: &'static str,
    rows: usize,
}

const VEHICLES: Bundle = Bundle {
    name: "launch_vehicles.csv",
    text: include_str!("../data/launch_vehicles.csv"),
    sha256: "e67b5c7d7b929e3ae0fe6c8581911bdcbb99e3a076a33192a030cdd5d6c2142b",
    rows: 7,
};

const HABITATS: Bundle = Bundle {
    name: "habitat_modules.csv",
    text: include_str!("../data/habitat_modules.csv"),
    sha256: "cc3c0cfc74382b71e580247836cfec59efc4b206526b7978e5a55cf06b8c10af",
    rows: 10,
};

const MARS: Bundle = Bundle {
    name: "mars_launches.csv",
    text: include_str!("../data/mars_launches.csv"),
    sha256: "94e7ecdf1e02b6d01f0e36d355fc93ed289d4b01f34ba256deff6921abc650c1",
    rows: 15,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReferenceError {
    #[error("corrupted bundle {table}: sha256 {actual}, expected {expected}")]
    Checksum {
        table: &'static str,
        expected: &'static str,
        actual: String,
    },
    #[error("corrupted bundle {table}: {got} rows, expected {expected}")]
    Shape {
        table: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{table} line {line}: {message}")]
    Parse {
        table: &'static str,
        line: u64,
        message: String,
    },
    #[error("{table}: {message}")]
    Invariant { table: &'static str, message: String },
    #[error("csv write: {0}")]
    Write(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaunchStatus {
    Available,
    Planned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaunchVehicle {
    #[serde(rename = "vehicle")]
    pub name: String,
    pub status: LaunchStatus,
    pub payload_to_leo_kg: f64,
    /// `None` where the cost is not available.
    pub cost_per_launch_musd: Option<f64>,
    pub operator_government: String,
}

impl LaunchVehicle {
    pub fn is_super_heavy(&self) -> bool {
        self.payload_to_leo_kg >= SUPER_HEAVY_KG
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HabitatModule {
    pub year: i32,
    pub government: String,
    pub station: String,
    pub module_name: String,
    pub mass_kg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    Lander,
    Orbiter,
}

impl PayloadKind {
    fn name(self) -> &'static str {
        match self {
            PayloadKind::Lander => "lander",
            PayloadKind::Orbiter => "orbiter",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarsLaunch {
    pub year: i32,
    pub vehicle: String,
    /// Launching country.
    pub government: String,
    /// Payload owner when it differs from the launching country.
    pub payload_government: Option<String>,
    pub mission_name: String,
    pub payload_type: BTreeSet<PayloadKind>,
    pub payload_mass_kg: f64,
    pub cost_musd: Option<f64>,
    pub cost_estimated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTables {
    pub vehicles: Vec<LaunchVehicle>,
    pub habitats: Vec<HabitatModule>,
    pub mars_launches: Vec<MarsLaunch>,
}

// CSV row shapes; column order is the file order.
#[derive(Serialize, Deserialize)]
struct VehicleRow {
    status: LaunchStatus,
    vehicle: String,
    payload_to_leo_kg: f64,
    cost_per_launch_musd: Option<f64>,
    operator_government: String,
}

#[derive(Serialize, Deserialize)]
struct MarsRow {
    year: i32,
    vehicle: String,
    government: String,
    payload_government: Option<String>,
    mission_name: String,
    payload_type: String,
    payload_mass_kg: f64,
    cost_musd: Option<f64>,
    cost_estimated: bool,
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_rows<T: for<'de> Deserialize<'de>>(table: &'static str, text: &str) -> Result<Vec<T>, ReferenceError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize()
        .map(|r| {
            r.map_err(|e| ReferenceError::Parse {
                table,
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })
        })
        .collect()
}

fn write_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, ReferenceError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| ReferenceError::Write(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| ReferenceError::Write(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ReferenceError::Write(e.to_string()))
}

fn positive(table: &'static str, what: &str, x: f64) -> Result<(), ReferenceError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ReferenceError::Invariant {
            table,
            message: format!("{what} must be positive, got {x}"),
        })
    }
}

pub fn parse_vehicles(text: &str) -> Result<Vec<LaunchVehicle>, ReferenceError> {
    let rows: Vec<VehicleRow> = read_rows(VEHICLES.name, text)?;
    rows.into_iter()
        .map(|r| {
            positive(VEHICLES.name, &r.vehicle, r.payload_to_leo_kg)?;
            if let Some(c) = r.cost_per_launch_musd {
                positive(VEHICLES.name, &r.vehicle, c)?;
            }
            Ok(LaunchVehicle {
                name: r.vehicle,
                status: r.status,
                payload_to_leo_kg: r.payload_to_leo_kg,
                cost_per_launch_musd: r.cost_per_launch_musd,
                operator_government: r.operator_government,
            })
        })
        .collect()
}

pub fn vehicles_to_csv(vehicles: &[LaunchVehicle]) -> Result<String, ReferenceError> {
    write_rows(vehicles.iter().map(|v| VehicleRow {
        status: v.status,
        vehicle: v.name.clone(),
        payload_to_leo_kg: v.payload_to_leo_kg,
        cost_per_launch_musd: v.cost_per_launch_musd,
        operator_government: v.operator_government.clone(),
    }))
}

/// Parses habitat rows without the bundled mass bound, which only
/// constrains the shipped data.
pub fn parse_habitats(text: &str) -> Result<Vec<HabitatModule>, ReferenceError> {
    let rows: Vec<HabitatModule> = read_rows(HABITATS.name, text)?;
    for h in &rows {
        positive(HABITATS.name, &h.module_name, h.mass_kg)?;
    }
    Ok(rows)
}

pub fn habitats_to_csv(habitats: &[HabitatModule]) -> Result<String, ReferenceError> {
    write_rows(habitats)
}

fn parse_payload_type(line: usize, s: &str) -> Result<BTreeSet<PayloadKind>, ReferenceError> {
    let kinds = s
        .split(';')
        .map(|part| match part.trim() {
            "lander" => Ok(PayloadKind::Lander),
            "orbiter" => Ok(PayloadKind::Orbiter),
            other => Err(ReferenceError::Parse {
                table: MARS.name,
                line: line as u64,
                message: format!("unknown payload type {other:?}"),
            }),
        })
        .collect::<Result<BTreeSet<_>, _>>()?;
    if kinds.is_empty() {
        return Err(ReferenceError::Invariant {
            table: MARS.name,
            message: format!("row {line}: empty payload type"),
        });
    }
    Ok(kinds)
}

pub fn parse_mars_launches(text: &str) -> Result<Vec<MarsLaunch>, ReferenceError> {
    let rows: Vec<MarsRow> = read_rows(MARS.name, text)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            positive(MARS.name, &r.mission_name, r.payload_mass_kg)?;
            if let Some(c) = r.cost_musd {
                positive(MARS.name, &r.mission_name, c)?;
            }
            Ok(MarsLaunch {
                payload_type: parse_payload_type(i + 2, &r.payload_type)?,
                year: r.year,
                vehicle: r.vehicle,
                government: r.government,
                payload_government: r.payload_government,
                mission_name: r.mission_name,
                payload_mass_kg: r.payload_mass_kg,
                cost_musd: r.cost_musd,
                cost_estimated: r.cost_estimated,
            })
        })
        .collect()
}

pub fn mars_launches_to_csv(launches: &[MarsLaunch]) -> Result<String, ReferenceError> {
    write_rows(launches.iter().map(|m| MarsRow {
        year: m.year,
        vehicle: m.vehicle.clone(),
        government: m.government.clone(),
        payload_government: m.payload_government.clone(),
        mission_name: m.mission_name.clone(),
        payload_type: m.payload_type.iter().map(|k| k.name()).collect::<Vec<_>>().join(";"),
        payload_mass_kg: m.payload_mass_kg,
        cost_musd: m.cost_musd,
        cost_estimated: m.cost_estimated,
    }))
}

fn verify(bundle: &Bundle) -> Result<(), ReferenceError> {
    let actual = sha256_hex(bundle.text);
    if actual != bundle.sha256 {
        return Err(ReferenceError::Checksum {
            table: bundle.name,
            expected: bundle.sha256,
            actual,
        });
    }
    Ok(())
}

fn check_rows<T>(bundle: &Bundle, rows: &[T]) -> Result<(), ReferenceError> {
    if rows.len() != bundle.rows {
        return Err(ReferenceError::Shape {
            table: bundle.name,
            expected: bundle.rows,
            got: rows.len(),
        });
    }
    Ok(())
}

pub fn load_reference_tables() -> Result<ReferenceTables, ReferenceError> {
    for b in [&VEHICLES, &HABITATS, &MARS] {
        verify(b)?;
    }
    let vehicles = parse_vehicles(VEHICLES.text)?;
    check_rows(&VEHICLES, &vehicles)?;
    let habitats = parse_habitats(HABITATS.text)?;
    check_rows(&HABITATS, &habitats)?;
    let (lo, hi) = HABITAT_MASS_BOUNDS_KG;
    if let Some(h) = habitats.iter().find(|h| !(lo..=hi).contains(&h.mass_kg)) {
        return Err(ReferenceError::Invariant {
            table: HABITATS.name,
            message: format!("{} mass {} outside [{lo}, {hi}]", h.module_name, h.mass_kg),
        });
    }
    let mars_launches = parse_mars_launches(MARS.text)?;
    check_rows(&MARS, &mars_launches)?;
    Ok(ReferenceTables {
        vehicles,
        habitats,
        mars_launches,
    })
}

/// Super-heavy vehicles with the given status (any when `None`), lightest first.
pub fn query_super_heavy(vehicles: &[LaunchVehicle], status: Option<LaunchStatus>) -> Vec<LaunchVehicle> {
    let mut out: Vec<LaunchVehicle> = vehicles
        .iter()
        .filter(|v| v.is_super_heavy() && status.map_or(true, |s| v.status == s))
        .cloned()
        .collect();
    out.sort_by(|a, b| a.payload_to_leo_kg.total_cmp(&b.payload_to_leo_kg));
    out
}

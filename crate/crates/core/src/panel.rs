//! Annual macroeconomic panels: CSV ingestion, gap repair and the log
//! transform that feeds every estimator.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::Matrix;

/// Shortest contiguous year range accepted at ingestion.
pub const MIN_YEARS: usize = 12;

/// The six series of the long-run space-budget equation, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    /// National space agency budget, billions USD.
    Sb,
    /// GDP per capita, 2020 USD.
    Gpc,
    /// Researchers per million people.
    Rd,
    /// Military spending, % of GDP.
    Md,
    /// Education spending, % of GDP.
    Ed,
    /// Science R&D spending, % of GDP.
    Sd,
}

impl Variable {
    pub const ALL: [Variable; 6] = [
        Variable::Sb,
        Variable::Gpc,
        Variable::Rd,
        Variable::Md,
        Variable::Ed,
        Variable::Sd,
    ];

    /// Independent variables in equation order.
    pub const REGRESSORS: [Variable; 5] = [
        Variable::Gpc,
        Variable::Rd,
        Variable::Md,
        Variable::Ed,
        Variable::Sd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::Sb => "sb",
            Variable::Gpc => "gpc",
            Variable::Rd => "rd",
            Variable::Md => "md",
            Variable::Ed => "ed",
            Variable::Sd => "sd",
        }
    }

    /// Column name in the panel CSV schema.
    pub fn csv_column(self) -> &'static str {
        match self {
            Variable::Sb => "sb_usd_b",
            Variable::Gpc => "gdp_per_capita_usd",
            Variable::Rd => "researchers_per_million",
            Variable::Md => "military_pct_gdp",
            Variable::Ed => "education_pct_gdp",
            Variable::Sd => "rnd_pct_gdp",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = PanelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Variable::ALL
            .into_iter()
            .find(|v| v.name() == lower || v.csv_column() == lower)
            .ok_or_else(|| PanelError::UnknownVariable(s.to_string()))
    }
}

/// Space agency identifier; unknown names are kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgencyId {
    Cnsa,
    Esa,
    Jaxa,
    Roscosmos,
    Nasa,
    Other(String),
}

impl AgencyId {
    pub fn as_str(&self) -> &str {
        match self {
            AgencyId::Cnsa => "CNSA",
            AgencyId::Esa => "ESA",
            AgencyId::Jaxa => "JAXA",
            AgencyId::Roscosmos => "Roscosmos",
            AgencyId::Nasa => "NASA",
            AgencyId::Other(s) => s,
        }
    }
}

impl FromStr for AgencyId {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        Ok(match trimmed.to_ascii_uppercase().as_str() {
            "CNSA" => AgencyId::Cnsa,
            "ESA" => AgencyId::Esa,
            "JAXA" => AgencyId::Jaxa,
            "ROSCOSMOS" => AgencyId::Roscosmos,
            "NASA" => AgencyId::Nasa,
            _ => AgencyId::Other(trimmed.to_string()),
        })
    }
}

impl fmt::Display for AgencyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for AgencyId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for AgencyId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(s.parse().unwrap_or_else(|never| match never {}))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PanelError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed CSV at line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("non-numeric value {value:?} at line {line}, column {column}")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("duplicate year {0}")]
    DuplicateYear(i32),
    #[error("year index gap at {0}")]
    YearGap(i32),
    #[error("no rows for agency {0}")]
    NoRows(String),
    #[error("panel covers {years} years; at least {min} are required")]
    TooShort { years: usize, min: usize },
    #[error("series {variable} has {observed} observed values; at least two are required")]
    TooFewObservations { variable: Variable, observed: usize },
    #[error("non-positive value ({variable}, {year})")]
    NonPositive { variable: Variable, year: i32 },
    #[error("missing value ({variable}, {year}); repair the panel first")]
    Missing { variable: Variable, year: i32 },
    #[error("series {variable} has {len} values for {years} years")]
    Length {
        variable: Variable,
        len: usize,
        years: usize,
    },
    #[error("variable {0} is not in the panel")]
    AbsentVariable(Variable),
}

fn check_years(years: &[i32]) -> Result<(), PanelError> {
    for w in years.windows(2) {
        if w[1] == w[0] {
            return Err(PanelError::DuplicateYear(w[0]));
        }
        if w[1] != w[0] + 1 {
            return Err(PanelError::YearGap(w[0] + 1));
        }
    }
    Ok(())
}

/// One agency's annual series; cells may be missing until repaired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroPanel {
    pub agency_id: AgencyId,
    years: Vec<i32>,
    series: BTreeMap<Variable, Vec<Option<f64>>>,
}

impl MacroPanel {
    /// Builds a panel over all six variables. Years must be strictly
    /// increasing with step one.
    pub fn new(
        agency_id: AgencyId,
        years: Vec<i32>,
        series: BTreeMap<Variable, Vec<Option<f64>>>,
    ) -> Result<Self, PanelError> {
        check_years(&years)?;
        for v in Variable::ALL {
            let s = series.get(&v).ok_or(PanelError::AbsentVariable(v))?;
            if s.len() != years.len() {
                return Err(PanelError::Length {
                    variable: v,
                    len: s.len(),
                    years: years.len(),
                });
            }
        }
        Ok(Self {
            agency_id,
            years,
            series,
        })
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn series(&self, v: Variable) -> &[Option<f64>] {
        &self.series[&v]
    }

    pub fn missing_count(&self) -> usize {
        self.series.values().flatten().filter(|c| c.is_none()).count()
    }

    pub fn missing_cells(&self) -> Vec<(Variable, i32)> {
        let mut out = Vec::new();
        for (&v, s) in &self.series {
            for (i, c) in s.iter().enumerate() {
                if c.is_none() {
                    out.push((v, self.years[i]));
                }
            }
        }
        out
    }
}

/// Natural logs of a repaired panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLevelPanel {
    pub agency_id: AgencyId,
    years: Vec<i32>,
    series: BTreeMap<Variable, Vec<f64>>,
}

impl LogLevelPanel {
    /// Wraps already-logged columns, e.g. simulated data. Any nonempty
    /// subset of the six variables is allowed.
    pub fn from_columns(
        agency_id: AgencyId,
        years: Vec<i32>,
        columns: Vec<(Variable, Vec<f64>)>,
    ) -> Result<Self, PanelError> {
        check_years(&years)?;
        let mut series = BTreeMap::new();
        for (v, col) in columns {
            if col.len() != years.len() {
                return Err(PanelError::Length {
                    variable: v,
                    len: col.len(),
                    years: years.len(),
                });
            }
            series.insert(v, col);
        }
        Ok(Self {
            agency_id,
            years,
            series,
        })
    }

    /// Wraps a `T × p` matrix, assigning the first `p` canonical variables
    /// to its columns and consecutive years starting at `first_year`.
    pub fn from_matrix(agency_id: AgencyId, first_year: i32, data: &Matrix) -> Result<Self, PanelError> {
        let years = (0..data.rows() as i32).map(|t| first_year + t).collect();
        let columns = (0..data.cols())
            .map(|j| (Variable::ALL[j], data.column(j)))
            .collect();
        Self::from_columns(agency_id, years, columns)
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn variables(&self) -> Vec<Variable> {
        self.series.keys().copied().collect()
    }

    pub fn series(&self, v: Variable) -> Option<&[f64]> {
        self.series.get(&v).map(Vec::as_slice)
    }

    /// `T × |vars|` data matrix with columns in the order given.
    pub fn matrix(&self, vars: &[Variable]) -> Result<Matrix, PanelError> {
        let cols = vars
            .iter()
            .map(|v| self.series.get(v).cloned().ok_or(PanelError::AbsentVariable(*v)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix::from_fn(self.years.len(), vars.len(), |i, j| cols[j][i]))
    }
}

const AGENCY_COLUMN: &str = "agency";
const YEAR_COLUMN: &str = "year";

/// Reads one agency's rows from a panel CSV.
///
/// Rows for other agencies are skipped. Blank fields are kept as missing
/// cells; rows may appear in any order but the resulting year index must be
/// contiguous.
pub fn load_panel(path: impl AsRef<Path>, agency_id: &str) -> Result<MacroPanel, PanelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PanelError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_panel(&text, agency_id)
}

/// Same as [`load_panel`] over in-memory CSV text.
pub fn parse_panel(text: &str, agency_id: &str) -> Result<MacroPanel, PanelError> {
    let wanted: AgencyId = agency_id.parse().unwrap_or_else(|never| match never {});
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| malformed(&e))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut var_cols = BTreeMap::new();
    let mut agency_col = None;
    let mut year_col = None;
    for (i, h) in headers.iter().enumerate() {
        match h.as_str() {
            AGENCY_COLUMN => agency_col = Some(i),
            YEAR_COLUMN => year_col = Some(i),
            other => match Variable::ALL.into_iter().find(|v| v.csv_column() == other) {
                Some(v) => {
                    var_cols.insert(v, i);
                }
                None => return Err(PanelError::UnknownColumn(other.to_string())),
            },
        }
    }
    let agency_col = agency_col.ok_or(PanelError::MissingColumn(AGENCY_COLUMN))?;
    let year_col = year_col.ok_or(PanelError::MissingColumn(YEAR_COLUMN))?;
    for v in Variable::ALL {
        if !var_cols.contains_key(&v) {
            return Err(PanelError::MissingColumn(v.csv_column()));
        }
    }

    let mut rows: Vec<(i32, [Option<f64>; 6])> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        let agency: AgencyId = record[agency_col].parse().unwrap_or_else(|never| match never {});
        if agency != wanted {
            continue;
        }
        let year_raw = &record[year_col];
        let year: i32 = year_raw.parse().map_err(|_| PanelError::NonNumeric {
            line,
            column: YEAR_COLUMN.to_string(),
            value: year_raw.to_string(),
        })?;
        let mut cells = [None; 6];
        for (&v, &col) in &var_cols {
            let raw = &record[col];
            if raw.is_empty() {
                continue;
            }
            let value: f64 = raw.parse().map_err(|_| PanelError::NonNumeric {
                line,
                column: v.csv_column().to_string(),
                value: raw.to_string(),
            })?;
            if !value.is_finite() {
                return Err(PanelError::NonNumeric {
                    line,
                    column: v.csv_column().to_string(),
                    value: raw.to_string(),
                });
            }
            cells[v.index()] = Some(value);
        }
        rows.push((year, cells));
    }
    if rows.is_empty() {
        return Err(PanelError::NoRows(wanted.to_string()));
    }
    rows.sort_by_key(|(y, _)| *y);
    let years: Vec<i32> = rows.iter().map(|(y, _)| *y).collect();
    check_years(&years)?;
    if years.len() < MIN_YEARS {
        return Err(PanelError::TooShort {
            years: years.len(),
            min: MIN_YEARS,
        });
    }
    let series = Variable::ALL
        .into_iter()
        .map(|v| (v, rows.iter().map(|(_, c)| c[v.index()]).collect()))
        .collect();
    MacroPanel::new(wanted, years, series)
}

/// Distinct agency identifiers in a panel CSV, in order of first appearance.
pub fn list_agencies(text: &str) -> Result<Vec<AgencyId>, PanelError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let col = reader
        .headers()
        .map_err(|e| malformed(&e))?
        .iter()
        .position(|h| h == AGENCY_COLUMN)
        .ok_or(PanelError::MissingColumn(AGENCY_COLUMN))?;
    let mut out: Vec<AgencyId> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(&e))?;
        let a: AgencyId = record[col].parse().unwrap_or_else(|never| match never {});
        if !out.contains(&a) {
            out.push(a);
        }
    }
    Ok(out)
}

fn malformed(e: &csv::Error) -> PanelError {
    PanelError::Malformed {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

/// Fills gaps in every series: linear interpolation between the nearest
/// observed neighbours for interior runs, flat extension of the nearest
/// observed value at either end. Observed cells are never touched.
pub fn interpolate_missing(panel: &MacroPanel) -> Result<MacroPanel, PanelError> {
    let mut series = BTreeMap::new();
    for (&v, s) in &panel.series {
        series.insert(v, fill_series(v, s)?.into_iter().map(Some).collect());
    }
    Ok(MacroPanel {
        agency_id: panel.agency_id.clone(),
        years: panel.years.clone(),
        series,
    })
}

fn fill_series(v: Variable, s: &[Option<f64>]) -> Result<Vec<f64>, PanelError> {
    let observed: Vec<usize> = (0..s.len()).filter(|&i| s[i].is_some()).collect();
    if observed.len() < 2 {
        return Err(PanelError::TooFewObservations {
            variable: v,
            observed: observed.len(),
        });
    }
    let first = observed[0];
    let last = *observed.last().unwrap();
    let mut out = vec![0.0; s.len()];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = match s[i] {
            Some(x) => x,
            None if i < first => s[first].unwrap(),
            None if i > last => s[last].unwrap(),
            None => {
                let hi = observed.partition_point(|&j| j < i);
                let (a, b) = (observed[hi - 1], observed[hi]);
                let (ya, yb) = (s[a].unwrap(), s[b].unwrap());
                ya + (yb - ya) * (i - a) as f64 / (b - a) as f64
            }
        };
    }
    Ok(out)
}

/// Natural log of every cell. The panel must already be repaired and
/// strictly positive.
pub fn to_log_levels(panel: &MacroPanel) -> Result<LogLevelPanel, PanelError> {
    let mut series = BTreeMap::new();
    for (&v, s) in &panel.series {
        let mut logged = Vec::with_capacity(s.len());
        for (i, cell) in s.iter().enumerate() {
            let year = panel.years[i];
            let x = cell.ok_or(PanelError::Missing { variable: v, year })?;
            if x <= 0.0 {
                return Err(PanelError::NonPositive { variable: v, year });
            }
            logged.push(x.ln());
        }
        series.insert(v, logged);
    }
    Ok(LogLevelPanel {
        agency_id: panel.agency_id.clone(),
        years: panel.years.clone(),
        series,
    })
}

//! Errors with exit codes, run manifests and artifact writing.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use serde::Serialize;
use sha2::{Digest, Sha256};
use vela_core::error::{Classify, ErrorClass};

#[derive(Debug)]
pub struct CliError {
    pub class: ErrorClass,
    pub stage: Option<&'static str>,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Validation,
            stage: None,
            message: message.into(),
        }
    }

    pub fn at(stage: &'static str, e: impl Classify + fmt::Display) -> Self {
        Self {
            class: e.class(),
            stage: Some(stage),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(s) => write!(f, "error in stage {s}: {}", self.message),
            None => write!(f, "error: {}", self.message),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))
}

/// Provenance block embedded in every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// Parsed options minus the output location.
    pub options: serde_json::Value,
    pub config_digest: Option<String>,
    pub input_digests: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub generator_id: Option<&'static str>,
    /// RFC 3339; `SOURCE_DATE_EPOCH` when set.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &'static str, options: &impl Serialize) -> Result<Self, CliError> {
        Ok(Self {
            tool: "vela",
            version: env!("CARGO_PKG_VERSION"),
            command,
            options: serde_json::to_value(options).map_err(|e| CliError::validation(e.to_string()))?,
            config_digest: None,
            input_digests: BTreeMap::new(),
            seeds: Vec::new(),
            generator_id: None,
            timestamp: timestamp()?,
        })
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.input_digests.insert(path.display().to_string(), sha256_hex(bytes));
    }
}

fn timestamp() -> Result<String, CliError> {
    let now = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(s) => {
            let secs: u64 = s
                .trim()
                .parse()
                .map_err(|_| CliError::validation(format!("SOURCE_DATE_EPOCH is not an integer: {s:?}")))?;
            UNIX_EPOCH + Duration::from_secs(secs)
        }
        Err(_) => SystemTime::now(),
    };
    Ok(humantime::format_rfc3339_seconds(now).to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Table,
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    manifest: &'a RunManifest,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<Failure<'a>>,
    result: &'a T,
}

#[derive(Serialize)]
struct Failure<'a> {
    stage: Option<&'static str>,
    exit_code: i32,
    message: &'a str,
}

/// Marker file written next to partial artifacts.
pub const FAILURE_MARKER: &str = "FAILED";

pub struct Output {
    pub out_dir: Option<PathBuf>,
    pub format: Format,
}

impl Output {
    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        if let Some(dir) = &self.out_dir {
            fs::create_dir_all(dir).map_err(|e| CliError::validation(format!("cannot create {}: {e}", dir.display())))?;
            let path = dir.join(name);
            fs::write(&path, contents).map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }

    fn render<T: Serialize>(manifest: &RunManifest, result: &T, failure: Option<&CliError>) -> Result<String, CliError> {
        let artifact = Artifact {
            manifest,
            status: if failure.is_some() { "failed" } else { "ok" },
            failure: failure.map(|e| Failure {
                stage: e.stage,
                exit_code: e.exit_code(),
                message: &e.message,
            }),
            result,
        };
        let mut s = serde_json::to_string_pretty(&artifact).map_err(|e| CliError::validation(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `<name>.json` and `<name>.txt` and prints one of them.
    pub fn emit<T: Serialize>(&self, name: &str, manifest: &RunManifest, result: &T, text: &str) -> Result<(), CliError> {
        let json = Self::render(manifest, result, None)?;
        self.write(&format!("{name}.json"), &json)?;
        self.write(&format!("{name}.txt"), text)?;
        match self.format {
            Format::Json => print!("{json}"),
            Format::Table => print!("{text}"),
        }
        Ok(())
    }

    /// Keeps whatever was computed, marks it failed, and hands the error back.
    pub fn fail<T: Serialize>(&self, name: &str, manifest: &RunManifest, partial: &T, text: &str, err: CliError) -> CliError {
        let written = Self::render(manifest, partial, Some(&err)).and_then(|json| {
            self.write(&format!("{name}.json"), &json)?;
            if !text.is_empty() {
                self.write(&format!("{name}.txt"), text)?;
            }
            self.write(FAILURE_MARKER, &format!("{err}\n"))
        });
        match written {
            Ok(()) => err,
            Err(io) => CliError {
                message: format!("{}; additionally {}", err.message, io.message),
                ..err
            },
        }
    }
}

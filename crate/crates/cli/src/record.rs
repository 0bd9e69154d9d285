use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;

use crate::args::{Format, Global};

pub const OUT_DIR_ENV: &str = "EGYPTIAN_OUT_DIR";

#[derive(Debug)]
pub enum Outcome {
    Complete,
    Truncated,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(#[from] egyptian::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub parameters: Value,
    pub result: Value,
    pub started: String,
    pub finished: String,
    pub version: String,
}

impl RunRecord {
    pub fn new(command: &str, parameters: Value, result: Value, started: DateTime<Utc>) -> Self {
        RunRecord {
            command: command.to_string(),
            parameters,
            result,
            started: started.to_rfc3339_opts(SecondsFormat::Micros, true),
            finished: Utc::now().to_rfc3339_opts(SecondsFormat::Micros, true),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Where output goes: `--out`, else `$EGYPTIAN_OUT_DIR/<command>.<ext>`, else stdout.
fn destination(global: &Global, command: &str) -> Option<PathBuf> {
    if let Some(p) = &global.out {
        return Some(p.clone());
    }
    let dir = std::env::var_os(OUT_DIR_ENV)?;
    let ext = match global.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    Some(Path::new(&dir).join(format!("{command}.{ext}")))
}

pub fn emit(
    global: &Global,
    command: &str,
    record: &RunRecord,
    csv: Option<String>,
) -> Result<(), CliError> {
    let body = match global.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(record)?;
            s.push('\n');
            s
        }
        Format::Csv => csv.ok_or_else(|| {
            CliError::Usage(format!("--format csv is not available for `{command}`"))
        })?,
    };
    match destination(global, command) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, body)?;
        }
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

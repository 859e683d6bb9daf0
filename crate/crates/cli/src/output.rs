//! Report envelopes, exit status and the JSON/CSV writers.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use gammadiv::{Error, Tolerances, VERSION};
use serde::Serialize;

/// Input problems: bad flags, unreadable or malformed files, parameters
/// outside a closed form's domain.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError(e.to_string())
    }
}

impl From<csv::Error> for InputError {
    fn from(e: csv::Error) -> Self {
        InputError(format!("writing CSV: {e}"))
    }
}

/// Whether every numerical solve in a command met its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    NonConvergence,
}

impl Status {
    pub fn and(self, other: Status) -> Status {
        if self == Status::Converged { other } else { self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// JSON is the full report; CSV is the tabular projection described
    /// below.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// Fields shared by every report.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    command: &'a str,
    status: Status,
    tolerances: &'a Tolerances,
    #[serde(flatten)]
    body: &'a T,
}

pub type CsvTable = (Vec<String>, Vec<Vec<String>>);

/// Writes the report in the requested format and returns its status.
pub fn emit<T: Serialize>(
    args: &OutputArgs,
    command: &str,
    status: Status,
    tol: &Tolerances,
    body: &T,
    table: impl FnOnce() -> CsvTable,
) -> Result<Status, InputError> {
    let bytes = match args.format {
        Format::Json => {
            let env = Envelope {
                version: VERSION,
                command,
                status,
                tolerances: tol,
                body,
            };
            let mut text = serde_json::to_string_pretty(&env).map_err(|e| InputError(e.to_string()))?;
            text.push('\n');
            text.into_bytes()
        }
        Format::Csv => {
            let (header, rows) = table();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header)?;
            for r in rows {
                w.write_record(&r)?;
            }
            w.into_inner().map_err(|e| InputError(e.to_string()))?
        }
    };
    match &args.out {
        Some(path) => fs::write(path, bytes).map_err(|e| InputError(format!("writing {}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| InputError(format!("writing standard output: {e}")))?,
    }
    Ok(status)
}

/// Shortest round-trip representation, as in the JSON report.
pub fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| "null".into())
}

/// Coordinate column names `x0, x1, …`.
pub fn coordinate_header(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}

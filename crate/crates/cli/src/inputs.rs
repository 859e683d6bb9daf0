//! Reading measure, cost and observable files.

use std::fs;
use std::path::Path;

use gammadiv::measures::{DiscreteMeasure, MeasureSpec};
use gammadiv::transport::{CostSpec, Potential};
use gammadiv::{Error, Tolerances};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::output::InputError;

/// Environment variable overriding the iteration cap of iterative solvers.
pub const MAX_ITER_VAR: &str = "GAMMADIV_MAX_ITER";

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("reading {}: {e}", path.display())))
}

fn located(path: &Path, e: Error) -> InputError {
    InputError(format!("{}: {e}", path.display()))
}

/// Parses a JSON document, reporting syntax errors with line and column.
pub fn json_file<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| {
        let detail = if e.is_syntax() || e.is_eof() {
            format!("parse error at line {}, column {}: {e}", e.line(), e.column())
        } else {
            format!("unexpected document shape: {e}")
        };
        InputError(format!("{}: {detail}", path.display()))
    })
}

pub fn measure_file(path: &Path) -> Result<DiscreteMeasure, InputError> {
    let text = read(path)?;
    let spec = MeasureSpec::from_json_str(&text).map_err(|e| located(path, e))?;
    spec.build().map_err(|e| located(path, e))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    points: Vec<Vec<f64>>,
    matrix: Vec<Vec<f64>>,
}

/// `scaled:K`, `halfsq` or `matrix:FILE`.
pub fn cost_spec(text: &str) -> Result<CostSpec, InputError> {
    if text == "halfsq" {
        return Ok(CostSpec::half_square_gap());
    }
    if let Some(k) = text.strip_prefix("scaled:") {
        let k: f64 = k
            .parse()
            .map_err(|_| InputError(format!("cost scale `{k}` is not a number")))?;
        return Ok(CostSpec::scaled_metric(k)?);
    }
    if let Some(file) = text.strip_prefix("matrix:") {
        let path = Path::new(file);
        let doc: MatrixDoc = json_file(path)?;
        return CostSpec::explicit(doc.points, doc.matrix).map_err(|e| located(path, e));
    }
    Err(InputError(format!(
        "unknown cost `{text}`; expected scaled:K, halfsq or matrix:FILE"
    )))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservableDoc {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

/// An observable `{"points": [[..]], "values": [..]}` checked against `cost`.
pub fn observable_file(path: &Path, cost: &CostSpec) -> Result<Potential, InputError> {
    let doc: ObservableDoc = json_file(path)?;
    Potential::new(doc.points, doc.values, cost.clone()).map_err(|e| located(path, e))
}

/// Default tolerances with the iteration cap from the environment and an
/// optional divergence gap target.
pub fn tolerances(gap: Option<f64>) -> Result<Tolerances, InputError> {
    let mut tol = Tolerances::default();
    if let Ok(raw) = std::env::var(MAX_ITER_VAR) {
        tol.max_iter = raw
            .trim()
            .parse()
            .ok()
            .filter(|n: &usize| *n > 0)
            .ok_or_else(|| InputError(format!("{MAX_ITER_VAR} = `{raw}` is not a positive integer")))?;
    }
    if let Some(t) = gap {
        if !(t > 0.0) || !t.is_finite() {
            return Err(InputError(format!("tolerance {t} must be positive")));
        }
        tol.gd_tol = t;
    }
    Ok(tol)
}

/// Comma-separated reals.
pub fn real_list(text: &str) -> Result<Vec<f64>, InputError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| InputError(format!("`{s}` is not a number")))
        })
        .collect()
}

//! `gammadiv divergence`.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use gammadiv::gammadiv::{gamma_div_dual_with, gamma_div_primal_with, DivergenceReport};
use gammadiv::measures::DiscreteMeasure;
use gammadiv::{Error, Tolerances};
use serde::Serialize;

use crate::inputs::{cost_spec, measure_file, tolerances};
use crate::output::{coordinate_header, emit, num, CsvTable, InputError, OutputArgs, Status};

pub const CSV_HELP: &str = "\
CSV columns: x0..x{d-1}, g_star, gamma_star, mu, nu
  One row per point of supp μ ∪ supp ν, taken from the primal report
  (the dual report with --mode dual). gamma_star, mu and nu are the
  weights at the point, zero off the support.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Primal,
    Dual,
    Both,
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    /// Measure file for μ.
    #[arg(long, value_name = "FILE")]
    pub mu: PathBuf,
    /// Measure file for the reference ν.
    #[arg(long, value_name = "FILE")]
    pub nu: PathBuf,
    /// Ground cost: scaled:K, halfsq or matrix:FILE.
    #[arg(long, default_value = "scaled:1")]
    pub cost: String,
    #[arg(long, value_enum, default_value_t = Mode::Primal)]
    pub mode: Mode,
    /// Multiply the cost by B.
    #[arg(long, value_name = "B", default_value_t = 1.0)]
    pub scale: f64,
    /// Absolute primal-dual gap target.
    #[arg(long, value_name = "T")]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Outcome of one solver.
#[derive(Serialize)]
struct Solve {
    converged: bool,
    message: Option<String>,
    report: Option<DivergenceReport>,
}

#[derive(Serialize)]
struct Body {
    cost: String,
    scale: f64,
    mode: Mode,
    primal: Option<Solve>,
    dual: Option<Solve>,
    /// `|primal − dual|` when both ran.
    mode_difference: Option<f64>,
}

fn solve(result: gammadiv::Result<DivergenceReport>) -> Result<Solve, InputError> {
    match result {
        Ok(r) => Ok(Solve {
            converged: true,
            message: None,
            report: Some(r),
        }),
        Err(e @ Error::NonConvergence { .. }) => {
            let message = Some(e.to_string());
            let report = match e {
                Error::NonConvergence { best, .. } => best.map(|b| *b),
                _ => None,
            };
            Ok(Solve {
                converged: false,
                message,
                report,
            })
        }
        Err(e) => Err(e.into()),
    }
}

pub fn run(args: &DivergenceArgs) -> Result<Status, InputError> {
    let tol: Tolerances = tolerances(args.tol)?;
    let mu = measure_file(&args.mu)?;
    let nu = measure_file(&args.nu)?;
    if !(args.scale > 0.0) || !args.scale.is_finite() {
        return Err(InputError(format!("scale {} must be positive", args.scale)));
    }
    let cost = cost_spec(&args.cost)?.scaled(args.scale)?;
    let primal = matches!(args.mode, Mode::Primal | Mode::Both)
        .then(|| solve(gamma_div_primal_with(&mu, &nu, &cost, &tol)))
        .transpose()?;
    let dual = matches!(args.mode, Mode::Dual | Mode::Both)
        .then(|| solve(gamma_div_dual_with(&mu, &nu, &cost, &tol)))
        .transpose()?;
    let value = |s: &Option<Solve>| s.as_ref().and_then(|s| s.report.as_ref()).map(|r| r.value);
    let mode_difference = value(&primal).zip(value(&dual)).map(|(a, b)| (a - b).abs());
    let status = [&primal, &dual]
        .into_iter()
        .flatten()
        .fold(Status::Converged, |s, x| {
            s.and(if x.converged { Status::Converged } else { Status::NonConvergence })
        });
    let body = Body {
        cost: args.cost.clone(),
        scale: args.scale,
        mode: args.mode,
        primal,
        dual,
        mode_difference,
    };
    let report = body
        .primal
        .as_ref()
        .or(body.dual.as_ref())
        .and_then(|s| s.report.as_ref());
    emit(&args.output, "divergence", status, &tol, &body, || table(report, &mu, &nu))
}

fn table(report: Option<&DivergenceReport>, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> CsvTable {
    let mut header = coordinate_header(mu.dim());
    header.extend(["g_star", "gamma_star", "mu", "nu"].map(String::from));
    let Some(r) = report else { return (header, Vec::new()) };
    let weight = |m: &DiscreteMeasure, x: &[f64]| m.find(x).map_or(0.0, |i| m.weights()[i]);
    let rows = r
        .g_star
        .points()
        .iter()
        .zip(r.g_star.values())
        .map(|(x, g)| {
            let mut row: Vec<String> = x.iter().map(|c| num(*c)).collect();
            row.push(num(*g));
            row.push(num(weight(&r.gamma_star, x)));
            row.push(num(weight(mu, x)));
            row.push(num(weight(nu, x)));
            row
        })
        .collect();
    (header, rows)
}

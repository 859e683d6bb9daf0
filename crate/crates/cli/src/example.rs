//! `gammadiv example`.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use gammadiv::closedforms::{
    density_stretch, discrete_add_point, discrete_remove_point, gaussian_gamma_div, gaussian_kl, uniform_shrink,
    uniform_stretch, GaussianDivergence, PointSetSolution, UniformPairSolution,
};
use gammadiv::gammadiv::{gamma_div_primal_with, DivergenceReport};
use gammadiv::measures::{to_discrete, DiscreteMeasure, GaussianParams, GridDensity};
use gammadiv::transport::CostSpec;
use gammadiv::{Error, Tolerances};
use serde::Serialize;

use crate::inputs::{json_file, real_list, tolerances};
use crate::output::{coordinate_header, emit, num, InputError, OutputArgs, Status};

pub const CSV_HELP: &str = "\
CSV columns by example:
  uniform-stretch, uniform-shrink, density-stretch:
    x, g_star_closed, g_star_numeric, gamma_star_numeric
    one row per atom of the numeric grid solution
  add-point, remove-point:
    x0..x{d-1}, g_star_closed, g_star_numeric, gamma_star_closed, gamma_star_numeric
  gaussian:
    case, value, re_part, w_part, kl, gamma_mean, gamma_variance";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Example {
    /// μ = Unif[0, 1 + c], ν = Unif[0, 1].
    UniformStretch,
    /// μ = Unif[0, 1 − c], ν = Unif[0, 1].
    UniformShrink,
    /// μ ∝ f on [0, 1 + c], ν ∝ f on [0, 1] for a positive polynomial f.
    DensityStretch,
    /// ν uniform on a point set, μ uniform on the set plus one point.
    AddPoint,
    /// ν uniform on a point set, μ uniform on the set minus one point.
    RemovePoint,
    /// Two Gaussians under the class of functions with k-Lipschitz
    /// derivative.
    Gaussian,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    #[arg(value_enum)]
    pub name: Example,
    /// Stretch or shrink amount.
    #[arg(long, default_value_t = 0.1)]
    pub c: f64,
    /// Cells per unit length of the numeric grid.
    #[arg(long, default_value_t = 4000)]
    pub n: usize,
    /// Polynomial coefficients a0,a1,… of the density a0 + a1 x + ….
    #[arg(long, default_value = "1")]
    pub coeffs: String,
    /// JSON array of points for add-point and remove-point.
    #[arg(long, value_name = "FILE")]
    pub points: Option<PathBuf>,
    /// Coordinates of the added point, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    /// Index of the removed point.
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b1: f64,
    /// Standard deviation of μ.
    #[arg(long, default_value_t = 1.0)]
    pub s1: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b2: f64,
    /// Standard deviation of ν.
    #[arg(long, default_value_t = 1.0)]
    pub s2: f64,
    /// Lipschitz constant of the derivative.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Absolute primal-dual gap target of the numeric cross-check.
    #[arg(long, value_name = "T")]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// The numeric cross-check of a closed form.
#[derive(Serialize)]
struct Numeric {
    converged: bool,
    message: Option<String>,
    value: f64,
    re_part: f64,
    w_part: f64,
}

#[derive(Serialize)]
struct Residuals {
    value: f64,
    re_part: f64,
    w_part: f64,
}

#[derive(Serialize)]
struct Body<'a, S: Serialize> {
    example: Example,
    parameters: serde_json::Value,
    closed_form: &'a S,
    numeric: Option<Numeric>,
    residuals: Residuals,
}

fn numeric(mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: &Tolerances) -> Result<(DivergenceReport, Numeric), InputError> {
    let cost = CostSpec::scaled_metric(1.0)?;
    let (report, message) = match gamma_div_primal_with(mu, nu, &cost, tol) {
        Ok(r) => (r, None),
        Err(e @ Error::NonConvergence { .. }) => {
            let message = e.to_string();
            match e {
                Error::NonConvergence { best: Some(b), .. } => (*b, Some(message)),
                _ => return Err(InputError(message)),
            }
        }
        Err(e) => return Err(e.into()),
    };
    let summary = Numeric {
        converged: message.is_none(),
        message,
        value: report.value,
        re_part: report.re_part,
        w_part: report.w_part,
    };
    Ok((report, summary))
}

fn residuals(n: &Numeric, value: f64, re: f64, w: f64) -> Residuals {
    Residuals {
        value: (n.value - value).abs(),
        re_part: (n.re_part - re).abs(),
        w_part: (n.w_part - w).abs(),
    }
}

fn status(n: &Numeric) -> Status {
    if n.converged { Status::Converged } else { Status::NonConvergence }
}

fn grid(left: f64, right: f64, per_unit: usize, f: impl Fn(f64) -> f64) -> Result<DiscreteMeasure, InputError> {
    let cells = ((right - left) * per_unit as f64).round().max(1.0) as usize;
    Ok(to_discrete(&GridDensity::from_fn(left, right, cells, f)?))
}

pub fn run(args: &ExampleArgs) -> Result<Status, InputError> {
    let tol = tolerances(args.tol)?;
    if args.n == 0 {
        return Err(InputError("--n must be positive".into()));
    }
    match args.name {
        Example::UniformStretch | Example::UniformShrink | Example::DensityStretch => interval(args, &tol),
        Example::AddPoint | Example::RemovePoint => point_set(args, &tol),
        Example::Gaussian => gaussian(args, &tol),
    }
}

fn interval(args: &ExampleArgs, tol: &Tolerances) -> Result<Status, InputError> {
    let c = args.c;
    let coeffs = real_list(&args.coeffs)?;
    let poly = |x: f64| coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a);
    let (solution, mu, nu): (UniformPairSolution, _, _) = match args.name {
        Example::UniformStretch => (uniform_stretch(c)?, grid(0.0, 1.0 + c, args.n, |_| 1.0)?, grid(0.0, 1.0, args.n, |_| 1.0)?),
        Example::UniformShrink => (uniform_shrink(c)?, grid(0.0, 1.0 - c, args.n, |_| 1.0)?, grid(0.0, 1.0, args.n, |_| 1.0)?),
        _ => (density_stretch(poly, c)?, grid(0.0, 1.0 + c, args.n, poly)?, grid(0.0, 1.0, args.n, poly)?),
    };
    let (report, num_summary) = numeric(&mu, &nu, tol)?;
    let body = Body {
        example: args.name,
        parameters: serde_json::json!({ "c": c, "n": args.n, "coeffs": coeffs }),
        closed_form: &solution,
        residuals: residuals(&num_summary, solution.value, solution.re_part, solution.w_part),
        numeric: Some(num_summary),
    };
    let st = status(body.numeric.as_ref().expect("set above"));
    emit(&args.output, "example", st, tol, &body, || {
        let header = ["x", "g_star_closed", "g_star_numeric", "gamma_star_numeric"].map(String::from).to_vec();
        let rows = report
            .g_star
            .points()
            .iter()
            .zip(report.g_star.values())
            .map(|(x, g)| {
                let gamma = report.gamma_star.find(x).map_or(0.0, |i| report.gamma_star.weights()[i]);
                vec![num(x[0]), num(solution.g_star.eval(x[0])), num(*g), num(gamma)]
            })
            .collect();
        (header, rows)
    })
}

fn point_set(args: &ExampleArgs, tol: &Tolerances) -> Result<Status, InputError> {
    let path = args
        .points
        .as_ref()
        .ok_or_else(|| InputError("--points FILE is required for this example".into()))?;
    let xs: Vec<Vec<f64>> = json_file(path)?;
    let (solution, parameters): (PointSetSolution, _) = match args.name {
        Example::AddPoint => {
            let y = real_list(args.y.as_deref().ok_or_else(|| InputError("--y is required for add-point".into()))?)?;
            (discrete_add_point(&xs, &y)?, serde_json::json!({ "points": xs, "y": y }))
        }
        _ => {
            let j = args.j.ok_or_else(|| InputError("--j is required for remove-point".into()))?;
            (discrete_remove_point(&xs, j)?, serde_json::json!({ "points": xs, "j": j }))
        }
    };
    let (report, num_summary) = numeric(&solution.mu, &solution.nu, tol)?;
    let cost = CostSpec::scaled_metric(1.0)?;
    let closed_re = gammadiv::entropy::rel_entropy(&solution.gamma_star, &solution.nu);
    let closed_w = gammadiv::transport::ot_cost(&solution.mu, &solution.gamma_star, &cost)?;
    let body = Body {
        example: args.name,
        parameters,
        closed_form: &solution,
        residuals: residuals(&num_summary, solution.value, closed_re, closed_w),
        numeric: Some(num_summary),
    };
    let st = status(body.numeric.as_ref().expect("set above"));
    emit(&args.output, "example", st, tol, &body, || {
        let mut header = coordinate_header(solution.mu.dim());
        header.extend(
            ["g_star_closed", "g_star_numeric", "gamma_star_closed", "gamma_star_numeric"].map(String::from),
        );
        let weight = |m: &DiscreteMeasure, x: &[f64]| m.find(x).map_or(0.0, |i| m.weights()[i]);
        let numeric_g = |x: &[f64]| report.g_star.value_at(x).unwrap_or(f64::NAN);
        let rows = solution
            .g_star
            .points()
            .iter()
            .zip(solution.g_star.values())
            .map(|(x, g)| {
                let mut row: Vec<String> = x.iter().map(|v| num(*v)).collect();
                row.extend([
                    num(*g),
                    num(numeric_g(x)),
                    num(weight(&solution.gamma_star, x)),
                    num(weight(&report.gamma_star, x)),
                ]);
                row
            })
            .collect();
        (header, rows)
    })
}

#[derive(Serialize)]
struct GaussianReport {
    divergence: GaussianDivergence,
    kl: f64,
}

fn gaussian(args: &ExampleArgs, tol: &Tolerances) -> Result<Status, InputError> {
    let mu = GaussianParams::new(args.b1, args.s1 * args.s1)?;
    let nu = GaussianParams::new(args.b2, args.s2 * args.s2)?;
    let divergence = gaussian_gamma_div(&mu, &nu, args.k)?;
    let report = GaussianReport {
        divergence,
        kl: gaussian_kl(&mu, &nu),
    };
    let body = Body {
        example: args.name,
        parameters: serde_json::json!({ "b1": args.b1, "s1": args.s1, "b2": args.b2, "s2": args.s2, "k": args.k }),
        closed_form: &report,
        numeric: None,
        residuals: Residuals {
            value: (divergence.re_part + divergence.w_part - divergence.value).abs(),
            re_part: 0.0,
            w_part: 0.0,
        },
    };
    emit(&args.output, "example", Status::Converged, tol, &body, || {
        let header = ["case", "value", "re_part", "w_part", "kl", "gamma_mean", "gamma_variance"]
            .map(String::from)
            .to_vec();
        let case = serde_json::to_value(divergence.case)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        let row = vec![
            case,
            num(divergence.value),
            num(divergence.re_part),
            num(divergence.w_part),
            num(report.kl),
            num(divergence.gamma_star.mean),
            num(divergence.gamma_star.variance),
        ];
        (header, vec![row])
    })
}

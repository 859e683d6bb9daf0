//! `gammadiv uq static` and `gammadiv uq diffusion`.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Subcommand};
use gammadiv::uqdiffusion::{
    acut_bound, gaussian_step_div, simulate_stationary_moment, stationary_moment_constant, ACUTBoundReport,
    OUModel, Perturbation, StepDivergence,
};
use gammadiv::uqstatic::{linearized_bound, sensitivity_minmax, uq_bounds, LinearizedBound, SensitivitySolution, UQBoundReport};
use serde::{Deserialize, Serialize};

use crate::inputs::{cost_spec, json_file, measure_file, observable_file, real_list, tolerances};
use crate::output::{emit, num, InputError, OutputArgs, Status};

pub const STATIC_CSV_HELP: &str = "\
CSV columns:
  with --observable: c, upper, lower
    one row per point of the c grid
  with --sensitivity: i, g_star, q_prime_star
    one row per atom";

pub const DIFFUSION_CSV_HELP: &str = "\
CSV columns: b, bound
  one row per sampled point of the b grid";

#[derive(Debug, Subcommand)]
pub enum UqCommand {
    /// Bounds on E_μ[f] − E_ν[f] for a static model.
    #[command(after_help = STATIC_CSV_HELP)]
    Static(StaticArgs),
    /// Bound on the long-run second moment of a perturbed Gauss-Markov
    /// chain.
    #[command(after_help = DIFFUSION_CSV_HELP)]
    Diffusion(DiffusionArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("problem").required(true).args(["observable", "sensitivity"])))]
pub struct StaticArgs {
    /// Measure file for the alternative model μ.
    #[arg(long, value_name = "FILE", requires = "observable")]
    pub mu: Option<PathBuf>,
    /// Measure file for the baseline model ν.
    #[arg(long, value_name = "FILE", requires = "observable")]
    pub nu: Option<PathBuf>,
    /// Observable `{"points": [[..]], "values": [..]}` given at every atom
    /// of ν.
    #[arg(long, value_name = "FILE", requires_all = ["mu", "nu"])]
    pub observable: Option<PathBuf>,
    /// Ground cost: scaled:K, halfsq or matrix:FILE.
    #[arg(long, default_value = "scaled:1")]
    pub cost: String,
    /// Comma-separated scale factors c to optimize over.
    #[arg(long, value_name = "LIST")]
    pub c_grid: Option<String>,
    /// Sensitivity instance `{"points", "p", "p_prime", "f"}`.
    #[arg(long, value_name = "FILE")]
    pub sensitivity: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DiffusionArgs {
    /// Mean-reversion rate.
    #[arg(long)]
    pub a: f64,
    /// Noise scale.
    #[arg(long)]
    pub sigma: f64,
    /// Constant drift perturbation.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub u: f64,
    /// Constant noise multiplier.
    #[arg(long, default_value_t = 1.0)]
    pub v: f64,
    /// Steps per unit time.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// State at which the one-step divergence is reported.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x: f64,
    /// Lipschitz constant of the derivative for the one-step divergence.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Also estimate the moment by simulating the perturbed chain.
    #[arg(long, requires = "seed")]
    pub simulate: bool,
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Steps per replica, burn-in included.
    #[arg(long, default_value_t = 1_250_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 8)]
    pub replicas: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn run(cmd: &UqCommand) -> Result<Status, InputError> {
    match cmd {
        UqCommand::Static(args) => match &args.sensitivity {
            Some(path) => sensitivity(args, path),
            None => bounds(args),
        },
        UqCommand::Diffusion(args) => diffusion(args),
    }
}

#[derive(Serialize)]
struct BoundsBody<'a> {
    cost: &'a str,
    bounds: UQBoundReport,
    /// Small-perturbation estimate; absent when f is constant on ν.
    linearized: Option<LinearizedBound>,
}

fn bounds(args: &StaticArgs) -> Result<Status, InputError> {
    let tol = tolerances(None)?;
    let (Some(mu), Some(nu), Some(obs)) = (&args.mu, &args.nu, &args.observable) else {
        return Err(InputError("--mu, --nu and --observable are required together".into()));
    };
    let mu = measure_file(mu)?;
    let nu = measure_file(nu)?;
    let cost = cost_spec(&args.cost)?;
    let f = observable_file(obs, &cost)?;
    let grid = args.c_grid.as_deref().map(real_list).transpose()?;
    let report = uq_bounds(&f, &nu, &mu, &cost, grid.as_deref())?;
    let fv: Vec<f64> = nu.points().iter().map(|x| f.value_at(x).unwrap_or(0.0)).collect();
    let mean = nu.weights().iter().zip(&fv).map(|(w, v)| w * v).sum::<f64>();
    let variance = nu.weights().iter().zip(&fv).map(|(w, v)| w * (v - mean).powi(2)).sum::<f64>();
    let linearized = if variance > 0.0 {
        Some(linearized_bound(&f, &nu, &mu, &cost)?)
    } else {
        None
    };
    let body = BoundsBody {
        cost: &args.cost,
        bounds: report,
        linearized,
    };
    emit(&args.output, "uq static", Status::Converged, &tol, &body, || {
        let header = ["c", "upper", "lower"].map(String::from).to_vec();
        let rows = body
            .bounds
            .sweep
            .iter()
            .map(|p| vec![num(p.c), num(p.upper), num(p.lower)])
            .collect();
        (header, rows)
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SensitivityDoc {
    points: Vec<Vec<f64>>,
    p: Vec<f64>,
    p_prime: Vec<f64>,
    f: Vec<f64>,
}

#[derive(Serialize)]
struct SensitivityBody {
    sensitivity: SensitivitySolution,
}

fn sensitivity(args: &StaticArgs, path: &PathBuf) -> Result<Status, InputError> {
    let tol = tolerances(None)?;
    let doc: SensitivityDoc = json_file(path)?;
    let solution = sensitivity_minmax(&doc.points, &doc.p, &doc.p_prime, &doc.f)?;
    let body = SensitivityBody { sensitivity: solution };
    emit(&args.output, "uq static", Status::Converged, &tol, &body, || {
        let header = ["i", "g_star", "q_prime_star"].map(String::from).to_vec();
        let s = &body.sensitivity;
        let rows = s
            .g_star
            .iter()
            .zip(&s.q_prime_star)
            .enumerate()
            .map(|(i, (g, q))| vec![i.to_string(), num(*g), num(*q)])
            .collect();
        (header, rows)
    })
}

#[derive(Serialize)]
struct DiffusionBody {
    model: OUModel,
    u: f64,
    v: f64,
    /// Stationary second moment of the perturbed diffusion.
    analytic_moment: f64,
    /// `bound − analytic_moment`.
    margin: f64,
    /// `bound − empirical estimate`, when simulated.
    empirical_margin: Option<f64>,
    seed: Option<u64>,
    acut: ACUTBoundReport,
    x: f64,
    k: f64,
    step_divergence: StepDivergence,
}

fn diffusion(args: &DiffusionArgs) -> Result<Status, InputError> {
    let tol = tolerances(None)?;
    let model = OUModel::new(args.a, args.sigma, args.n)?;
    let pert = Perturbation::constant(args.u, args.v)?;
    let mut acut = acut_bound(args.a, args.sigma, pert.u_sup(), pert.v_band())?;
    if args.simulate {
        let seed = args.seed.ok_or_else(|| InputError("--simulate needs --seed".into()))?;
        acut.empirical_moment = Some(simulate_stationary_moment(
            &model,
            &pert,
            args.steps,
            args.burn_in,
            seed,
            args.replicas,
        )?);
    }
    let analytic_moment = stationary_moment_constant(args.a, args.sigma, args.u, args.v);
    let body = DiffusionBody {
        model,
        u: args.u,
        v: args.v,
        analytic_moment,
        margin: acut.bound - analytic_moment,
        empirical_margin: acut.empirical_moment.as_ref().map(|m| acut.bound - m.estimate),
        seed: args.seed,
        step_divergence: gaussian_step_div(&model, args.x, &pert, args.k)?,
        acut,
        x: args.x,
        k: args.k,
    };
    emit(&args.output, "uq diffusion", Status::Converged, &tol, &body, || {
        let header = ["b", "bound"].map(String::from).to_vec();
        let rows = body.acut.sweep.iter().map(|p| vec![num(p.b), num(p.bound)]).collect();
        (header, rows)
    })
}

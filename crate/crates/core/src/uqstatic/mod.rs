//! Static uncertainty-quantification bounds.
//!
//! For a `c₀`-Lipschitz observable `f` and any `c > 0`,
//!
//! ```text
//! ∫f dμ − ∫f dν ≤ (1/c) log∫e^{c(f − ∫f dν)} dν + (1/c) G_{c·c₀}(μ‖ν)
//! ```
//!
//! and symmetrically for the lower bound with `−f`. [`uq_bounds`] sweeps `c`
//! over a grid. [`linearized_bound`] minimizes the small-entropy form
//! `√(2 Var_ν f) √R(γ‖ν) + W(μ, γ)`. [`sensitivity_minmax`] solves the
//! variance-constrained sensitivity problem for perturbed point clouds.

mod sensitivity;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::log_sum_exp;
use crate::gammadiv::{scaled_div, DivergenceReport};
use crate::measures::DiscreteMeasure;
use crate::scalar::{golden_min, log_grid};
use crate::transport::{kr_norm, ot_cost, CostSpec, Potential};
use crate::{Error, Result};

pub use sensitivity::{sensitivity_minmax, SensitivityCase, SensitivitySolution};

/// The three summands of a bound at a fixed `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    /// `(1/c) log∫e^{±c(f − ∫f dν)} dν`.
    pub risk: f64,
    /// `R(γ‖ν)/c`.
    pub entropy: f64,
    /// `W(μ, γ)` for the unscaled cost.
    pub transport: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.risk + self.entropy + self.transport
    }
}

/// Bounds at one grid value of `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub c: f64,
    pub upper: f64,
    pub lower: f64,
}

/// Result of [`uq_bounds`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UQBoundReport {
    /// Smallest upper bound on `∫f dμ − ∫f dν`.
    pub upper: f64,
    /// Largest lower bound on `∫f dμ − ∫f dν`.
    pub lower: f64,
    /// The `c` achieving `upper`. Zero means the `c → 0` limit `W(μ, ν)`
    /// was the tightest.
    pub optimal_c: f64,
    /// The intermediate measure achieving `upper`.
    pub optimal_gamma: DiscreteMeasure,
    /// Summands of `upper`.
    pub decomposition: BoundTerms,
    /// The `c` achieving `lower`, with the same convention as `optimal_c`.
    pub lower_c: f64,
    /// Summands of `−lower`.
    pub lower_decomposition: BoundTerms,
    /// `∫f dμ − ∫f dν` when `f` is given on every atom of `μ`.
    pub validation: Option<f64>,
    /// Both bounds at every grid value, in grid order.
    pub sweep: Vec<SweepPoint>,
}

/// Default grid: 41 values of `c` spaced evenly in `log` over `[10⁻², 10²]`.
pub fn default_c_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 41)
}

/// Accepts the best iterate of a solver that stopped early. Its primal
/// value is still the objective of a feasible `γ`, so bounds built from it
/// remain valid.
fn certified(result: Result<DivergenceReport>) -> Result<DivergenceReport> {
    match result {
        Err(Error::NonConvergence { best: Some(r), .. }) => Ok(*r),
        other => other,
    }
}

fn check_observable(f: &Potential, nu: &DiscreteMeasure, cost: &CostSpec) -> Result<Vec<f64>> {
    nu.require_probability()?;
    // Rebuilding under `cost` checks that `f` lies in the Lipschitz class.
    let f = Potential::new(f.points().to_vec(), f.values().to_vec(), cost.clone())?;
    let mut vals = Vec::with_capacity(nu.len());
    for x in nu.points() {
        vals.push(
            f.value_at(x)
                .ok_or_else(|| Error::invalid(format!("observable is not given at the reference atom {x:?}")))?,
        );
    }
    Ok(vals)
}

fn centered(vals: &[f64], w: &[f64]) -> (Vec<f64>, f64) {
    let mean: f64 = vals.iter().zip(w).map(|(v, p)| v * p).sum();
    let dev: Vec<f64> = vals.iter().map(|v| v - mean).collect();
    let var = dev.iter().zip(w).map(|(d, p)| d * d * p).sum();
    (dev, var)
}

/// Upper and lower bounds on `∫f dμ − ∫f dν` from the Γ-divergence for the
/// cost `c·cost`, optimized over `c` in `c_grid` (default
/// [`default_c_grid`]) and the `c → 0` limit `±W(μ, ν)`.
///
/// `f` must be given at every atom of `ν` and be Lipschitz for `cost`.
pub fn uq_bounds(
    f: &Potential,
    nu: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    cost: &CostSpec,
    c_grid: Option<&[f64]>,
) -> Result<UQBoundReport> {
    let fv = check_observable(f, nu, cost)?;
    mu.require_probability()?;
    let grid = c_grid.map_or_else(default_c_grid, <[f64]>::to_vec);
    if grid.is_empty() || grid.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
        return Err(Error::invalid("c grid must be nonempty, positive and finite"));
    }
    let (dev, _) = centered(&fv, nu.weights());
    let neg: Vec<f64> = dev.iter().map(|d| -d).collect();

    let evaluated: Vec<Result<(f64, BoundTerms, BoundTerms, DiscreteMeasure)>> = grid
        .par_iter()
        .map(|&c| {
            let rep = certified(scaled_div(mu, nu, cost, c))?;
            let scaled = |v: &[f64]| {
                let cv: Vec<f64> = v.iter().map(|d| c * d).collect();
                log_sum_exp(&cv, nu.weights()) / c
            };
            let entropy = rep.re_part / c;
            let transport = rep.w_part / c;
            let up = BoundTerms {
                risk: scaled(&dev),
                entropy,
                transport,
            };
            let down = BoundTerms {
                risk: scaled(&neg),
                entropy,
                transport,
            };
            Ok((c, up, down, rep.gamma_star))
        })
        .collect();

    let w0 = ot_cost(mu, nu, cost)?;
    let limit = BoundTerms {
        risk: 0.0,
        entropy: 0.0,
        transport: w0,
    };
    let mut best_up = (0.0, limit, nu.clone());
    let mut best_down = (0.0, limit);
    let mut sweep = Vec::with_capacity(grid.len());
    for item in evaluated {
        let (c, up, down, gamma) = item?;
        sweep.push(SweepPoint {
            c,
            upper: up.total(),
            lower: -down.total(),
        });
        if up.total() < best_up.1.total() {
            best_up = (c, up, gamma);
        }
        if down.total() < best_down.1.total() {
            best_down = (c, down);
        }
    }

    let fmu: Option<f64> = mu
        .points()
        .iter()
        .zip(mu.weights())
        .map(|(x, w)| f.value_at(x).map(|v| v * w))
        .sum();
    let fnu: f64 = fv.iter().zip(nu.weights()).map(|(v, w)| v * w).sum();
    let validation = fmu.map(|m| m - fnu);

    Ok(UQBoundReport {
        upper: best_up.1.total(),
        lower: -best_down.1.total(),
        optimal_c: best_up.0,
        optimal_gamma: best_up.2,
        decomposition: best_up.1,
        lower_c: best_down.0,
        lower_decomposition: best_down.1,
        validation,
        sweep,
    })
}

/// Result of [`linearized_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizedBound {
    /// `√(2 Var_ν f) √R(γ*‖ν) + W(μ, γ*)`.
    pub value: f64,
    pub gamma_star: DiscreteMeasure,
    /// `R(γ*‖ν)`, the size of the neglected remainder.
    pub re_part: f64,
    /// `W(μ, γ*)`.
    pub w_part: f64,
    /// The entropy-transport trade-off `b` at which `γ*` minimizes
    /// `R(γ‖ν) + b W(μ, γ)`. Zero means `γ* = ν`.
    pub b: f64,
}

/// Minimizes `√(2 Var_ν f) √R(γ‖ν) + W(μ, γ)` over `γ ≪ ν`.
///
/// Both terms are convex in `γ` and increasing along the objective, so the
/// minimizer lies on the curve of minimizers of `R(γ‖ν) + b W(μ, γ)`,
/// `b ∈ [0, ∞]`. The curve is scanned on a logarithmic grid in `b`, then
/// refined by golden-section search around the best grid value.
pub fn linearized_bound(f: &Potential, nu: &DiscreteMeasure, mu: &DiscreteMeasure, cost: &CostSpec) -> Result<LinearizedBound> {
    let fv = check_observable(f, nu, cost)?;
    mu.require_probability()?;
    let (_, var) = centered(&fv, nu.weights());
    if !(var > 0.0) {
        return Err(Error::Domain(
            "linearized bound needs a non-constant observable; use uq_bounds for Var = 0".into(),
        ));
    }
    let a = (2.0 * var).sqrt();
    let w0 = ot_cost(mu, nu, cost)?;
    let at = |b: f64| -> Result<LinearizedBound> {
        let rep = certified(scaled_div(mu, nu, cost, b))?;
        let w = rep.w_part / b;
        Ok(LinearizedBound {
            value: a * rep.re_part.max(0.0).sqrt() + w,
            gamma_star: rep.gamma_star,
            re_part: rep.re_part,
            w_part: w,
            b,
        })
    };
    let mut best = LinearizedBound {
        value: w0,
        gamma_star: nu.clone(),
        re_part: 0.0,
        w_part: w0,
        b: 0.0,
    };
    if w0 == 0.0 {
        return Ok(best);
    }
    let grid = log_grid(1e-3, 1e4, 50);
    let evaluated: Vec<Result<LinearizedBound>> = grid.par_iter().map(|&b| at(b)).collect();
    let mut values = Vec::with_capacity(grid.len());
    for item in evaluated {
        values.push(item?);
    }
    let (imin, _) = values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.value.total_cmp(&y.1.value))
        .expect("grid is nonempty");
    let lo = grid[imin.saturating_sub(1)].ln();
    let hi = grid[(imin + 1).min(grid.len() - 1)].ln();
    let (lb, _) = golden_min(|t| at(t.exp()).map_or(f64::INFINITY, |r| r.value), lo, hi, 40);
    let refined = at(lb.exp())?;
    for cand in values.into_iter().chain(std::iter::once(refined)) {
        if cand.value < best.value {
            best = cand;
        }
    }
    Ok(best)
}

/// First-order prediction of `W(μ_ε, γ_ε)` for
/// `μ_ε = Σ p_i(ε) δ_{x_i(ε)}` and `γ_ε = Σ q_i(ε) δ_{x_i(0)}` with
/// `p(0) = q(0)` and the Euclidean cost:
/// `ε (Σ p_i ‖x_i′‖₂ + W(ρ, ρ̃))`, where `W(ρ, ρ̃)` is the dual norm of
/// `Σ (p_i′ − q_i′) δ_{x_i}`.
pub fn wasserstein_first_order(
    x: &[Vec<f64>],
    dx: &[Vec<f64>],
    p: &[f64],
    dp: &[f64],
    dq: &[f64],
    eps: f64,
) -> Result<f64> {
    let n = x.len();
    if [dx.len(), p.len(), dp.len(), dq.len()].iter().any(|&l| l != n) || n == 0 {
        return Err(Error::invalid("first-order expansion needs one entry per point in every argument"));
    }
    if x.iter().zip(dx).any(|(a, b)| a.len() != b.len() || a.len() != x[0].len()) {
        return Err(Error::invalid("point and velocity dimensions differ"));
    }
    let motion: f64 = p
        .iter()
        .zip(dx)
        .map(|(w, v)| w * v.iter().map(|c| c * c).sum::<f64>().sqrt())
        .sum();
    let diff: Vec<f64> = dp.iter().zip(dq).map(|(a, b)| a - b).collect();
    let reweight = kr_norm(x, &diff, &CostSpec::scaled_metric(1.0)?)?;
    Ok(eps * (motion + reweight))
}

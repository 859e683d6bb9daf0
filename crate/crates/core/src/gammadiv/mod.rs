//! Numeric Γ-divergence for Lipschitz classes defined by a transport cost.
//!
//! For `Γ = Lip(c)` the divergence has two equivalent forms:
//!
//! * dual: `G(μ‖ν) = sup_{g ∈ Lip(c)} ∫g dμ − log∫e^g dν`;
//! * primal: `G(μ‖ν) = inf_γ R(γ‖ν) + W_c(μ, γ)`.
//!
//! The optimal intermediate measure is `γ* = tilt(ν, g*)` and the optimal
//! potential satisfies `W_c(μ, γ*) = ∫g* d(μ − γ*)`.
//!
//! Both solvers are log-barrier interior-point methods. The primal one works
//! on the coupling between `μ` and `γ`. The dual one works on potential
//! values over `supp μ ∪ supp ν`. Each ends with an exact refinement that
//! reads the active Lipschitz constraints off the barrier iterate and solves
//! the resulting optimality system in closed form. One-dimensional problems
//! with a scaled Euclidean cost and many atoms use a banded dual barrier that
//! only needs constraints between neighbouring points.

mod banded;
mod dual;
mod primal;
mod problem;

use serde::{Deserialize, Serialize};

use crate::entropy::{log_sum_exp, rel_entropy};
use crate::measures::{DiscreteMeasure, MeasureKind, PointIndex};
use crate::tolerance::Tolerances;
use crate::transport::{extend_potential, ot_cost, ot_dual, CostSpec, Potential};
use crate::{Error, Result};

use problem::{Candidate, Problem};

/// Union sizes above which one-dimensional Euclidean problems use the banded
/// solver.
const BANDED_THRESHOLD: usize = 64;

/// Which algorithm produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// `ν` is a single atom, so `γ* = ν` and `G = W_c(μ, ν)`.
    SingleAtom,
    /// Barrier method on the coupling.
    Primal,
    /// Barrier method on the potential.
    Dual,
    /// Banded dual barrier for one-dimensional Euclidean costs.
    Banded,
}

/// Result of a Γ-divergence computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    /// Primal value `R(γ*‖ν) + W_c(μ, γ*)` for primal solves, dual value
    /// `∫g* dμ − log∫e^{g*} dν` for dual solves.
    pub value: f64,
    /// The optimal intermediate measure, supported in `supp ν`.
    pub gamma_star: DiscreteMeasure,
    /// The optimal potential on `supp μ ∪ supp ν`, zero at the
    /// lexicographically smallest point.
    pub g_star: Potential,
    /// `R(γ*‖ν)`.
    pub re_part: f64,
    /// `W_c(μ, γ*)`.
    pub w_part: f64,
    /// Primal value minus dual value of the returned pair.
    pub primal_dual_gap: f64,
    pub iterations: usize,
    pub solver: SolverKind,
}

impl DivergenceReport {
    /// Value of the primal certificate `R(γ*‖ν) + W_c(μ, γ*)`.
    pub fn primal_value(&self) -> f64 {
        self.re_part + self.w_part
    }
}

/// Residuals of the two optimality conditions for a candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// `max |dγ/dν − e^g/∫e^g dν|` over `supp ν`, or `+∞` when `γ` charges
    /// a point outside `supp ν`.
    pub residual_tilt: f64,
    /// `|W_c(μ, γ) − ∫g d(μ − γ)|`.
    pub residual_transport: f64,
    pub pass: bool,
}

fn check_inputs(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec) -> Result<()> {
    mu.require_probability()?;
    nu.require_probability()?;
    mu.require_dim(nu.dim())?;
    // Evaluating one pair validates explicit costs against the ground set.
    cost.eval(mu.point(0), nu.point(0))?;
    Ok(())
}

/// `G(μ‖ν)` by minimizing `R(γ‖ν) + W_c(μ, γ)` over `γ ≪ ν`.
pub fn gamma_div_primal(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec) -> Result<DivergenceReport> {
    gamma_div_primal_with(mu, nu, cost, &Tolerances::default())
}

/// [`gamma_div_primal`] with explicit tolerances.
pub fn gamma_div_primal_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostSpec,
    tol: &Tolerances,
) -> Result<DivergenceReport> {
    solve(mu, nu, cost, tol, Side::Primal)
}

/// `G(μ‖ν)` by maximizing `∫g dμ − log∫e^g dν` over `Lip(c)`.
pub fn gamma_div_dual(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec) -> Result<DivergenceReport> {
    gamma_div_dual_with(mu, nu, cost, &Tolerances::default())
}

/// [`gamma_div_dual`] with explicit tolerances.
pub fn gamma_div_dual_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostSpec,
    tol: &Tolerances,
) -> Result<DivergenceReport> {
    solve(mu, nu, cost, tol, Side::Dual)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Primal,
    Dual,
}

fn solve(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec, tol: &Tolerances, side: Side) -> Result<DivergenceReport> {
    check_inputs(mu, nu, cost)?;
    if nu.len() == 1 {
        return single_atom(mu, nu, cost);
    }
    if let (1, Some(k)) = (mu.dim(), cost.euclidean_scale()) {
        let union = crate::measures::union_points(mu.points(), nu.points());
        if union.len() > BANDED_THRESHOLD {
            return banded::solve(mu, nu, cost, k, tol, side == Side::Primal);
        }
    }
    let prob = Problem::new(mu, nu, cost)?;
    let (start, plan, iterations, solver_name, converged, residual) = match side {
        Side::Primal => {
            let out = primal::solve(&prob, tol);
            let g = prob.g_from_gamma(&out.gamma);
            (g, Some(out.plan), out.iterations, "primal barrier", out.converged, out.residual)
        }
        Side::Dual => {
            let out = dual::solve(&prob, tol);
            (out.g, None, out.iterations, "dual barrier", out.converged, out.residual)
        }
    };
    let mut best = prob.polish(&start)?;
    if let Some(plan) = plan {
        if let Some(cand) = prob.polish_plan(&plan)? {
            if cand.gap() < best.gap() {
                best = cand;
            }
        }
    }
    let kind = if side == Side::Primal { SolverKind::Primal } else { SolverKind::Dual };
    let report = prob.report(&best, side == Side::Primal, iterations, kind)?;
    let target = tol.gap_target(report.value);
    if !converged || report.primal_dual_gap > target {
        return Err(Error::NonConvergence {
            solver: solver_name,
            iterations,
            residual: report.primal_dual_gap.max(if converged { 0.0 } else { residual }),
            best: Some(Box::new(report)),
        });
    }
    Ok(report)
}

fn single_atom(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec) -> Result<DivergenceReport> {
    let (w, g) = ot_dual(mu, nu, cost)?;
    Ok(DivergenceReport {
        value: w,
        gamma_star: nu.clone(),
        g_star: g,
        re_part: 0.0,
        w_part: w,
        primal_dual_gap: 0.0,
        iterations: 0,
        solver: SolverKind::SingleAtom,
    })
}

/// Checks the tilt condition `dγ/dν = e^g/∫e^g dν` and the transport
/// condition `W_c(μ, γ) = ∫g d(μ − γ)` for a candidate optimal pair.
pub fn verify_pair(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    gamma: &DiscreteMeasure,
    g: &Potential,
    cost: &CostSpec,
) -> Result<VerifyReport> {
    verify_pair_with(mu, nu, gamma, g, cost, &Tolerances::default())
}

/// [`verify_pair`] with explicit tolerances.
pub fn verify_pair_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    gamma: &DiscreteMeasure,
    g: &Potential,
    cost: &CostSpec,
    tol: &Tolerances,
) -> Result<VerifyReport> {
    check_inputs(mu, nu, cost)?;
    gamma.require_probability()?;
    let index = PointIndex::new(nu.points());
    let outside = gamma.points().iter().any(|p| index.find(p).is_none());
    let residual_tilt = if outside {
        f64::INFINITY
    } else {
        let gv = g.eval_many(nu.points())?;
        let lse = log_sum_exp(&gv, nu.weights());
        let gw = gamma.weights_on(nu.points());
        gw.iter()
            .zip(nu.weights())
            .zip(&gv)
            .map(|((gj, nj), v)| (gj / nj - (v - lse).exp()).abs())
            .fold(0.0, f64::max)
    };
    let w = ot_cost(mu, gamma, cost)?;
    let residual_transport = (w - (g.integrate(mu)? - g.integrate(gamma)?)).abs();
    let pass = residual_tilt <= tol.verify_tol && residual_transport <= tol.verify_tol;
    Ok(VerifyReport {
        residual_tilt,
        residual_transport,
        pass,
    })
}

/// `lim_{ε↓0} (G(μ + ερ‖ν) − G(μ‖ν))/ε = ∫g̃* dρ`, where `g̃*` is the largest
/// Lipschitz extension of `g*` restricted to `supp ν`.
pub fn directional_derivative(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    rho: &DiscreteMeasure,
    cost: &CostSpec,
) -> Result<f64> {
    if rho.kind() != MeasureKind::Signed {
        return Err(Error::invalid("the direction must be a signed measure of total mass zero"));
    }
    rho.require_dim(mu.dim())?;
    let mu_index = PointIndex::new(mu.points());
    for (p, &w) in rho.points().iter().zip(rho.weights()) {
        if w < 0.0 && mu_index.find(p).is_none() {
            return Err(Error::invalid(format!(
                "direction removes mass at {p:?}, which is outside supp μ"
            )));
        }
    }
    if rho.weights().iter().all(|w| *w == 0.0) {
        return Ok(0.0);
    }
    let report = gamma_div_primal(mu, nu, cost)?;
    let base = report.g_star.restricted_to(nu.points());
    let values = extend_potential(&base, rho.points())?;
    Ok(values.iter().zip(rho.weights()).map(|(g, w)| g * w).sum())
}

/// `G_{bΓ}(μ‖ν)`: the divergence for the cost `b·c`.
pub fn scaled_div(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec, b: f64) -> Result<DivergenceReport> {
    gamma_div_primal(mu, nu, &cost.scaled(b)?)
}

/// The nearest-point approximation for large `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeBExpansion {
    /// `b·W_c(μ, γ*) + R(γ*‖ν)`.
    pub value: f64,
    /// Each atom of `μ` moved to its nearest point of `supp ν`.
    pub gamma_star: DiscreteMeasure,
    /// `W_c(μ, γ*)` for the unscaled cost.
    pub w_part: f64,
    /// `R(γ*‖ν)`.
    pub re_part: f64,
}

/// Moves every atom of `μ` to its unique nearest atom of `ν` and returns
/// `b·W_c(μ, γ*) + R(γ*‖ν)`, which bounds `scaled_div(b)` from above.
pub fn large_b_expansion(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec, b: f64) -> Result<LargeBExpansion> {
    check_inputs(mu, nu, cost)?;
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::invalid(format!("scale b = {b} must be positive and finite")));
    }
    let cmat = cost.matrix(mu.points(), nu.points())?;
    let q = nu.len();
    let mut mass = vec![0.0; q];
    for i in 0..mu.len() {
        let row = &cmat[i * q..(i + 1) * q];
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        if q > 1 {
            let (d0, d1) = (row[order[0]], row[order[1]]);
            if d1 - d0 <= 1e-12 * d0.abs().max(1.0) {
                let (first, second) = (order[0].min(order[1]), order[0].max(order[1]));
                return Err(Error::DistanceTie { atom: i, first, second });
            }
        }
        mass[order[0]] += mu.weights()[i];
    }
    let (pts, w): (Vec<_>, Vec<_>) = nu
        .points()
        .iter()
        .cloned()
        .zip(mass)
        .filter(|(_, m)| *m > 0.0)
        .unzip();
    let gamma_star = DiscreteMeasure::normalized(pts, w)?;
    let w_part = ot_cost(mu, &gamma_star, cost)?;
    let re_part = rel_entropy(&gamma_star, nu);
    Ok(LargeBExpansion {
        value: b * w_part + re_part,
        gamma_star,
        w_part,
        re_part,
    })
}

/// `G_{δΓ}(μ‖ν)/δ`, which tends to `W_c(μ, ν)` as `δ → 0`.
pub fn small_delta_ratio(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("δ = {delta} must be positive and finite")));
    }
    Ok(scaled_div(mu, nu, cost, delta)?.value / delta)
}

/// Builds the report fields shared by all discrete solvers.
fn assemble(
    nu: &DiscreteMeasure,
    points: Vec<Vec<f64>>,
    cand: &Candidate,
    cost: &CostSpec,
    primal: bool,
    iterations: usize,
    solver: SolverKind,
) -> Result<DivergenceReport> {
    let gamma_star = DiscreteMeasure::normalized(nu.points().to_vec(), cand.gamma.clone())?;
    let g_star = Potential::from_parts(points, cand.g.clone(), cost.clone()).normalized();
    Ok(DivergenceReport {
        value: if primal { cand.upper } else { cand.lower },
        gamma_star,
        g_star,
        re_part: cand.re,
        w_part: cand.w,
        primal_dual_gap: (cand.upper - cand.lower).max(0.0),
        iterations,
        solver,
    })
}

#[cfg(test)]
mod tests;

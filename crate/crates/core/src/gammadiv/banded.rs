//! Dual barrier method for one-dimensional problems with cost `k|x − y|`.
//!
//! On the line, the Lipschitz constraints between neighbouring points of the
//! sorted union imply all the others, so only `2(M − 1)` constraints remain.
//! The Newton matrix is tridiagonal minus a rank-one term, which is solved in
//! `O(M)` by the Thomas algorithm and the Sherman-Morrison formula.

use crate::entropy::{log_sum_exp, rel_entropy_weights, tilt_weights};
use crate::measures::{union_points, DiscreteMeasure, PointIndex};
use crate::tolerance::Tolerances;
use crate::transport::CostSpec;
use crate::{Error, Result};

use super::problem::Candidate;
use super::{assemble, DivergenceReport, SolverKind};

struct Line {
    h: Vec<f64>,
    k: f64,
    mu: Vec<f64>,
    nu: Vec<f64>,
}

impl Line {
    fn m(&self) -> usize {
        self.mu.len()
    }

    fn dual_value(&self, g: &[f64]) -> f64 {
        let lin: f64 = self.mu.iter().zip(g).map(|(w, v)| w * v).sum();
        lin - log_sum_exp(g, &self.nu)
    }

    fn slacks(&self, g: &[f64], l: usize) -> (f64, f64) {
        let d = g[l + 1] - g[l];
        let cap = self.k * self.h[l];
        (cap - d, cap + d)
    }

    fn barrier(&self, g: &[f64], t: f64) -> f64 {
        let mut total = -t * self.dual_value(g);
        for l in 0..self.h.len() {
            let (sp, sm) = self.slacks(g, l);
            if sp <= 0.0 || sm <= 0.0 {
                return f64::INFINITY;
            }
            total -= sp.ln() + sm.ln();
        }
        total
    }
}

pub(crate) fn solve(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostSpec,
    k: f64,
    tol: &Tolerances,
    primal: bool,
) -> Result<DivergenceReport> {
    let mut points = union_points(mu.points(), nu.points());
    points.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let index = PointIndex::new(&points);
    let nu_idx: Vec<usize> = nu.points().iter().map(|p| index.find(p).expect("ν atom in union")).collect();
    let line = Line {
        h: points.windows(2).map(|w| w[1][0] - w[0][0]).collect(),
        k,
        mu: mu.weights_on(&points),
        nu: nu.weights_on(&points),
    };
    let m = line.m();
    let constraints = 2.0 * (m - 1) as f64;
    let mut g = vec![0.0; m];
    let mut t = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    'outer: loop {
        for _ in 0..200 {
            if iterations >= tol.max_iter {
                break 'outer;
            }
            iterations += 1;
            let Some((delta, decrement)) = newton_direction(&line, &g, t) else { break };
            if decrement <= 1e-12 {
                break;
            }
            let mut step = 1.0_f64;
            for l in 0..m - 1 {
                let dd = delta[l + 1] - delta[l];
                let (sp, sm) = line.slacks(&g, l);
                if dd > 0.0 {
                    step = step.min(0.99 * sp / dd);
                } else if dd < 0.0 {
                    step = step.min(-0.99 * sm / dd);
                }
            }
            if decrement > 0.25 {
                let f0 = line.barrier(&g, t);
                while step > 1e-12 {
                    let trial: Vec<f64> = g.iter().zip(&delta).map(|(x, d)| x + step * d).collect();
                    if line.barrier(&trial, t) <= f0 - 0.25 * step * decrement {
                        break;
                    }
                    step *= 0.5;
                }
            }
            g.iter_mut().zip(&delta).for_each(|(x, d)| *x += step * d);
            if step < 1e-12 {
                break;
            }
        }
        if constraints / t <= 1e-11 * (1.0 + line.dual_value(&g).abs()) {
            converged = true;
            break;
        }
        t *= 10.0;
    }

    let cand = certify(&line, g, &nu_idx, nu.weights());
    let report = assemble(nu, points, &cand, cost, primal, iterations, SolverKind::Banded)?;
    if !converged || report.primal_dual_gap > tol.gap_target(report.value) {
        return Err(Error::NonConvergence {
            solver: "banded dual barrier",
            iterations,
            residual: report.primal_dual_gap,
            best: Some(Box::new(report)),
        });
    }
    Ok(report)
}

/// Tilted measure and both certificate values. The transport cost between
/// `μ` and `γ` on the line is `k ∫|F_μ − F_γ|`.
fn certify(line: &Line, g: Vec<f64>, nu_idx: &[usize], nu_w: &[f64]) -> Candidate {
    let tilted = tilt_weights(&g, &line.nu);
    let gamma: Vec<f64> = nu_idx.iter().map(|&u| tilted[u]).collect();
    let re = rel_entropy_weights(&gamma, nu_w);
    let mut diff = 0.0;
    let mut w = 0.0;
    for l in 0..line.h.len() {
        diff += line.mu[l] - tilted[l];
        w += diff.abs() * line.h[l];
    }
    let w = line.k * w;
    let lower = line.dual_value(&g);
    Candidate {
        g,
        gamma,
        re,
        w,
        upper: re + w,
        lower,
    }
}

/// Newton direction in the coordinates `g_1, …, g_{M−1}` with `g_0 = 0`.
fn newton_direction(line: &Line, g: &[f64], t: f64) -> Option<(Vec<f64>, f64)> {
    let m = line.m();
    let gamma = tilt_weights(g, &line.nu);
    let mut grad: Vec<f64> = (0..m).map(|a| -t * (line.mu[a] - gamma[a])).collect();
    let mut diag: Vec<f64> = gamma.iter().map(|x| t * x).collect();
    let mut off = vec![0.0; m - 1];
    for l in 0..m - 1 {
        let (sp, sm) = line.slacks(g, l);
        let first = 1.0 / sp - 1.0 / sm;
        let second = 1.0 / (sp * sp) + 1.0 / (sm * sm);
        grad[l + 1] += first;
        grad[l] -= first;
        diag[l] += second;
        diag[l + 1] += second;
        off[l] = -second;
    }
    // Free block: indices 1..m.
    let d = &diag[1..];
    let e = &off[1..];
    let rhs: Vec<f64> = grad[1..].iter().map(|x| -x).collect();
    let x1 = thomas(d, e, &rhs)?;
    let x2 = thomas(d, e, &gamma[1..])?;
    let gx1: f64 = gamma[1..].iter().zip(&x1).map(|(a, b)| a * b).sum();
    let gx2: f64 = gamma[1..].iter().zip(&x2).map(|(a, b)| a * b).sum();
    let denom = 1.0 - t * gx2;
    if denom <= 0.0 {
        return None;
    }
    let coef = t * gx1 / denom;
    let mut delta = vec![0.0; m];
    for a in 1..m {
        delta[a] = x1[a - 1] + coef * x2[a - 1];
    }
    let decrement = -grad.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>();
    decrement.is_finite().then_some((delta, decrement))
}

/// Solves a symmetric tridiagonal system with diagonal `d` and
/// off-diagonal `e`.
fn thomas(d: &[f64], e: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = d.len();
    let mut c = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut piv = d[0];
    if piv <= 0.0 {
        return None;
    }
    y[0] = b[0] / piv;
    for i in 1..n {
        c[i - 1] = e[i - 1] / piv;
        piv = d[i] - e[i - 1] * c[i - 1];
        if piv <= 0.0 {
            return None;
        }
        y[i] = (b[i] - e[i - 1] * y[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        y[i] -= c[i] * y[i + 1];
    }
    Some(y)
}

//! The variance-constrained sensitivity problem.
//!
//! For atoms `x_i` with weights `p_i`, a weight velocity `p′` (summing to
//! zero) and an observable `f`, the sensitivity bound is
//!
//! ```text
//! inf_{q′ ∈ ℝⁿ₀} sup_{g ∈ Γ₀} √Var_p(f) √(Σ q′ᵢ²/pᵢ) + Σ gᵢ (p′ᵢ − q′ᵢ)
//!   = sup { g·p′ : |gᵢ − gⱼ| ≤ ‖xᵢ − xⱼ‖₂, Var_p(g) ≤ Var_p(f) }.
//! ```
//!
//! The right-hand side is solved by a log-barrier method with `g₁ = 0`,
//! followed by an exact solve on the active constraints. The minimizing
//! `q′` is then read off the optimality conditions: it is `c·p∘(g − ḡ)` for
//! the smallest `c ≥ 0` that leaves `p′ − q′` in the normal cone of the
//! Lipschitz polytope at `g`, found by a small linear program.

use microlp::{ComparisonOp, OptimizationDirection, Problem as Lp};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::linalg::spd_solve;
use crate::tolerance::{MASS_TOL, POINT_DEDUP_EPS};
use crate::{Error, Result};

/// Which constraints are active at the optimal `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityCase {
    /// Only Lipschitz constraints are active; `q′ = 0`.
    TransportOnly,
    /// Only the variance constraint is active; `q′ = p′`.
    EntropyOnly,
    /// Both kinds are active; `q′ = c·p∘(g − ḡ)`.
    Mixed,
}

/// Result of [`sensitivity_minmax`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySolution {
    pub bound: f64,
    /// Optimal test function with `g₁ = 0`.
    pub g_star: Vec<f64>,
    /// Minimal-norm optimal weight velocity of the intermediate measure.
    pub q_prime_star: Vec<f64>,
    pub case: SensitivityCase,
    /// The constant `c` in `q′ = c·p∘(g − ḡ)`.
    pub multiplier: f64,
    /// `Var_p(f)`.
    pub variance_budget: f64,
}

/// Relative slack below which a constraint counts as active.
const ACTIVE_TOL: f64 = 1e-7;
/// Barrier stopping rule: `m/t ≤ BARRIER_GAP · ‖p′‖₁ · diam`.
const BARRIER_GAP: f64 = 1e-11;
const MAX_NEWTON: usize = 20_000;

struct Instance<'a> {
    n: usize,
    d: Vec<f64>,
    p: &'a [f64],
    pp: &'a [f64],
    v: f64,
}

impl Instance<'_> {
    fn slack(&self, g: &[f64], i: usize, j: usize) -> f64 {
        self.d[i * self.n + j] - g[i] + g[j]
    }

    fn variance(&self, g: &[f64]) -> f64 {
        let mean: f64 = g.iter().zip(self.p).map(|(a, b)| a * b).sum();
        g.iter().zip(self.p).map(|(a, b)| b * (a - mean) * (a - mean)).sum()
    }

    /// `p∘(g − ḡ)`, half the gradient of `Var_p`.
    fn centered_weighted(&self, g: &[f64]) -> Vec<f64> {
        let mean: f64 = g.iter().zip(self.p).map(|(a, b)| a * b).sum();
        g.iter().zip(self.p).map(|(a, b)| b * (a - mean)).collect()
    }

    fn objective(&self, g: &[f64]) -> f64 {
        g.iter().zip(self.pp).map(|(a, b)| a * b).sum()
    }

    fn barrier(&self, g: &[f64], t: f64) -> f64 {
        let h = self.v - self.variance(g);
        if h <= 0.0 {
            return f64::INFINITY;
        }
        let mut total = -t * self.objective(g) - h.ln();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    let s = self.slack(g, i, j);
                    if s <= 0.0 {
                        return f64::INFINITY;
                    }
                    total -= s.ln();
                }
            }
        }
        total
    }
}

fn validate(points: &[Vec<f64>], p: &[f64], p_prime: &[f64], f: &[f64]) -> Result<()> {
    let n = points.len();
    if n == 0 || p.len() != n || p_prime.len() != n || f.len() != n {
        return Err(Error::invalid("sensitivity problem needs one weight, velocity and value per point"));
    }
    let dim = points[0].len();
    if points.iter().any(|x| x.len() != dim) {
        return Err(Error::invalid("points have inconsistent dimension"));
    }
    let all_finite = points.iter().flatten().chain(p).chain(p_prime).chain(f).all(|v| v.is_finite());
    if !all_finite {
        return Err(Error::invalid("sensitivity inputs must be finite"));
    }
    if p.iter().any(|w| *w <= 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > MASS_TOL {
        return Err(Error::invalid("p must be a strictly positive probability vector"));
    }
    let spread: f64 = p_prime.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    if p_prime.iter().sum::<f64>().abs() > MASS_TOL * spread {
        return Err(Error::invalid("p′ must sum to zero"));
    }
    for i in 0..n {
        for j in i + 1..n {
            if euclid(&points[i], &points[j]) <= POINT_DEDUP_EPS {
                return Err(Error::invalid(format!("points {i} and {j} coincide")));
            }
        }
    }
    Ok(())
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Solves the variance-constrained sensitivity problem and recovers the
/// saddle point `(g*, q′*)`.
pub fn sensitivity_minmax(points: &[Vec<f64>], p: &[f64], p_prime: &[f64], f: &[f64]) -> Result<SensitivitySolution> {
    validate(points, p, p_prime, f)?;
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = euclid(&points[i], &points[j]);
        }
    }
    let inst = Instance {
        n,
        d,
        p,
        pp: p_prime,
        v: 0.0,
    };
    let v = inst.variance(f);
    let inst = Instance { v, ..inst };
    let zeros = vec![0.0; n];
    let norm1: f64 = p_prime.iter().map(|x| x.abs()).sum();
    if norm1 == 0.0 {
        return Ok(SensitivitySolution {
            bound: 0.0,
            g_star: zeros.clone(),
            q_prime_star: zeros,
            case: SensitivityCase::TransportOnly,
            multiplier: 0.0,
            variance_budget: v,
        });
    }
    if !(v > 0.0) {
        // Only constant test functions are feasible, so the bound is zero
        // and the entropy side absorbs the whole perturbation.
        return Ok(SensitivitySolution {
            bound: 0.0,
            g_star: zeros,
            q_prime_star: p_prime.to_vec(),
            case: SensitivityCase::EntropyOnly,
            multiplier: 0.0,
            variance_budget: v,
        });
    }

    let (g_bar, kkt_c) = barrier_solve(&inst)?;
    let scale = inst.d.iter().fold(0.0_f64, |m, x| m.max(*x));
    let tau = ACTIVE_TOL * scale;
    let g = polish(&inst, &g_bar, tau).unwrap_or(g_bar);

    let active: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && inst.slack(&g, i, j) <= tau)
        .collect();
    let var_active = v - inst.variance(&g) <= ACTIVE_TOL * v;
    let w = inst.centered_weighted(&g);
    let (case, multiplier) = match (active.is_empty(), var_active) {
        (_, false) => (SensitivityCase::TransportOnly, 0.0),
        (true, true) => {
            let ww: f64 = w.iter().map(|x| x * x).sum();
            let c = w.iter().zip(p_prime).map(|(a, b)| a * b).sum::<f64>() / ww;
            (SensitivityCase::EntropyOnly, c)
        }
        (false, true) => (SensitivityCase::Mixed, minimal_multiplier(&inst, &active, &w).unwrap_or(kkt_c)),
    };
    let q_prime_star = match case {
        SensitivityCase::TransportOnly => vec![0.0; n],
        SensitivityCase::EntropyOnly => p_prime.to_vec(),
        SensitivityCase::Mixed => w.iter().map(|x| multiplier * x).collect(),
    };
    Ok(SensitivitySolution {
        bound: inst.objective(&g),
        g_star: g,
        q_prime_star,
        case,
        multiplier,
        variance_budget: v,
    })
}

/// Barrier path following. Returns the final iterate and the estimate
/// `2/(t·(V − Var g))` of the variance multiplier.
fn barrier_solve(inst: &Instance) -> Result<(Vec<f64>, f64)> {
    let n = inst.n;
    let m = (n * (n - 1) + 1) as f64;
    let scale = inst.d.iter().fold(0.0_f64, |a, x| a.max(*x));
    let reference = inst.pp.iter().map(|x| x.abs()).sum::<f64>() * scale;
    let mut g = vec![0.0; n];
    let mut t = m / reference;
    let mut iterations = 0;
    loop {
        for _ in 0..100 {
            iterations += 1;
            if iterations > MAX_NEWTON {
                return Err(Error::NonConvergence {
                    solver: "sensitivity barrier",
                    iterations,
                    residual: m / t,
                    best: None,
                });
            }
            let Some((delta, decrement)) = newton_direction(inst, &g, t) else { break };
            if decrement <= 1e-14 {
                break;
            }
            let mut step = 1.0_f64;
            for i in 0..n {
                for j in 0..n {
                    let change = delta[j] - delta[i];
                    if i != j && change < 0.0 {
                        step = step.min(-0.99 * inst.slack(&g, i, j) / change);
                    }
                }
            }
            let f0 = inst.barrier(&g, t);
            let armijo = decrement > 0.25;
            while step > 1e-14 {
                let trial: Vec<f64> = g.iter().zip(&delta).map(|(x, dx)| x + step * dx).collect();
                let ft = inst.barrier(&trial, t);
                if ft.is_finite() && (!armijo || ft <= f0 - 0.25 * step * decrement) {
                    break;
                }
                step *= 0.5;
            }
            if step <= 1e-14 {
                break;
            }
            g.iter_mut().zip(&delta).for_each(|(x, dx)| *x += step * dx);
        }
        if m / t <= BARRIER_GAP * reference {
            let h = inst.v - inst.variance(&g);
            return Ok((g, 2.0 / (t * h)));
        }
        t *= 10.0;
    }
}

fn newton_direction(inst: &Instance, g: &[f64], t: f64) -> Option<(Vec<f64>, f64)> {
    let n = inst.n;
    let h = inst.v - inst.variance(g);
    let mg = inst.centered_weighted(g);
    let mut grad: Vec<f64> = (0..n).map(|i| -t * inst.pp[i] + 2.0 * mg[i] / h).collect();
    let mut hess = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let m_ij = if i == j { inst.p[i] } else { 0.0 } - inst.p[i] * inst.p[j];
            hess[(i, j)] += 2.0 * m_ij / h + 4.0 * mg[i] * mg[j] / (h * h);
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let s = inst.slack(g, i, j);
            grad[i] += 1.0 / s;
            grad[j] -= 1.0 / s;
            let k = 1.0 / (s * s);
            hess[(i, i)] += k;
            hess[(j, j)] += k;
            hess[(i, j)] -= k;
            hess[(j, i)] -= k;
        }
    }
    let free = n - 1;
    let reduced = hess.view((1, 1), (free, free)).into_owned();
    let rhs = DVector::from_iterator(free, grad[1..].iter().map(|x| -x));
    let step = spd_solve(reduced, &rhs)?;
    let mut delta = vec![0.0; n];
    delta[1..].copy_from_slice(step.as_slice());
    let decrement = -grad.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>();
    decrement.is_finite().then_some((delta, decrement))
}

/// Exact maximizer on the face cut out by the active constraints at `g_bar`.
/// Returns `None` when the face does not determine a feasible point at
/// least as good as `g_bar`.
fn polish(inst: &Instance, g_bar: &[f64], tau: f64) -> Option<Vec<f64>> {
    let n = inst.n;
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut pin = vec![0.0; n];
    pin[0] = 1.0;
    rows.push((pin, 0.0));
    for i in 0..n {
        for j in 0..n {
            if i != j && inst.slack(g_bar, i, j) <= tau {
                let mut r = vec![0.0; n];
                r[i] = 1.0;
                r[j] = -1.0;
                rows.push((r, inst.d[i * n + j]));
            }
        }
    }
    let a = DMatrix::from_fn(rows.len(), n, |r, c| rows[r].0[c]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let eig = SymmetricEigen::new(a.transpose() * &a);
    let top = eig.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(*x));
    let atb = a.transpose() * &b;
    let mut g0 = DVector::<f64>::zeros(n);
    let mut null: Vec<DVector<f64>> = Vec::new();
    for k in 0..n {
        let vk = eig.eigenvectors.column(k).into_owned();
        if eig.eigenvalues[k] > 1e-10 * top {
            g0 += &vk * (vk.dot(&atb) / eig.eigenvalues[k]);
        } else {
            null.push(vk);
        }
    }
    let scale = inst.d.iter().fold(0.0_f64, |m, x| m.max(*x));
    if (&a * &g0 - &b).amax() > 1e-9 * scale {
        return None;
    }
    let var_active = inst.v - inst.variance(g_bar) <= ACTIVE_TOL * inst.v;
    let pp = DVector::from_column_slice(inst.pp);
    let g = if null.is_empty() {
        g0
    } else {
        let nm = DMatrix::from_columns(&null);
        let cvec = nm.transpose() * &pp;
        let norm_pp = pp.amax();
        if cvec.amax() <= 1e-12 * norm_pp {
            let gb = DVector::from_column_slice(g_bar);
            &g0 + &nm * (nm.transpose() * (gb - &g0))
        } else if var_active {
            let mmat = DMatrix::from_fn(n, n, |i, j| if i == j { inst.p[i] } else { 0.0 } - inst.p[i] * inst.p[j]);
            let q = nm.transpose() * &mmat * &nm;
            let chol = q.clone().cholesky()?;
            let zc = -chol.solve(&(nm.transpose() * &mmat * &g0));
            let center = &g0 + &nm * &zc;
            let r = inst.v - (center.transpose() * &mmat * &center)[(0, 0)];
            let qc = chol.solve(&cvec);
            let denom = cvec.dot(&qc);
            if r < 0.0 || denom <= 0.0 {
                return None;
            }
            center + &nm * (qc * (r / denom).sqrt())
        } else {
            return None;
        }
    };
    let g: Vec<f64> = g.iter().map(|x| x - g[0]).collect();
    let feasible = (0..n).all(|i| (0..n).all(|j| i == j || inst.slack(&g, i, j) >= -1e-12 * scale))
        && inst.variance(&g) <= inst.v * (1.0 + 1e-12);
    let reference = inst.pp.iter().map(|x| x.abs()).sum::<f64>() * scale;
    (feasible && inst.objective(&g) >= inst.objective(g_bar) - 1e-9 * reference).then_some(g)
}

/// Smallest `c ≥ 0` with `p′ − c·w` in the cone spanned by `e_i − e_j` over
/// the active pairs, by linear programming.
fn minimal_multiplier(inst: &Instance, active: &[(usize, usize)], w: &[f64]) -> Option<f64> {
    let n = inst.n;
    let mut lp = Lp::new(OptimizationDirection::Minimize);
    let c = lp.add_var(1.0, (0.0, f64::INFINITY));
    let lambdas: Vec<_> = active.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    // The rows sum to zero, so the last one is implied by the others.
    for k in 0..n - 1 {
        let mut expr = vec![(c, w[k])];
        for (e, &(i, j)) in active.iter().enumerate() {
            if i == k {
                expr.push((lambdas[e], 1.0));
            } else if j == k {
                expr.push((lambdas[e], -1.0));
            }
        }
        lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, inst.pp[k]);
    }
    let sol = lp.solve().ok()?.into_solution().ok()?;
    Some(sol.var_value(c).max(0.0))
}

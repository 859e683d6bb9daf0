//! Log-barrier method on the potential.
//!
//! The variables are the potential values on `supp μ ∪ supp ν`, with the
//! first value pinned to zero. Every ordered pair of distinct points carries
//! the constraint `g(a) − g(b) < c(a, b)`.

use nalgebra::{DMatrix, DVector};

use crate::entropy::tilt_weights;
use crate::linalg::spd_solve;
use crate::tolerance::Tolerances;

use super::problem::Problem;

pub(crate) struct Outcome {
    pub g: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

fn barrier(prob: &Problem, g: &[f64], t: f64) -> f64 {
    let r = prob.r();
    let mut total = -t * prob.dual_value(g);
    for a in 0..r {
        for b in 0..r {
            if a != b {
                let s = prob.c[a * r + b] - g[a] + g[b];
                if s <= 0.0 {
                    return f64::INFINITY;
                }
                total -= s.ln();
            }
        }
    }
    total
}

pub(crate) fn solve(prob: &Problem, tol: &Tolerances) -> Outcome {
    let r = prob.r();
    let p = prob.p();
    let mut g = vec![0.0; r];
    let constraints = (r * (r - 1)) as f64;
    let mut t = 1.0;
    let mut iterations = 0;
    let mut mu_u = vec![0.0; r];
    mu_u[..p].copy_from_slice(prob.mu.weights());
    loop {
        for _ in 0..200 {
            if iterations >= tol.max_iter {
                return Outcome {
                    g,
                    iterations,
                    converged: false,
                    residual: constraints / t,
                };
            }
            iterations += 1;
            let Some((delta, decrement)) = newton_direction(prob, &mu_u, &g, t) else { break };
            if decrement <= 1e-12 {
                break;
            }
            let mut step = 1.0_f64;
            for a in 0..r {
                for b in 0..r {
                    if a != b {
                        let ds = delta[b] - delta[a];
                        if ds < 0.0 {
                            let s = prob.c[a * r + b] - g[a] + g[b];
                            step = step.min(-0.99 * s / ds);
                        }
                    }
                }
            }
            if decrement > 0.25 {
                let f0 = barrier(prob, &g, t);
                while step > 1e-12 {
                    let trial: Vec<f64> = g.iter().zip(&delta).map(|(x, d)| x + step * d).collect();
                    if barrier(prob, &trial, t) <= f0 - 0.25 * step * decrement {
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
        let value = prob.dual_value(&g);
        if constraints / t <= 1e-11 * (1.0 + value.abs()) {
            return Outcome {
                g,
                iterations,
                converged: true,
                residual: constraints / t,
            };
        }
        t *= 10.0;
    }
}

/// Newton direction of `−tΦ(g) − Σ log s` in the free coordinates `1..r`,
/// returned as a full vector with zero first entry, and the squared
/// Newton decrement.
fn newton_direction(prob: &Problem, mu_u: &[f64], g: &[f64], t: f64) -> Option<(Vec<f64>, f64)> {
    let r = prob.r();
    let tilted = tilt_weights(&prob.nu_values(g), prob.nu.weights());
    let mut gamma = vec![0.0; r];
    for (j, &u) in prob.nu_idx.iter().enumerate() {
        gamma[u] = tilted[j];
    }
    let mut grad: Vec<f64> = (0..r).map(|a| -t * (mu_u[a] - gamma[a])).collect();
    let mut hess = DMatrix::<f64>::zeros(r, r);
    for a in 0..r {
        hess[(a, a)] += t * gamma[a];
        for b in 0..r {
            hess[(a, b)] -= t * gamma[a] * gamma[b];
        }
    }
    for a in 0..r {
        for b in 0..r {
            if a == b {
                continue;
            }
            let s = prob.c[a * r + b] - g[a] + g[b];
            grad[a] += 1.0 / s;
            grad[b] -= 1.0 / s;
            let h = 1.0 / (s * s);
            hess[(a, a)] += h;
            hess[(b, b)] += h;
            hess[(a, b)] -= h;
            hess[(b, a)] -= h;
        }
    }
    let free = r - 1;
    let reduced = hess.view((1, 1), (free, free)).into_owned();
    let rhs = DVector::from_iterator(free, grad[1..].iter().map(|x| -x));
    let step = spd_solve(reduced, &rhs)?;
    let mut delta = vec![0.0; r];
    delta[1..].copy_from_slice(step.as_slice());
    let decrement = -grad.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>();
    decrement.is_finite().then_some((delta, decrement))
}

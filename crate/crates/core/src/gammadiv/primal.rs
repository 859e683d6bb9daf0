//! Log-barrier method on the coupling.
//!
//! The variable is a coupling `π` with row sums `μ`; its column sums are `γ`.
//! The objective `Σ c_ij π_ij + Σ_j γ_j log(γ_j/ν_j)` equals
//! `W_c(μ, γ) + R(γ‖ν)` at the minimum over couplings with the same column
//! sums. Each Newton step solves the equality-constrained system through
//! the row Schur complement. The Hessian of the objective plus the barrier
//! is block diagonal over columns, and each block is diagonal plus rank one.

use nalgebra::{DMatrix, DVector};

use crate::linalg::spd_solve;
use crate::tolerance::Tolerances;

use super::problem::Problem;

pub(crate) struct Outcome {
    pub gamma: Vec<f64>,
    /// The final coupling, row-major over atoms of `μ` then `ν`.
    pub plan: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

struct State<'p> {
    p: usize,
    q: usize,
    c: &'p [f64],
    nu: &'p [f64],
}

impl State<'_> {
    fn columns(&self, pi: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.q];
        for i in 0..self.p {
            for j in 0..self.q {
                g[j] += pi[i * self.q + j];
            }
        }
        g
    }

    fn objective(&self, pi: &[f64]) -> f64 {
        let gamma = self.columns(pi);
        let lin: f64 = pi.iter().zip(self.c).map(|(a, b)| a * b).sum();
        let ent: f64 = gamma
            .iter()
            .zip(self.nu)
            .map(|(g, n)| if *g > 0.0 { g * (g / n).ln() } else { 0.0 })
            .sum();
        lin + ent
    }

    fn barrier(&self, pi: &[f64], t: f64) -> f64 {
        if pi.iter().any(|x| *x <= 0.0) {
            return f64::INFINITY;
        }
        t * self.objective(pi) - pi.iter().map(|x| x.ln()).sum::<f64>()
    }
}

pub(crate) fn solve(prob: &Problem, tol: &Tolerances) -> Outcome {
    let (p, q) = (prob.p(), prob.q());
    let mu = prob.mu.weights();
    let st = State {
        p,
        q,
        c: &prob.c_mn,
        nu: prob.nu.weights(),
    };
    let mut pi: Vec<f64> = (0..p * q).map(|k| mu[k / q] * st.nu[k % q]).collect();
    let scale = 1.0 + prob.c_mn.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let m = (p * q) as f64;
    let mut t = 1.0 / scale;
    let mut iterations = 0;
    loop {
        for _ in 0..200 {
            if iterations >= tol.max_iter {
                return Outcome {
                    gamma: st.columns(&pi),
                    plan: pi,
                    iterations,
                    converged: false,
                    residual: m / t,
                };
            }
            iterations += 1;
            let Some((delta, decrement)) = newton_direction(&st, &pi, t) else { break };
            if decrement <= 1e-12 {
                break;
            }
            let mut step = fraction_to_boundary(&pi, &delta).min(1.0);
            if decrement > 0.25 {
                let f0 = st.barrier(&pi, t);
                let slope = -decrement;
                while step > 1e-12 {
                    let trial: Vec<f64> = pi.iter().zip(&delta).map(|(x, d)| x + step * d).collect();
                    if st.barrier(&trial, t) <= f0 + 0.25 * step * slope {
                        break;
                    }
                    step *= 0.5;
                }
            }
            for (x, d) in pi.iter_mut().zip(&delta) {
                *x = (*x + step * d).max(f64::MIN_POSITIVE);
            }
            for i in 0..p {
                let row = &mut pi[i * q..(i + 1) * q];
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x *= mu[i] / s);
            }
            if step < 1e-12 {
                break;
            }
        }
        let f = st.objective(&pi);
        if m / t <= 1e-11 * (1.0 + f.abs()) {
            return Outcome {
                gamma: st.columns(&pi),
                plan: pi,
                iterations,
                converged: true,
                residual: m / t,
            };
        }
        t *= 10.0;
    }
}

/// Largest step keeping every entry positive, shortened by 1%.
fn fraction_to_boundary(x: &[f64], d: &[f64]) -> f64 {
    0.99 * x
        .iter()
        .zip(d)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

/// Newton direction for the barrier function at parameter `t` subject to
/// fixed row sums, with the squared Newton decrement.
fn newton_direction(st: &State, pi: &[f64], t: f64) -> Option<(Vec<f64>, f64)> {
    let (p, q) = (st.p, st.q);
    let gamma = st.columns(pi);
    let grad: Vec<f64> = (0..p * q)
        .map(|k| {
            let j = k % q;
            t * (st.c[k] + (gamma[j] / st.nu[j]).ln() + 1.0) - 1.0 / pi[k]
        })
        .collect();
    let pp: Vec<f64> = pi.iter().map(|x| x * x).collect();
    // Per column: K_j = γ_j/t + Σ_i P_ij, and the sums leaving one row out.
    let mut others = vec![0.0; p * q];
    let mut kcol = vec![0.0; q];
    for j in 0..q {
        let mut prefix = 0.0;
        for i in 0..p {
            others[i * q + j] = prefix;
            prefix += pp[i * q + j];
        }
        let mut suffix = 0.0;
        for i in (0..p).rev() {
            others[i * q + j] += suffix;
            suffix += pp[i * q + j];
        }
        kcol[j] = gamma[j] / t + prefix;
    }
    let hinv = |v: &[f64]| -> Vec<f64> {
        let mut s = vec![0.0; q];
        for k in 0..p * q {
            s[k % q] += pp[k] * v[k];
        }
        (0..p * q).map(|k| pp[k] * v[k] - pp[k] * s[k % q] / kcol[k % q]).collect()
    };
    let y = hinv(&grad);
    let mut schur = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        for l in 0..p {
            let mut acc = 0.0;
            for j in 0..q {
                let k = kcol[j];
                if i == l {
                    acc += pp[i * q + j] * (gamma[j] / t + others[i * q + j]) / k;
                } else {
                    acc -= pp[i * q + j] * pp[l * q + j] / k;
                }
            }
            schur[(i, l)] = acc;
        }
    }
    let rhs = DVector::from_iterator(p, (0..p).map(|i| -y[i * q..(i + 1) * q].iter().sum::<f64>()));
    let w = spd_solve(schur, &rhs)?;
    let spread: Vec<f64> = (0..p * q).map(|k| w[k / q]).collect();
    let hw = hinv(&spread);
    let delta: Vec<f64> = y.iter().zip(&hw).map(|(a, b)| -(a + b)).collect();
    let decrement = -grad.iter().zip(&delta).map(|(g, d)| g * d).sum::<f64>();
    decrement.is_finite().then_some((delta, decrement))
}

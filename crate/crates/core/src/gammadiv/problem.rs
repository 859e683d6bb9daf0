//! Problem data shared by the discrete barrier solvers, certificate
//! evaluation and the active-set refinement.

use std::collections::VecDeque;

use crate::entropy::{log_sum_exp, rel_entropy_weights, tilt_weights};
use crate::measures::{union_points, DiscreteMeasure, PointIndex};
use crate::transport::{ot_cost, CostSpec};
use crate::Result;

use super::{assemble, DivergenceReport, SolverKind};

/// A feasible potential with its tilted measure and both certificate values.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    /// Potential values on the union of supports.
    pub g: Vec<f64>,
    /// `tilt(ν, g)` as weights on the atoms of `ν`.
    pub gamma: Vec<f64>,
    pub re: f64,
    pub w: f64,
    /// `R(γ‖ν) + W_c(μ, γ)`.
    pub upper: f64,
    /// `∫g dμ − log∫e^g dν`.
    pub lower: f64,
}

impl Candidate {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

pub(crate) struct Problem<'a> {
    pub mu: &'a DiscreteMeasure,
    pub nu: &'a DiscreteMeasure,
    pub cost: &'a CostSpec,
    /// `supp μ` in order, then the remaining atoms of `ν`.
    pub points: Vec<Vec<f64>>,
    /// Position in `points` of each atom of `ν`.
    pub nu_idx: Vec<usize>,
    /// Cost between union points, row-major.
    pub c: Vec<f64>,
    /// Cost from atoms of `μ` to atoms of `ν`, row-major.
    pub c_mn: Vec<f64>,
}

impl<'a> Problem<'a> {
    pub fn new(mu: &'a DiscreteMeasure, nu: &'a DiscreteMeasure, cost: &'a CostSpec) -> Result<Self> {
        let points = union_points(mu.points(), nu.points());
        let index = PointIndex::new(&points);
        let nu_idx = nu
            .points()
            .iter()
            .map(|p| index.find(p).expect("every atom of ν lies in the union"))
            .collect();
        let c = cost.matrix(&points, &points)?;
        let c_mn = cost.matrix(mu.points(), nu.points())?;
        Ok(Problem {
            mu,
            nu,
            cost,
            points,
            nu_idx,
            c,
            c_mn,
        })
    }

    pub fn p(&self) -> usize {
        self.mu.len()
    }

    pub fn q(&self) -> usize {
        self.nu.len()
    }

    pub fn r(&self) -> usize {
        self.points.len()
    }

    /// Largest feasible minorant `z ↦ min_w g(w) + c(z, w)`.
    pub fn closure(&self, g: &[f64]) -> Vec<f64> {
        let r = self.r();
        (0..r)
            .map(|z| (0..r).map(|w| g[w] + self.c[z * r + w]).fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// A potential consistent with a measure `γ ≪ ν`: `log(γ/ν)` on `supp ν`,
    /// extended to the union.
    pub fn g_from_gamma(&self, gamma: &[f64]) -> Vec<f64> {
        let r = self.r();
        let mut g = vec![f64::INFINITY; r];
        for (j, &u) in self.nu_idx.iter().enumerate() {
            g[u] = (gamma[j].max(f64::MIN_POSITIVE) / self.nu.weights()[j]).ln();
        }
        self.closure(&g)
    }

    /// `∫g dμ − log∫e^g dν` for union values.
    pub fn dual_value(&self, g: &[f64]) -> f64 {
        let lin: f64 = self.mu.weights().iter().zip(g).map(|(w, v)| w * v).sum();
        lin - log_sum_exp(&self.nu_values(g), self.nu.weights())
    }

    pub fn nu_values(&self, g: &[f64]) -> Vec<f64> {
        self.nu_idx.iter().map(|&u| g[u]).collect()
    }

    /// Certificates for a potential after making it feasible.
    pub fn evaluate(&self, g: &[f64]) -> Result<Candidate> {
        let g = self.closure(g);
        let gamma = tilt_weights(&self.nu_values(&g), self.nu.weights());
        let re = rel_entropy_weights(&gamma, self.nu.weights());
        let gamma_measure = DiscreteMeasure::normalized(self.nu.points().to_vec(), gamma.clone())?;
        let w = ot_cost(self.mu, &gamma_measure, self.cost)?;
        let lower = self.dual_value(&g);
        Ok(Candidate {
            g,
            gamma,
            re,
            w,
            upper: re + w,
            lower,
        })
    }

    /// Exact refinement of an approximate potential.
    ///
    /// Transport edges from `μ` to `ν` whose Lipschitz constraint is nearly
    /// tight are taken as the support of the optimal plan. Within each
    /// connected component the potential is fixed by the equalities
    /// `g(x) − g(y) = c(x, y)`. The free constant of a component is then set
    /// so that the tilted mass it receives equals the mass of `μ` it holds.
    /// Atoms of `ν` outside every component get the smallest value the
    /// constraints allow. The candidate with the smallest gap is returned.
    pub fn polish(&self, start: &[f64]) -> Result<Candidate> {
        let mut best = self.evaluate(start)?;
        let stop = 1e-14 * (1.0 + best.upper.abs());
        for tau in [1e-5, 1e-7, 1e-9, 1e-11] {
            let mut g = best.g.clone();
            for _ in 0..3 {
                if best.gap() <= stop {
                    return Ok(best);
                }
                let Some(next) = self.active_set_solve(&g, tau) else { break };
                let cand = self.evaluate(&next)?;
                g = cand.g.clone();
                if cand.gap() < best.gap() {
                    best = cand;
                }
            }
        }
        Ok(best)
    }

    fn active_set_solve(&self, g: &[f64], tau: f64) -> Option<Vec<f64>> {
        let (p, q) = (self.p(), self.q());
        let slack = |i: usize, j: usize| self.c_mn[i * q + j] - (g[i] - g[self.nu_idx[j]]);
        // Bipartite graph: rows 0..p, columns p..p+q.
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); p + q];
        for i in 0..p {
            let mut best_j = 0;
            for j in 0..q {
                let s = slack(i, j);
                if s < slack(i, best_j) {
                    best_j = j;
                }
                if s <= tau * (1.0 + self.c_mn[i * q + j].abs()) {
                    adj[i].push(p + j);
                    adj[p + j].push(i);
                }
            }
            if !adj[i].contains(&(p + best_j)) {
                adj[i].push(p + best_j);
                adj[p + best_j].push(i);
            }
        }
        self.solve_on_graph(&adj)
    }

    /// Refinement from an approximate optimal coupling. Entries above a
    /// relative threshold are taken as the support of the optimal plan and
    /// the best candidate over a few thresholds is returned.
    pub fn polish_plan(&self, plan: &[f64]) -> Result<Option<Candidate>> {
        let (p, q) = (self.p(), self.q());
        let mut best: Option<Candidate> = None;
        for thr in [1e-8, 1e-6, 1e-10, 1e-4] {
            let mut adj: Vec<Vec<usize>> = vec![Vec::new(); p + q];
            for i in 0..p {
                for j in 0..q {
                    if plan[i * q + j] > thr * self.mu.weights()[i] {
                        adj[i].push(p + j);
                        adj[p + j].push(i);
                    }
                }
            }
            let Some(g) = self.solve_on_graph(&adj) else { continue };
            let cand = self.evaluate(&g)?;
            if best.as_ref().map_or(true, |b| cand.gap() < b.gap()) {
                best = Some(cand);
            }
        }
        Ok(best)
    }

    /// Potential fixed by tightness along the edges of a bipartite graph
    /// between atoms of `μ` (nodes `0..p`) and atoms of `ν` (nodes `p..`),
    /// with one mass-balancing constant per connected component.
    fn solve_on_graph(&self, adj: &[Vec<usize>]) -> Option<Vec<f64>> {
        let (p, q, r) = (self.p(), self.q(), self.r());
        let mut val = vec![f64::NAN; p + q];
        let mut comp = vec![usize::MAX; p + q];
        let mut out = vec![f64::NAN; r];
        let mut assigned = vec![false; r];
        let mut queue = VecDeque::new();
        for root in 0..p {
            if comp[root] != usize::MAX {
                continue;
            }
            let mut members = vec![root];
            comp[root] = root;
            val[root] = 0.0;
            queue.push_back(root);
            while let Some(a) = queue.pop_front() {
                for &b in &adj[a] {
                    if comp[b] != usize::MAX {
                        continue;
                    }
                    comp[b] = root;
                    val[b] = if a < p {
                        val[a] - self.c_mn[a * q + (b - p)]
                    } else {
                        val[a] + self.c_mn[b * q + (a - p)]
                    };
                    members.push(b);
                    queue.push_back(b);
                }
            }
            let mass: f64 = members.iter().filter(|&&m| m < p).map(|&m| self.mu.weights()[m]).sum();
            let (vals, weights): (Vec<f64>, Vec<f64>) = members
                .iter()
                .filter(|&&m| m >= p)
                .map(|&m| (val[m], self.nu.weights()[m - p]))
                .unzip();
            if vals.is_empty() {
                return None;
            }
            let offset = mass.ln() - log_sum_exp(&vals, &weights);
            for &m in &members {
                let u = if m < p { m } else { self.nu_idx[m - p] };
                if !assigned[u] {
                    out[u] = val[m] + offset;
                    assigned[u] = true;
                }
            }
        }
        for j in 0..q {
            let u = self.nu_idx[j];
            if assigned[u] {
                continue;
            }
            out[u] = (0..r)
                .filter(|&w| assigned[w])
                .map(|w| out[w] - self.c[w * r + u])
                .fold(f64::NEG_INFINITY, f64::max);
        }
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    pub fn report(&self, cand: &Candidate, primal: bool, iterations: usize, solver: SolverKind) -> Result<DivergenceReport> {
        assemble(self.nu, self.points.clone(), cand, self.cost, primal, iterations, solver)
    }
}

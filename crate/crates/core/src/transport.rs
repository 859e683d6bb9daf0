//! Optimal-transport costs, couplings and Kantorovich potentials.
//!
//! Transport problems between finitely supported measures are solved exactly
//! by a primal network simplex on the bipartite transportation graph. In one
//! dimension with a scaled Euclidean cost, [`w1_cdf`] evaluates the same
//! quantity as `∫|F_μ − F_ν| dx`.


use serde::{Deserialize, Serialize};

use crate::measures::{lex_cmp, union_points, DiscreteMeasure, PointIndex};
use crate::tolerance::{COST_TRI_TOL, DUALITY_GAP_TOL, LIP_TOL, MASS_TOL};
use crate::{Error, Result};

/// The ground cost underlying a [`CostSpec`], before scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostKind {
    /// Euclidean distance `‖x − y‖₂`.
    Euclidean,
    /// `½|x² − y²|` on the half-line `x, y ≥ 0`.
    HalfSquareGap,
    /// A cost matrix over an explicit list of ground points.
    Explicit {
        ground: Vec<Vec<f64>>,
        matrix: Vec<Vec<f64>>,
    },
}

/// Transport cost `c(x, y) = scale · base(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    kind: CostKind,
    scale: f64,
    symmetric: bool,
}

impl CostSpec {
    /// `k·‖x − y‖₂`.
    pub fn scaled_metric(k: f64) -> Result<Self> {
        check_scale(k)?;
        Ok(CostSpec {
            kind: CostKind::Euclidean,
            scale: k,
            symmetric: true,
        })
    }

    /// `½|x² − y²|` on `ℝ₊`. The triangle inequality holds analytically.
    pub fn half_square_gap() -> Self {
        CostSpec {
            kind: CostKind::HalfSquareGap,
            scale: 1.0,
            symmetric: true,
        }
    }

    /// Explicit cost matrix indexed by `ground` points.
    ///
    /// The matrix must be square, nonnegative, zero exactly on the diagonal
    /// and satisfy the triangle inequality within [`COST_TRI_TOL`].
    pub fn explicit(ground: Vec<Vec<f64>>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = ground.len();
        if n == 0 || matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidCost(format!(
                "cost matrix must be {n}×{n} to match the ground points"
            )));
        }
        let dim = ground[0].len();
        if ground.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidCost("ground points have inconsistent dimension".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if crate::measures::same_point(&ground[i], &ground[j]) {
                    return Err(Error::InvalidCost(format!("ground points {j} and {i} coincide")));
                }
            }
        }
        for (i, row) in matrix.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::InvalidCost(format!("entry ({i},{j}) = {c} is not finite and nonnegative")));
                }
                if i == j && c != 0.0 {
                    return Err(Error::InvalidCost(format!("diagonal entry ({i},{i}) = {c} is not zero")));
                }
                if i != j && c == 0.0 {
                    return Err(Error::InvalidCost(format!("off-diagonal entry ({i},{j}) is zero")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let excess = matrix[i][k] - matrix[i][j] - matrix[j][k];
                    if excess > COST_TRI_TOL {
                        return Err(Error::InvalidCost(format!(
                            "triangle inequality fails: c({i},{k}) exceeds c({i},{j}) + c({j},{k}) by {excess:.3e}"
                        )));
                    }
                }
            }
        }
        let symmetric = (0..n).all(|i| (0..i).all(|j| (matrix[i][j] - matrix[j][i]).abs() <= COST_TRI_TOL));
        Ok(CostSpec {
            kind: CostKind::Explicit { ground, matrix },
            scale: 1.0,
            symmetric,
        })
    }

    /// The same cost multiplied by `b > 0`.
    pub fn scaled(&self, b: f64) -> Result<Self> {
        check_scale(b)?;
        Ok(CostSpec {
            kind: self.kind.clone(),
            scale: self.scale * b,
            symmetric: self.symmetric,
        })
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `Some(k)` when the cost is `k·|x − y|`, which in one dimension makes
    /// the CDF formula and sorted sweeps available.
    pub fn euclidean_scale(&self) -> Option<f64> {
        matches!(self.kind, CostKind::Euclidean).then_some(self.scale)
    }

    /// Evaluates `c(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        let base = match &self.kind {
            CostKind::Euclidean => euclid(x, y),
            CostKind::HalfSquareGap => {
                half_square_gap(x, y)?
            }
            CostKind::Explicit { ground, matrix } => {
                let i = ground_index(ground, x)?;
                let j = ground_index(ground, y)?;
                matrix[i][j]
            }
        };
        Ok(self.scale * base)
    }

    /// Row-major cost matrix `c(xs[i], ys[j])`.
    pub fn matrix(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        match &self.kind {
            CostKind::Explicit { ground, matrix } => {
                let index = PointIndex::new(ground);
                let locate = |p: &Vec<f64>| {
                    index
                        .find(p)
                        .ok_or_else(|| Error::InvalidCost(format!("point {p:?} is not a ground point of the cost matrix")))
                };
                let xi: Vec<usize> = xs.iter().map(locate).collect::<Result<_>>()?;
                let yj: Vec<usize> = ys.iter().map(locate).collect::<Result<_>>()?;
                for &i in &xi {
                    out.extend(yj.iter().map(|&j| self.scale * matrix[i][j]));
                }
            }
            _ => {
                for x in xs {
                    for y in ys {
                        out.push(self.eval(x, y)?);
                    }
                }
            }
        }
        Ok(out)
    }
}

fn check_scale(k: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidCost(format!("cost scale {k} must be positive and finite")));
    }
    Ok(())
}

fn euclid(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn half_square_gap(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != 1 {
        return Err(Error::InvalidCost("half-square-gap cost is one-dimensional".into()));
    }
    if x[0] < 0.0 || y[0] < 0.0 {
        return Err(Error::InvalidCost(format!(
            "half-square-gap cost needs nonnegative points, got {} and {}",
            x[0], y[0]
        )));
    }
    Ok(0.5 * (x[0] * x[0] - y[0] * y[0]).abs())
}

fn ground_index(ground: &[Vec<f64>], x: &[f64]) -> Result<usize> {
    ground
        .iter()
        .position(|g| crate::measures::same_point(g, x))
        .ok_or_else(|| Error::InvalidCost(format!("point {x:?} is not a ground point of the cost matrix")))
}

/// One cell of a transport plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
}

/// An optimal coupling stored sparsely by its positive cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub rows: DiscreteMeasure,
    pub cols: DiscreteMeasure,
    pub entries: Vec<PlanEntry>,
    pub cost: f64,
}

/// `∫|F_μ − F_ν| dx` over the merged breakpoints of two 1-D measures.
pub fn w1_cdf(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    mu.require_dim(1)?;
    nu.require_dim(1)?;
    mu.require_probability()?;
    nu.require_probability()?;
    Ok(w1_sorted_events(mu, nu))
}

fn w1_sorted_events(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let mut events: Vec<(f64, f64)> = mu.points().iter().map(|p| p[0]).zip(mu.weights().iter().copied()).collect();
    events.extend(nu.points().iter().map(|p| p[0]).zip(nu.weights().iter().map(|w| -w)));
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut diff = 0.0;
    let mut total = 0.0;
    for k in 0..events.len() {
        diff += events[k].1;
        if let Some(next) = events.get(k + 1) {
            total += diff.abs() * (next.0 - events[k].0);
        }
    }
    total
}

/// Exact optimal transport between two probability measures.
pub fn ot_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec) -> Result<TransportPlan> {
    mu.require_probability()?;
    nu.require_probability()?;
    mu.require_dim(nu.dim())?;
    let cmat = cost.matrix(mu.points(), nu.points())?;
    let sol = transport_simplex(mu.weights(), nu.weights(), &cmat, default_pivot_cap(mu.len(), nu.len()))?;
    let entries = sol
        .basis
        .iter()
        .filter(|b| b.2 > 0.0)
        .map(|&(i, j, mass)| PlanEntry { i, j, mass })
        .collect();
    Ok(TransportPlan {
        rows: mu.clone(),
        cols: nu.clone(),
        entries,
        cost: sol.cost,
    })
}

/// Optimal transport cost only.
pub fn ot_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec) -> Result<f64> {
    if mu.dim() == 1 {
        if let Some(k) = cost.euclidean_scale() {
            mu.require_probability()?;
            nu.require_probability()?;
            return Ok(k * w1_sorted_events(mu, nu));
        }
    }
    Ok(ot_lp(mu, nu, cost)?.cost)
}

/// Kantorovich dual: the maximizing potential `g` on `supp μ ∪ supp ν` of
/// `∫g d(μ − ν)` over `g(x) − g(y) ≤ c(x, y)`, normalized to vanish at the
/// lexicographically smallest support point.
pub fn ot_dual(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec) -> Result<(f64, Potential)> {
    mu.require_probability()?;
    nu.require_probability()?;
    mu.require_dim(nu.dim())?;
    let cmat = cost.matrix(mu.points(), nu.points())?;
    let sol = transport_simplex(mu.weights(), nu.weights(), &cmat, default_pivot_cap(mu.len(), nu.len()))?;
    // With zero cost every feasible potential is optimal; the constant one
    // is returned instead of an arbitrary degenerate basis potential.
    let base_values: Vec<f64> = if sol.cost == 0.0 {
        vec![0.0; nu.len()]
    } else {
        sol.v.iter().map(|v| -v).collect()
    };
    let base = Potential::from_parts(nu.points().to_vec(), base_values, cost.clone());
    let union = union_points(mu.points(), nu.points());
    let values = extend_potential(&base, &union)?;
    let g = Potential::from_parts(union, values, cost.clone()).normalized();
    let value = g.integrate(mu)? - g.integrate(nu)?;
    let scale = sol.cost.abs().max(1.0);
    if (value - sol.cost).abs() > DUALITY_GAP_TOL * scale {
        return Err(Error::NonConvergence {
            solver: "transport dual",
            iterations: sol.pivots,
            residual: (value - sol.cost).abs(),
            best: None,
        });
    }
    Ok((value, g))
}

/// `sup{∫g dr : g(x) − g(y) ≤ c(x, y)}` for a signed weight vector `r` of
/// total mass zero on `points`, computed as the transport cost between the
/// positive and negative parts.
pub fn kr_norm(points: &[Vec<f64>], r: &[f64], cost: &CostSpec) -> Result<f64> {
    if points.len() != r.len() {
        return Err(Error::invalid("kr_norm: points and weights differ in length"));
    }
    let total: f64 = r.iter().sum();
    let scale: f64 = r.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
    if total.abs() > MASS_TOL * scale {
        return Err(Error::invalid(format!("kr_norm: signed weights sum to {total}, expected 0")));
    }
    let pos_idx: Vec<usize> = (0..r.len()).filter(|&i| r[i] > 0.0).collect();
    let neg_idx: Vec<usize> = (0..r.len()).filter(|&i| r[i] < 0.0).collect();
    let mass: f64 = pos_idx.iter().map(|&i| r[i]).sum();
    if pos_idx.is_empty() || neg_idx.is_empty() || mass <= 0.0 {
        return Ok(0.0);
    }
    let neg_mass: f64 = neg_idx.iter().map(|&i| -r[i]).sum();
    let a: Vec<f64> = pos_idx.iter().map(|&i| r[i] / mass).collect();
    let b: Vec<f64> = neg_idx.iter().map(|&i| -r[i] / neg_mass).collect();
    let xs: Vec<Vec<f64>> = pos_idx.iter().map(|&i| points[i].clone()).collect();
    let ys: Vec<Vec<f64>> = neg_idx.iter().map(|&i| points[i].clone()).collect();
    let cmat = cost.matrix(&xs, &ys)?;
    let sol = transport_simplex(&a, &b, &cmat, default_pivot_cap(a.len(), b.len()))?;
    Ok(mass * sol.cost)
}

/// Values of a test function on a finite point set, tied to the cost that
/// defines its Lipschitz class `g(x) − g(y) ≤ c(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    cost: CostSpec,
}

impl Potential {
    /// Builds a potential and checks the Lipschitz constraint on all base
    /// pairs within [`LIP_TOL`].
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>, cost: CostSpec) -> Result<Self> {
        if points.len() != values.len() || points.is_empty() {
            return Err(Error::invalid("potential needs one value per base point"));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("potential base points have inconsistent dimension"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("potential values must be finite"));
        }
        let g = Potential { points, values, cost };
        let viol = g.max_violation()?;
        let scale = g.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        if viol > LIP_TOL * scale {
            return Err(Error::invalid(format!("potential violates the Lipschitz constraint by {viol:.3e}")));
        }
        Ok(g)
    }

    pub(crate) fn from_parts(points: Vec<Vec<f64>>, values: Vec<f64>, cost: CostSpec) -> Self {
        Potential { points, values, cost }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    /// Stored value at a base point.
    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        self.points
            .iter()
            .position(|p| crate::measures::same_point(p, x))
            .map(|i| self.values[i])
    }

    /// Values at `queries`: base values where available, the largest
    /// Lipschitz extension elsewhere.
    pub fn eval_many(&self, queries: &[Vec<f64>]) -> Result<Vec<f64>> {
        let index = PointIndex::new(&self.points);
        let missing: Vec<Vec<f64>> = queries.iter().filter(|q| index.find(q).is_none()).cloned().collect();
        let extended = if missing.is_empty() {
            Vec::new()
        } else {
            extend_potential(self, &missing)?
        };
        let mut ext = extended.into_iter();
        Ok(queries
            .iter()
            .map(|q| match index.find(q) {
                Some(i) => self.values[i],
                None => ext.next().unwrap_or(f64::NAN),
            })
            .collect())
    }

    /// `∫g dμ`, evaluating off-base atoms by extension.
    pub fn integrate(&self, mu: &DiscreteMeasure) -> Result<f64> {
        let vals = self.eval_many(mu.points())?;
        Ok(vals.iter().zip(mu.weights()).map(|(g, w)| g * w).sum())
    }

    /// Largest violation of `g(x) − g(y) ≤ c(x, y)` over base pairs.
    pub fn max_violation(&self) -> Result<f64> {
        let n = self.points.len();
        if n < 2 {
            return Ok(0.0);
        }
        if let (Some(k), 1) = (self.cost.euclidean_scale(), self.points[0].len()) {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| self.points[a][0].total_cmp(&self.points[b][0]));
            return Ok(order
                .windows(2)
                .map(|w| {
                    let h = self.points[w[1]][0] - self.points[w[0]][0];
                    (self.values[w[1]] - self.values[w[0]]).abs() - k * h
                })
                .fold(0.0, f64::max));
        }
        let c = self.cost.matrix(&self.points, &self.points)?;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(self.values[i] - self.values[j] - c[i * n + j]);
            }
        }
        Ok(worst)
    }

    /// Shifted so the value at the lexicographically smallest base point is 0.
    pub fn normalized(mut self) -> Self {
        if let Some(i) = (0..self.points.len()).min_by(|&a, &b| lex_cmp(&self.points[a], &self.points[b])) {
            let shift = self.values[i];
            self.values.iter_mut().for_each(|v| *v -= shift);
        }
        self
    }

    /// Restriction to the base points that lie in `points`.
    pub fn restricted_to(&self, points: &[Vec<f64>]) -> Potential {
        let index = PointIndex::new(points);
        let (p, v): (Vec<_>, Vec<_>) = self
            .points
            .iter()
            .zip(&self.values)
            .filter(|(p, _)| index.find(p).is_some())
            .map(|(p, v)| (p.clone(), *v))
            .unzip();
        Potential::from_parts(p, v, self.cost.clone())
    }
}

/// Largest Lipschitz extension `x ↦ min_y {g(y) + c(x, y)}` over base points.
///
/// At base points of a feasible potential this reproduces the base values.
pub fn extend_potential(g: &Potential, queries: &[Vec<f64>]) -> Result<Vec<f64>> {
    if let (Some(k), 1) = (g.cost.euclidean_scale(), g.points.first().map_or(0, Vec::len)) {
        return Ok(extend_1d(g, k, queries));
    }
    let c = g.cost.matrix(queries, &g.points)?;
    let m = g.points.len();
    Ok((0..queries.len())
        .map(|q| {
            (0..m)
                .map(|j| g.values[j] + c[q * m + j])
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

fn extend_1d(g: &Potential, k: f64, queries: &[Vec<f64>]) -> Vec<f64> {
    let mut base: Vec<(f64, f64)> = g.points.iter().map(|p| p[0]).zip(g.values.iter().copied()).collect();
    base.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = base.len();
    let mut prefix = vec![f64::INFINITY; n];
    let mut suffix = vec![f64::INFINITY; n];
    let mut acc = f64::INFINITY;
    for i in 0..n {
        acc = acc.min(base[i].1 - k * base[i].0);
        prefix[i] = acc;
    }
    acc = f64::INFINITY;
    for i in (0..n).rev() {
        acc = acc.min(base[i].1 + k * base[i].0);
        suffix[i] = acc;
    }
    queries
        .iter()
        .map(|q| {
            let x = q[0];
            let split = base.partition_point(|b| b.0 <= x);
            let left = if split > 0 { k * x + prefix[split - 1] } else { f64::INFINITY };
            let right = if split < n { -k * x + suffix[split] } else { f64::INFINITY };
            let exact = if split > 0 && base[split - 1].0 == x { base[split - 1].1 } else { f64::INFINITY };
            left.min(right).min(exact)
        })
        .collect()
}

/// Result of the transportation simplex.
#[derive(Debug, Clone)]
pub(crate) struct SimplexSolution {
    /// Basic cells `(row, column, flow)`; exactly `n + m − 1` of them.
    pub basis: Vec<(usize, usize, f64)>,
    /// Column potentials, with `u_i + v_j = c_ij` on basic cells.
    pub v: Vec<f64>,
    pub cost: f64,
    pub pivots: usize,
}

pub(crate) fn default_pivot_cap(n: usize, m: usize) -> usize {
    50 * (n + m) * (n.min(m) + 1) + 10_000
}

/// Primal network simplex for the balanced transportation problem
/// `min Σ c_ij x_ij` subject to row sums `a` and column sums `b`.
///
/// The start is the north-west corner basis. Entering cells are chosen by
/// the most negative reduced cost; after a long run of degenerate pivots the
/// rule switches to smallest-index selection, which cannot cycle.
pub(crate) fn transport_simplex(a: &[f64], b: &[f64], c: &[f64], max_pivots: usize) -> Result<SimplexSolution> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 || c.len() != n * m {
        return Err(Error::invalid("transport problem has inconsistent sizes"));
    }
    let cmax = c.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let tol = 1e-12 * cmax.max(f64::MIN_POSITIVE);

    let mut basis = northwest_corner(a, b);
    let mut tree = Tree::new(n, m);
    let mut pivots = 0;
    let mut degenerate_run = 0;
    loop {
        tree.rebuild(&basis, c, m);
        let bland = degenerate_run > 2 * (n + m);
        let Some((ei, ej)) = price(&tree, c, n, m, tol, bland) else {
            break;
        };
        if pivots >= max_pivots {
            return Err(Error::NonConvergence {
                solver: "transport simplex",
                iterations: pivots,
                residual: f64::NAN,
                best: None,
            });
        }
        let cycle = tree.cycle(ei, n + ej);
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (k, &cell) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                let f = basis[cell].2;
                let better = f < theta
                    || (f == theta && bland && {
                        let (li, lj, _) = basis[leave];
                        let (ci, cj, _) = basis[cell];
                        (ci * m + cj) < (li * m + lj)
                    });
                if better {
                    theta = f;
                    leave = cell;
                }
            }
        }
        for (k, &cell) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                basis[cell].2 -= theta;
            } else {
                basis[cell].2 += theta;
            }
        }
        basis[leave] = (ei, ej, theta);
        degenerate_run = if theta > 0.0 { 0 } else { degenerate_run + 1 };
        pivots += 1;
    }
    for cell in basis.iter_mut() {
        cell.2 = cell.2.max(0.0);
    }
    let cost = basis.iter().map(|&(i, j, x)| x * c[i * m + j]).sum();
    Ok(SimplexSolution {
        basis,
        v: tree.pot[n..].to_vec(),
        cost,
        pivots,
    })
}

fn northwest_corner(a: &[f64], b: &[f64]) -> Vec<(usize, usize, f64)> {
    let (n, m) = (a.len(), b.len());
    let mut ra = a.to_vec();
    let mut rb = b.to_vec();
    let mut out = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = ra[i].min(rb[j]).max(0.0);
        ra[i] -= x;
        rb[j] -= x;
        out.push((i, j, x));
        if i == n - 1 && j == m - 1 {
            break;
        }
        if j == m - 1 || (i < n - 1 && ra[i] <= rb[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

fn price(tree: &Tree, c: &[f64], n: usize, m: usize, tol: f64, bland: bool) -> Option<(usize, usize)> {
    let mut best = -tol;
    let mut arg = None;
    for i in 0..n {
        let ui = tree.pot[i];
        let row = &c[i * m..(i + 1) * m];
        for j in 0..m {
            let r = row[j] - ui - tree.pot[n + j];
            if r < best {
                if bland {
                    return Some((i, j));
                }
                best = r;
                arg = Some((i, j));
            }
        }
    }
    arg
}

/// Spanning tree of the current basis rooted at row 0, with node potentials.
struct Tree {
    n: usize,
    adj: Vec<Vec<(usize, usize)>>,
    parent: Vec<usize>,
    parent_cell: Vec<usize>,
    depth: Vec<usize>,
    pot: Vec<f64>,
    queue: Vec<usize>,
}

impl Tree {
    fn new(n: usize, m: usize) -> Self {
        let size = n + m;
        Tree {
            n,
            adj: vec![Vec::new(); size],
            parent: vec![usize::MAX; size],
            parent_cell: vec![usize::MAX; size],
            depth: vec![0; size],
            pot: vec![0.0; size],
            queue: Vec::with_capacity(size),
        }
    }

    fn rebuild(&mut self, basis: &[(usize, usize, f64)], c: &[f64], m: usize) {
        let n = self.n;
        for a in self.adj.iter_mut() {
            a.clear();
        }
        for (k, &(i, j, _)) in basis.iter().enumerate() {
            self.adj[i].push((n + j, k));
            self.adj[n + j].push((i, k));
        }
        self.parent.iter_mut().for_each(|p| *p = usize::MAX);
        self.queue.clear();
        self.queue.push(0);
        self.parent[0] = 0;
        self.depth[0] = 0;
        self.pot[0] = 0.0;
        let mut head = 0;
        while head < self.queue.len() {
            let node = self.queue[head];
            head += 1;
            for idx in 0..self.adj[node].len() {
                let (next, cell) = self.adj[node][idx];
                if self.parent[next] != usize::MAX {
                    continue;
                }
                self.parent[next] = node;
                self.parent_cell[next] = cell;
                self.depth[next] = self.depth[node] + 1;
                let (i, j, _) = basis[cell];
                let cij = c[i * m + j];
                self.pot[next] = cij - self.pot[node];
                self.queue.push(next);
            }
        }
    }

    /// Basic cells on the tree path from column node `col` to row node
    /// `row`, in order. Even positions lose flow when the entering cell
    /// `(row, col)` gains it.
    fn cycle(&self, row: usize, col: usize) -> Vec<usize> {
        let (mut a, mut b) = (row, col);
        let mut from_row = Vec::new();
        let mut from_col = Vec::new();
        while self.depth[a] > self.depth[b] {
            from_row.push(self.parent_cell[a]);
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            from_col.push(self.parent_cell[b]);
            b = self.parent[b];
        }
        while a != b {
            from_row.push(self.parent_cell[a]);
            a = self.parent[a];
            from_col.push(self.parent_cell[b]);
            b = self.parent[b];
        }
        from_col.extend(from_row.into_iter().rev());
        from_col
    }
}

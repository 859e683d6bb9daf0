//! Finitely supported measures, grid-discretized densities and their
//! elementary statistics.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::tolerance::{MASS_TOL, POINT_DEDUP_EPS};
use crate::{Error, Result};

/// Whether a [`DiscreteMeasure`] is a probability measure or a signed
/// perturbation direction with total mass zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Probability,
    Signed,
}

/// A finitely supported measure on `ℝ^m`.
///
/// Points closer than [`POINT_DEDUP_EPS`] are merged at construction. For
/// probability measures atoms with exactly zero weight are dropped, so the
/// stored points are the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    dim: usize,
    kind: MeasureKind,
}

impl DiscreteMeasure {
    /// Builds a probability measure. Weights must be nonnegative and sum to
    /// one within [`MASS_TOL`].
    pub fn probability(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let (points, weights, dim) = merge_atoms(points, weights)?;
        if let Some(w) = weights.iter().find(|w| **w < -MASS_TOL) {
            return Err(Error::invalid(format!("negative weight {w} in a probability measure")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::invalid(format!("probability weights sum to {total}, expected 1")));
        }
        let (points, weights): (Vec<_>, Vec<_>) = points
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .unzip();
        if points.is_empty() {
            return Err(Error::invalid("probability measure has empty support"));
        }
        Ok(DiscreteMeasure {
            points,
            weights,
            dim,
            kind: MeasureKind::Probability,
        })
    }

    /// Builds a probability measure after rescaling nonnegative weights to
    /// unit mass.
    pub fn normalized(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::invalid(format!("cannot normalize total mass {total}")));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self::probability(points, weights)
    }

    /// Builds a signed measure whose weights sum to zero within [`MASS_TOL`].
    pub fn signed(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let (points, weights, dim) = merge_atoms(points, weights)?;
        let total: f64 = weights.iter().sum();
        if total.abs() > MASS_TOL {
            return Err(Error::invalid(format!("signed measure has total mass {total}, expected 0")));
        }
        Ok(DiscreteMeasure {
            points,
            weights,
            dim,
            kind: MeasureKind::Signed,
        })
    }

    /// One-dimensional probability measure from atom locations and weights.
    pub fn from_1d(xs: &[f64], weights: &[f64]) -> Result<Self> {
        Self::probability(xs.iter().map(|&x| vec![x]).collect(), weights.to_vec())
    }

    /// Uniform probability measure on the given distinct points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::invalid("uniform measure needs at least one point"));
        }
        Self::probability(points, vec![1.0 / n as f64; n])
    }

    /// Unit point mass.
    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        Self::probability(vec![point], vec![1.0])
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Coordinates of a one-dimensional measure.
    pub fn xs(&self) -> Result<Vec<f64>> {
        self.require_dim(1)?;
        Ok(self.points.iter().map(|p| p[0]).collect())
    }

    /// Index of the atom at `x`, if any.
    pub fn find(&self, x: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| same_point(p, x))
    }

    /// Errors unless the measure lives in `ℝ^dim`.
    pub fn require_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim,
            });
        }
        Ok(())
    }

    /// Errors unless this is a probability measure.
    pub fn require_probability(&self) -> Result<()> {
        if self.kind != MeasureKind::Probability {
            return Err(Error::invalid("expected a probability measure"));
        }
        Ok(())
    }

    /// Weight of each point of `points` under this measure (zero off support).
    pub fn weights_on(&self, points: &[Vec<f64>]) -> Vec<f64> {
        let index = PointIndex::new(&self.points);
        points
            .iter()
            .map(|p| index.find(p).map_or(0.0, |i| self.weights[i]))
            .collect()
    }

    /// `λ·self + (1−λ)·other` for probability measures.
    pub fn mixture(&self, other: &DiscreteMeasure, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid(format!("mixture weight {lambda} outside [0,1]")));
        }
        self.require_dim(other.dim)?;
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        let mut weights: Vec<f64> = self.weights.iter().map(|w| lambda * w).collect();
        weights.extend(other.weights.iter().map(|w| (1.0 - lambda) * w));
        Self::probability(points, weights)
    }

    /// The probability measure `self + ε·rho`, failing if any weight turns
    /// negative.
    pub fn perturbed(&self, rho: &DiscreteMeasure, eps: f64) -> Result<Self> {
        self.require_dim(rho.dim)?;
        let mut points = self.points.clone();
        points.extend(rho.points.iter().cloned());
        let mut weights = self.weights.clone();
        weights.extend(rho.weights.iter().map(|w| eps * w));
        let (points, weights, _) = merge_atoms(points, weights)?;
        if let Some(w) = weights.iter().find(|w| **w < -MASS_TOL) {
            return Err(Error::invalid(format!(
                "perturbation by ε = {eps} produces negative weight {w}"
            )));
        }
        let weights = weights.into_iter().map(|w| w.max(0.0)).collect();
        Self::probability(points, weights)
    }
}

/// A density on `[left, right]` discretized on `n_cells` uniform cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    left: f64,
    right: f64,
    density: Vec<f64>,
}

impl GridDensity {
    /// Validates a density whose Riemann sum is one within [`MASS_TOL`].
    pub fn new(left: f64, right: f64, density: Vec<f64>) -> Result<Self> {
        let g = Self::unchecked(left, right, density)?;
        let mass = g.mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::invalid(format!("grid density integrates to {mass}, expected 1")));
        }
        Ok(g)
    }

    /// Rescales a nonnegative density to unit mass.
    pub fn from_unnormalized(left: f64, right: f64, density: Vec<f64>) -> Result<Self> {
        let mut g = Self::unchecked(left, right, density)?;
        let mass = g.mass();
        if !(mass > 0.0) {
            return Err(Error::invalid("grid density has zero mass"));
        }
        g.density.iter_mut().for_each(|d| *d /= mass);
        Ok(g)
    }

    /// Samples `f` at the cell midpoints of `n_cells` cells and normalizes.
    pub fn from_fn(left: f64, right: f64, n_cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::invalid("grid needs at least one cell"));
        }
        let h = (right - left) / n_cells as f64;
        let density = (0..n_cells).map(|i| f(left + (i as f64 + 0.5) * h)).collect();
        Self::from_unnormalized(left, right, density)
    }

    /// Uniform density on `[left, right]`.
    pub fn uniform(left: f64, right: f64, n_cells: usize) -> Result<Self> {
        Self::from_fn(left, right, n_cells, |_| 1.0)
    }

    fn unchecked(left: f64, right: f64, density: Vec<f64>) -> Result<Self> {
        if !(left.is_finite() && right.is_finite() && right > left) {
            return Err(Error::invalid(format!("invalid grid interval [{left}, {right}]")));
        }
        if density.is_empty() {
            return Err(Error::invalid("grid needs at least one cell"));
        }
        if let Some(d) = density.iter().find(|d| !d.is_finite() || **d < 0.0) {
            return Err(Error::invalid(format!("density value {d} is not finite and nonnegative")));
        }
        Ok(GridDensity {
            left,
            right,
            density,
        })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn n_cells(&self) -> usize {
        self.density.len()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn cell_width(&self) -> f64 {
        (self.right - self.left) / self.n_cells() as f64
    }

    pub fn midpoints(&self) -> Vec<f64> {
        let h = self.cell_width();
        (0..self.n_cells())
            .map(|i| self.left + (i as f64 + 0.5) * h)
            .collect()
    }

    fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.cell_width()
    }
}

/// Parameters of a univariate normal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::invalid(format!(
                "gaussian needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(GaussianParams { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Unnormalized log density.
    pub fn log_kernel(&self, x: f64) -> f64 {
        let z = x - self.mean;
        -0.5 * z * z / self.variance
    }

    /// Cell-midpoint discretization on `mean ± half_width_sd·σ`.
    pub fn to_grid(&self, n_cells: usize, half_width_sd: f64) -> Result<GridDensity> {
        let s = self.std_dev();
        let (left, right) = (self.mean - half_width_sd * s, self.mean + half_width_sd * s);
        GridDensity::from_fn(left, right, n_cells, |x| self.log_kernel(x).exp())
    }
}

/// Cell-midpoint atoms with weights `density × cell width`, renormalized to
/// unit mass.
pub fn to_discrete(g: &GridDensity) -> DiscreteMeasure {
    let h = g.cell_width();
    let mids = g.midpoints();
    let total: f64 = g.density.iter().map(|d| d * h).sum();
    let (points, weights): (Vec<_>, Vec<_>) = mids
        .into_iter()
        .zip(&g.density)
        .filter(|(_, d)| **d > 0.0)
        .map(|(x, d)| (vec![x], d * h / total))
        .unzip();
    let total: f64 = weights.iter().sum();
    DiscreteMeasure {
        points,
        weights: weights.into_iter().map(|w| w / total).collect(),
        dim: 1,
        kind: MeasureKind::Probability,
    }
}

/// Raw moment `Σ wᵢ xᵢᵏ`, returned per coordinate.
///
/// For `m > 1` only `k ∈ {1, 2}` is supported.
pub fn moments(mu: &DiscreteMeasure, k: u32) -> Result<Vec<f64>> {
    mu.require_probability()?;
    if k == 0 {
        return Err(Error::invalid("moment order must be at least 1"));
    }
    if mu.dim > 1 && k > 2 {
        return Err(Error::invalid(format!(
            "moment order {k} is only supported for one-dimensional measures"
        )));
    }
    Ok((0..mu.dim)
        .map(|d| {
            mu.points
                .iter()
                .zip(&mu.weights)
                .map(|(p, w)| w * p[d].powi(k as i32))
                .sum()
        })
        .collect())
}

/// Right-continuous CDF as sorted `(breakpoint, cumulative mass)` pairs. The
/// final mass is exactly one.
pub fn cdf_values(mu: &DiscreteMeasure) -> Result<Vec<(f64, f64)>> {
    mu.require_dim(1)?;
    mu.require_probability()?;
    let mut atoms: Vec<(f64, f64)> = mu.points.iter().map(|p| p[0]).zip(mu.weights.iter().copied()).collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    let mut out: Vec<(f64, f64)> = atoms
        .into_iter()
        .map(|(x, w)| {
            acc += w;
            (x, acc)
        })
        .collect();
    if let Some(last) = out.last_mut() {
        last.1 = 1.0;
    }
    Ok(out)
}

/// Number of cells used for the `{"uniform": [a, b]}` shorthand.
pub const SHORTHAND_UNIFORM_CELLS: usize = 1000;
/// Number of cells used for the `{"gaussian": ...}` shorthand.
pub const SHORTHAND_GAUSSIAN_CELLS: usize = 2000;
/// Half-width, in standard deviations, of the gaussian shorthand grid.
pub const SHORTHAND_GAUSSIAN_HALF_WIDTH: f64 = 8.0;

/// A measure document as accepted on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    /// `{"points": [[..]], "weights": [..]}`
    Atoms {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    /// `{"grid": {"left": .., "right": .., "n": .., "density": [..]}}`
    Grid(GridDensity),
    /// `{"uniform": [a, b]}`
    Uniform(f64, f64),
    /// `{"gaussian": {"mean": .., "var": ..}}`
    Gaussian(GaussianParams),
    /// `{"dirac": [x, ...]}`
    Dirac(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomsDoc {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    left: f64,
    right: f64,
    n: usize,
    density: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianDoc {
    mean: f64,
    var: f64,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum TaggedDoc {
    Grid(GridDoc),
    Uniform([f64; 2]),
    Gaussian(GaussianDoc),
    Dirac(Vec<f64>),
}

impl MeasureSpec {
    /// Parses a measure document. Syntax errors carry line and column.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let is_atoms = value.as_object().is_some_and(|o| o.contains_key("points"));
        if is_atoms {
            let doc: AtomsDoc = serde_json::from_value(value).map_err(shape_error)?;
            return Ok(MeasureSpec::Atoms {
                points: doc.points,
                weights: doc.weights,
            });
        }
        let doc: TaggedDoc = serde_json::from_value(value).map_err(shape_error)?;
        Ok(match doc {
            TaggedDoc::Grid(g) => {
                if g.n != g.density.len() {
                    return Err(Error::invalid(format!(
                        "grid declares n = {} but lists {} density values",
                        g.n,
                        g.density.len()
                    )));
                }
                MeasureSpec::Grid(GridDensity::from_unnormalized(g.left, g.right, g.density)?)
            }
            TaggedDoc::Uniform([a, b]) => MeasureSpec::Uniform(a, b),
            TaggedDoc::Gaussian(g) => MeasureSpec::Gaussian(GaussianParams::new(g.mean, g.var)?),
            TaggedDoc::Dirac(x) => MeasureSpec::Dirac(x),
        })
    }

    /// Materializes the document as a probability measure.
    pub fn build(&self) -> Result<DiscreteMeasure> {
        match self {
            MeasureSpec::Atoms { points, weights } => {
                if points.len() != weights.len() {
                    return Err(Error::invalid(format!(
                        "{} points but {} weights",
                        points.len(),
                        weights.len()
                    )));
                }
                DiscreteMeasure::probability(points.clone(), weights.clone())
            }
            MeasureSpec::Grid(g) => Ok(to_discrete(g)),
            MeasureSpec::Uniform(a, b) => Ok(to_discrete(&GridDensity::uniform(*a, *b, SHORTHAND_UNIFORM_CELLS)?)),
            MeasureSpec::Gaussian(g) => Ok(to_discrete(&g.to_grid(SHORTHAND_GAUSSIAN_CELLS, SHORTHAND_GAUSSIAN_HALF_WIDTH)?)),
            MeasureSpec::Dirac(x) => DiscreteMeasure::dirac(x.clone()),
        }
    }
}

fn shape_error(e: serde_json::Error) -> Error {
    Error::invalid(format!("unrecognized measure document: {e}"))
}

/// `true` when two points agree within [`POINT_DEDUP_EPS`] in every
/// coordinate.
pub fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= POINT_DEDUP_EPS)
}

/// Lexicographic order on coordinates.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Union of two point lists without duplicates: the points of `a` in order,
/// followed by the points of `b` not already present.
pub fn union_points(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = a.to_vec();
    let index = PointIndex::new(a);
    out.extend(b.iter().filter(|p| index.find(p).is_none()).cloned());
    out
}

/// Point lookup with tolerance. One-dimensional sets use binary search.
pub(crate) struct PointIndex<'a> {
    points: &'a [Vec<f64>],
    sorted: Option<Vec<(f64, usize)>>,
}

impl<'a> PointIndex<'a> {
    pub(crate) fn new(points: &'a [Vec<f64>]) -> Self {
        let one_dim = points.first().is_some_and(|p| p.len() == 1);
        let sorted = (one_dim && points.len() > 16).then(|| {
            let mut s: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (p[0], i)).collect();
            s.sort_by(|a, b| a.0.total_cmp(&b.0));
            s
        });
        PointIndex { points, sorted }
    }

    pub(crate) fn find(&self, x: &[f64]) -> Option<usize> {
        match &self.sorted {
            Some(s) if x.len() == 1 => {
                let lo = x[0] - POINT_DEDUP_EPS;
                let start = s.partition_point(|(v, _)| *v < lo);
                s[start..]
                    .iter()
                    .take_while(|(v, _)| *v <= x[0] + POINT_DEDUP_EPS)
                    .map(|(_, i)| *i)
                    .next()
            }
            _ => self.points.iter().position(|p| same_point(p, x)),
        }
    }
}

/// Validates coordinates and weights and merges coincident points, keeping
/// the first occurrence's position.
fn merge_atoms(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<(Vec<Vec<f64>>, Vec<f64>, usize)> {
    if points.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    let dim = points.first().map_or(0, Vec::len);
    if points.is_empty() || dim == 0 {
        return Err(Error::invalid("measure needs at least one point of positive dimension"));
    }
    for p in &points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
        return Err(Error::invalid(format!("weight {w} is not finite")));
    }
    let mut out_points: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    let mut out_weights: Vec<f64> = Vec::with_capacity(points.len());
    if dim == 1 {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
        let mut rep = vec![usize::MAX; points.len()];
        let mut i = 0;
        while i < order.len() {
            let head = order[i];
            let mut j = i;
            let mut first = head;
            while j < order.len() && points[order[j]][0] - points[head][0] <= POINT_DEDUP_EPS {
                first = first.min(order[j]);
                j += 1;
            }
            for &k in &order[i..j] {
                rep[k] = first;
            }
            i = j;
        }
        let mut slot = vec![usize::MAX; points.len()];
        for k in 0..points.len() {
            let r = rep[k];
            if slot[r] == usize::MAX {
                slot[r] = out_points.len();
                out_points.push(points[r].clone());
                out_weights.push(0.0);
            }
            out_weights[slot[r]] += weights[k];
        }
    } else {
        for (p, w) in points.into_iter().zip(weights) {
            match out_points.iter().position(|q| same_point(q, &p)) {
                Some(i) => out_weights[i] += w,
                None => {
                    out_points.push(p);
                    out_weights.push(w);
                }
            }
        }
    }
    Ok((out_points, out_weights, dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unif(a: f64, b: f64, n: usize) -> DiscreteMeasure {
        to_discrete(&GridDensity::uniform(a, b, n).unwrap())
    }

    #[test]
    fn uniform_four_cells_gives_quarter_atoms() {
        let mu = unif(0.0, 1.0, 4);
        assert_eq!(mu.xs().unwrap(), vec![0.125, 0.375, 0.625, 0.875]);
        for w in mu.weights() {
            assert_abs_diff_eq!(*w, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn uniform_on_zero_two_gives_half_atoms() {
        let mu = unif(0.0, 2.0, 2);
        assert_eq!(mu.xs().unwrap(), vec![0.5, 1.5]);
        assert_abs_diff_eq!(mu.weights()[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn linear_density_matches_exact_cell_integrals() {
        let g = GridDensity::new(0.0, 1.0, vec![0.5, 1.5]).unwrap();
        let mu = to_discrete(&g);
        assert_abs_diff_eq!(mu.weights()[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(mu.weights()[1], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn unnormalized_grid_is_rejected_by_strict_constructor() {
        assert!(GridDensity::new(0.0, 1.0, vec![1.0, 2.0]).is_err());
        assert!(GridDensity::new(1.0, 0.0, vec![1.0]).is_err());
        assert!(GridDensity::new(0.0, 1.0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn moments_of_simple_measures() {
        let d = DiscreteMeasure::dirac(vec![0.0]).unwrap();
        assert_eq!(moments(&d, 2).unwrap(), vec![0.0]);
        let b = DiscreteMeasure::from_1d(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(moments(&b, 1).unwrap(), vec![0.5]);
        let u = unif(0.0, 1.0, 1000);
        assert_abs_diff_eq!(moments(&u, 2).unwrap()[0], 1.0 / 3.0, epsilon = 1e-3);
    }

    #[test]
    fn higher_moments_rejected_in_several_dimensions() {
        let m = DiscreteMeasure::dirac(vec![1.0, 2.0]).unwrap();
        assert_eq!(moments(&m, 2).unwrap(), vec![1.0, 4.0]);
        assert!(moments(&m, 3).is_err());
    }

    #[test]
    fn cdf_examples() {
        let d = DiscreteMeasure::dirac(vec![0.0]).unwrap();
        assert_eq!(cdf_values(&d).unwrap(), vec![(0.0, 1.0)]);
        let b = DiscreteMeasure::from_1d(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_eq!(cdf_values(&b).unwrap(), vec![(0.0, 0.5), (1.0, 1.0)]);
        let u = unif(0.0, 1.0, 4);
        let c = cdf_values(&u).unwrap();
        let masses: Vec<f64> = c.iter().map(|p| p.1).collect();
        for (m, e) in masses.iter().zip([0.25, 0.5, 0.75, 1.0]) {
            assert_abs_diff_eq!(*m, e, epsilon = 1e-15);
        }
        assert!(cdf_values(&DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap()).is_err());
    }

    #[test]
    fn coincident_points_merge() {
        let m = DiscreteMeasure::from_1d(&[0.0, 1.0, 1e-14], &[0.25, 0.5, 0.25]).unwrap();
        assert_eq!(m.len(), 2);
        assert_abs_diff_eq!(m.weights()[0], 0.5, epsilon = 1e-15);
        let m2 = DiscreteMeasure::probability(vec![vec![0.0, 0.0], vec![1e-13, 0.0]], vec![0.5, 0.5]).unwrap();
        assert_eq!(m2.len(), 1);
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(DiscreteMeasure::from_1d(&[0.0, 1.0], &[0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::from_1d(&[0.0, 1.0], &[1.5, -0.5]).is_err());
        assert!(DiscreteMeasure::signed(vec![vec![0.0], vec![1.0]], vec![1.0, -1.0]).is_ok());
        assert!(DiscreteMeasure::signed(vec![vec![0.0], vec![1.0]], vec![1.0, -0.5]).is_err());
        assert!(DiscreteMeasure::probability(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn zero_weights_are_dropped_from_support() {
        let m = DiscreteMeasure::from_1d(&[0.0, 1.0, 2.0], &[0.5, 0.0, 0.5]).unwrap();
        assert_eq!(m.xs().unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn perturbation_checks_feasibility() {
        let mu = DiscreteMeasure::from_1d(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let rho = DiscreteMeasure::signed(vec![vec![0.0], vec![2.0]], vec![-1.0, 1.0]).unwrap();
        let p = mu.perturbed(&rho, 0.1).unwrap();
        assert_abs_diff_eq!(p.weights_on(&[vec![2.0]])[0], 0.1, epsilon = 1e-15);
        assert!(mu.perturbed(&rho, 0.6).is_err());
    }

    #[test]
    fn json_documents_parse() {
        let a = MeasureSpec::from_json_str(r#"{"points": [[0.0],[1.0]], "weights": [0.5, 0.5]}"#).unwrap();
        assert_eq!(a.build().unwrap().len(), 2);
        let g = MeasureSpec::from_json_str(r#"{"grid": {"left": 0, "right": 1, "n": 2, "density": [1, 3]}}"#).unwrap();
        assert_abs_diff_eq!(g.build().unwrap().weights()[1], 0.75, epsilon = 1e-15);
        let u = MeasureSpec::from_json_str(r#"{"uniform": [0, 2]}"#).unwrap();
        assert_eq!(u.build().unwrap().len(), SHORTHAND_UNIFORM_CELLS);
        let n = MeasureSpec::from_json_str(r#"{"gaussian": {"mean": 1, "var": 4}}"#).unwrap();
        assert_abs_diff_eq!(moments(&n.build().unwrap(), 1).unwrap()[0], 1.0, epsilon = 1e-9);
        let d = MeasureSpec::from_json_str(r#"{"dirac": [3]}"#).unwrap();
        assert_eq!(d.build().unwrap().xs().unwrap(), vec![3.0]);
    }

    #[test]
    fn malformed_json_reports_position() {
        match MeasureSpec::from_json_str("{\n  \"dirac\": [1,\n}") {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column >= 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            MeasureSpec::from_json_str(r#"{"cauchy": [0, 1]}"#),
            Err(Error::InvalidInput(_))
        ));
    }
}

//! Exactly solvable instances of the Γ-divergence.
//!
//! * Uniform laws on nested intervals with the cost `|x − y|`.
//! * A common density restricted to `[0, 1]` and `[0, 1 + c]`.
//! * Uniform laws on a finite point set with one point added or removed.
//! * Gaussian laws with the class of functions whose derivative is
//!   `k`-Lipschitz.

use serde::{Deserialize, Serialize};

use crate::entropy::tilt_weights;
use crate::measures::{DiscreteMeasure, GaussianParams};
use crate::quad::integrate;
use crate::transport::{CostSpec, Potential};
use crate::{Error, Result};

/// Residual target for scalar root finding.
const ROOT_TOL: f64 = 1e-12;

/// A continuous piecewise-linear function on the line given by its value at
/// zero, its breakpoints and the slope on each piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub value_at_zero: f64,
    /// Increasing breakpoints.
    pub breakpoints: Vec<f64>,
    /// `breakpoints.len() + 1` slopes, left to right.
    pub slopes: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn eval(&self, x: f64) -> f64 {
        let primitive = |x: f64| {
            let mut acc = self.slopes[0] * x;
            for (i, &t) in self.breakpoints.iter().enumerate() {
                acc += (self.slopes[i + 1] - self.slopes[i]) * (x - t).max(0.0);
            }
            acc
        };
        self.value_at_zero + primitive(x) - primitive(0.0)
    }
}

/// Solution of an interval example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformPairSolution {
    pub c: f64,
    /// Breakpoint of `g*`.
    pub b: f64,
    pub g_star: PiecewiseLinear,
    pub value: f64,
    /// `R(γ*‖ν)`.
    pub re_part: f64,
    /// `W(μ, γ*)`.
    pub w_part: f64,
    /// `R(μ‖ν)` when finite.
    pub re_mu_nu: Option<f64>,
    /// `W(μ, ν)`.
    pub w_mu_nu: f64,
    /// `true` when the mass balance has no interior root, `b = 0` and the
    /// slope constraint is active on the whole interval.
    pub saturated: bool,
}

/// Root of an increasing function on `[lo, hi]` by Newton steps that fall
/// back to bisection whenever they leave the bracket.
fn bracketed_newton(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, x0: f64) -> f64 {
    let mut x = x0.clamp(lo, hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx.abs() <= ROOT_TOL * 1e-3 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            return x;
        }
    }
    x
}

/// `μ = Unif[0, 1 + c]`, `ν = Unif[0, 1]`, cost `|x − y|`.
///
/// The optimal potential is `(x − b)⁺`, where `s = 1 − b` solves
/// `e^s − s = 1 + c`. For `c ≥ e − 2` the root leaves `(0, 1)` and the
/// potential is `x` on the whole interval.
pub fn uniform_stretch(c: f64) -> Result<UniformPairSolution> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!("stretch c = {c} must be positive")));
    }
    let e = std::f64::consts::E;
    if c >= e - 2.0 {
        let value = (1.0 + c) / 2.0 - (e - 1.0).ln();
        let re_part = 1.0 / (e - 1.0) - (e - 1.0).ln();
        return Ok(UniformPairSolution {
            c,
            b: 0.0,
            g_star: PiecewiseLinear {
                value_at_zero: 0.0,
                breakpoints: vec![],
                slopes: vec![1.0],
            },
            value,
            re_part,
            w_part: value - re_part,
            re_mu_nu: None,
            w_mu_nu: c / 2.0,
            saturated: true,
        });
    }
    let s = bracketed_newton(
        |s| s.exp_m1() - s - c,
        f64::exp_m1,
        0.0,
        1.0,
        (2.0 * c).sqrt() - c / 3.0,
    );
    let b = 1.0 - s;
    let value = -(1.0 + c).ln() + (1.0 + c - b).powi(2) / (2.0 * (1.0 + c));
    let re_part = -(1.0 + c).ln() + (s * s + c * s - c) / (1.0 + c);
    Ok(UniformPairSolution {
        c,
        b,
        g_star: PiecewiseLinear {
            value_at_zero: 0.0,
            breakpoints: vec![b],
            slopes: vec![0.0, 1.0],
        },
        value,
        re_part,
        w_part: value - re_part,
        re_mu_nu: None,
        w_mu_nu: c / 2.0,
        saturated: false,
    })
}

/// `μ = Unif[0, 1 − c]`, `ν = Unif[0, 1]`, cost `|x − y|`, `0 < c < 1`.
///
/// The optimal potential is `−(x − b)⁺`, where `s = 1 − b` solves
/// `e^{−s} + s − 1 = c`. For `c ≥ 1/e` the potential is `−x` on the whole
/// interval.
pub fn uniform_shrink(c: f64) -> Result<UniformPairSolution> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!("shrink c = {c} must lie in (0, 1)")));
    }
    let re_mu_nu = Some(-(1.0 - c).ln());
    let e = std::f64::consts::E;
    if c >= 1.0 / e {
        let z = 1.0 - 1.0 / e;
        let value = -(1.0 - c) / 2.0 - z.ln();
        // ∫ x e^{−x} dx over [0, 1] is 1 − 2/e.
        let re_part = -(1.0 - 2.0 / e) / z - z.ln();
        return Ok(UniformPairSolution {
            c,
            b: 0.0,
            g_star: PiecewiseLinear {
                value_at_zero: 0.0,
                breakpoints: vec![],
                slopes: vec![-1.0],
            },
            value,
            re_part,
            w_part: value - re_part,
            re_mu_nu,
            w_mu_nu: c / 2.0,
            saturated: true,
        });
    }
    let s = bracketed_newton(
        |s| (-s).exp_m1() + s - c,
        |s| -(-s).exp_m1(),
        0.0,
        1.0,
        (2.0 * c).sqrt() + c / 3.0,
    );
    let b = 1.0 - s;
    let value = -(1.0 - c - b).powi(2) / (2.0 * (1.0 - c)) - (1.0 - c).ln();
    let re_part = -(1.0 - c).ln() - (s * s - c - c * s) / (1.0 - c);
    Ok(UniformPairSolution {
        c,
        b,
        g_star: PiecewiseLinear {
            value_at_zero: 0.0,
            breakpoints: vec![b],
            slopes: vec![0.0, -1.0],
        },
        value,
        re_part,
        w_part: value - re_part,
        re_mu_nu,
        w_mu_nu: c / 2.0,
        saturated: false,
    })
}

/// Panels per unit length for the quadrature in [`density_stretch`].
const PANELS_PER_UNIT: f64 = 64.0;

fn quad(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let panels = ((b - a) * PANELS_PER_UNIT).ceil().max(1.0) as usize;
    integrate(f, a, b, panels)
}

/// `μ ∝ f` on `[0, 1 + c]` and `ν ∝ f` on `[0, 1]` for a positive density
/// `f`, with cost `|x − y|`.
///
/// The breakpoint solves `H(b) = ∫_b^1 e^{x−b} f − ∫_b^{1+c} f = 0`, which is
/// strictly decreasing. When `H(0) ≤ 0` the potential is `x` throughout.
pub fn density_stretch(f: impl Fn(f64) -> f64, c: f64) -> Result<UniformPairSolution> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!("stretch c = {c} must be positive")));
    }
    let probe = quad(&|x| if f(x) > 0.0 && f(x).is_finite() { 0.0 } else { 1.0 }, 0.0, 1.0 + c);
    if probe != 0.0 {
        return Err(Error::invalid("density must be positive and finite on [0, 1 + c]"));
    }
    let z_mu = quad(&f, 0.0, 1.0 + c);
    let z_nu = quad(&f, 0.0, 1.0);
    let w_mu_nu = {
        // ∫|F_μ − F_ν| with both CDFs accumulated on a fine grid.
        let n = 20_000;
        let h = (1.0 + c) / n as f64;
        let (mut fm, mut fn_, mut acc) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let m = quad(&f, a, b);
            let fa = fm;
            fm += m / z_mu;
            let na = fn_;
            if a < 1.0 {
                fn_ += quad(&f, a, b.min(1.0)) / z_nu;
            }
            acc += 0.5 * h * ((fa - na).abs() + (fm - fn_).abs());
        }
        acc
    };
    let h_of = |b: f64| quad(&|x| (x - b).exp() * f(x), b, 1.0) - quad(&f, b, 1.0 + c);
    if h_of(0.0) <= 0.0 {
        let z_g = quad(&|x| x.exp() * f(x), 0.0, 1.0);
        let mean_mu = quad(&|x| x * f(x), 0.0, 1.0 + c) / z_mu;
        let mean_g = quad(&|x| x * x.exp() * f(x), 0.0, 1.0) / z_g;
        let log_ratio = (z_g / z_nu).ln();
        let value = mean_mu - log_ratio;
        let re_part = mean_g - log_ratio;
        return Ok(UniformPairSolution {
            c,
            b: 0.0,
            g_star: PiecewiseLinear {
                value_at_zero: 0.0,
                breakpoints: vec![],
                slopes: vec![1.0],
            },
            value,
            re_part,
            w_part: value - re_part,
            re_mu_nu: None,
            w_mu_nu,
            saturated: true,
        });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if h_of(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b = 0.5 * (lo + hi);
    let log_ratio = (z_mu / z_nu).ln();
    let value = quad(&|x| (x - b) * f(x), b, 1.0 + c) / z_mu - log_ratio;
    let re_part = quad(&|x| (x - b) * (x - b).exp() * f(x), b, 1.0) / z_mu - log_ratio;
    Ok(UniformPairSolution {
        c,
        b,
        g_star: PiecewiseLinear {
            value_at_zero: 0.0,
            breakpoints: vec![b],
            slopes: vec![0.0, 1.0],
        },
        value,
        re_part,
        w_part: value - re_part,
        re_mu_nu: None,
        w_mu_nu,
        saturated: false,
    })
}

/// Solution of a finite point-set example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSetSolution {
    /// Number of points in the active ball, including its centre.
    pub active: usize,
    /// Radius of the active ball.
    pub radius: f64,
    /// Potential value outside the active ball.
    pub c0: f64,
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub gamma_star: DiscreteMeasure,
    pub g_star: Potential,
    pub value: f64,
}

fn distances(xs: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|x| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect()
}

fn check_points(xs: &[Vec<f64>]) -> Result<usize> {
    let dim = xs.first().map(Vec::len).ok_or_else(|| Error::invalid("empty point set"))?;
    if xs.iter().any(|x| x.len() != dim) {
        return Err(Error::invalid("points have inconsistent dimension"));
    }
    for i in 0..xs.len() {
        for j in 0..i {
            if crate::measures::same_point(&xs[i], &xs[j]) {
                return Err(Error::invalid(format!("points {j} and {i} coincide")));
            }
        }
    }
    Ok(dim)
}

/// `ν` uniform on `N = {x_1, …, x_n}`, `μ` uniform on `N ∪ {y}`, cost
/// `‖x − y‖`.
///
/// Mass at `y` spreads over the points of `N` nearest to `y`. The active set
/// is the smallest ball around `y` for which the outside value
/// `c₀ = log(Σ_A e^{−d}/(m + 1))` lies between the potentials `−d` of the
/// last active point and the first inactive one.
pub fn discrete_add_point(xs: &[Vec<f64>], y: &[f64]) -> Result<PointSetSolution> {
    let dim = check_points(xs)?;
    if y.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: y.len() });
    }
    if xs.iter().any(|x| crate::measures::same_point(x, y)) {
        return Err(Error::invalid("the added point already belongs to the set"));
    }
    let n = xs.len();
    let d = distances(xs, y);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let mut sum = 0.0;
    let mut chosen = None;
    for m in 1..=n {
        sum += (-d[order[m - 1]]).exp();
        let c0 = (sum / (m + 1) as f64).ln();
        let upper_ok = c0 <= -d[order[m - 1]] + 1e-12;
        let lower_ok = m == n || c0 >= -d[order[m]] - 1e-12;
        if upper_ok && lower_ok {
            chosen = Some((m, c0));
            break;
        }
    }
    let (m, c0) = chosen.ok_or_else(|| Error::invalid("no active ball satisfies the optimality conditions"))?;
    let mut g_n = vec![c0; n];
    for &i in &order[..m] {
        g_n[i] = -d[i];
    }
    let nu = DiscreteMeasure::uniform(xs.to_vec())?;
    let mut all = xs.to_vec();
    all.push(y.to_vec());
    let mu = DiscreteMeasure::uniform(all.clone())?;
    let gamma = tilt_weights(&g_n, &vec![1.0 / n as f64; n]);
    let gamma_star = DiscreteMeasure::normalized(xs.to_vec(), gamma)?;
    let mut g_all = g_n.clone();
    g_all.push(0.0);
    let cost = CostSpec::scaled_metric(1.0)?;
    let g_star = Potential::from_parts(all, g_all, cost).normalized();
    let lin: f64 = g_n.iter().sum::<f64>() / (n + 1) as f64;
    let z: f64 = g_n.iter().map(|v| v.exp()).sum::<f64>() / n as f64;
    Ok(PointSetSolution {
        active: m + 1,
        radius: d[order[m - 1]],
        c0,
        mu,
        nu,
        gamma_star,
        g_star,
        value: lin - z.ln(),
    })
}

/// `ν` uniform on `N = {x_1, …, x_n}`, `μ` uniform on `N ∖ {x_j}`, cost
/// `‖x − y‖`.
///
/// The points nearest to `x_j` send mass to it. With `A` the active ball
/// around `x_j` and `d` the distance to `x_j`, the potential is `d` on `A`
/// and `c₀ = log(Σ_A e^d/(|A| − 1))` outside, where `c₀` must lie between the
/// largest active distance and the smallest inactive one.
pub fn discrete_remove_point(xs: &[Vec<f64>], j: usize) -> Result<PointSetSolution> {
    check_points(xs)?;
    let n = xs.len();
    if n < 2 {
        return Err(Error::invalid("removing a point needs at least two points"));
    }
    if j >= n {
        return Err(Error::invalid(format!("index {j} out of range for {n} points")));
    }
    let d = distances(xs, &xs[j]);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let mut sum = 1.0;
    let mut chosen = None;
    for k in 2..=n {
        let last = d[order[k - 1]];
        sum += last.exp();
        let c0 = (sum / (k - 1) as f64).ln();
        let lower_ok = c0 >= last - 1e-12;
        let upper_ok = k == n || c0 <= d[order[k]] + 1e-12;
        if lower_ok && upper_ok {
            chosen = Some((k, c0));
            break;
        }
    }
    let (k, c0) = chosen.ok_or_else(|| Error::invalid("no active ball satisfies the optimality conditions"))?;
    let mut g = vec![c0; n];
    for &i in &order[..k] {
        g[i] = d[i];
    }
    let nu = DiscreteMeasure::uniform(xs.to_vec())?;
    let rest: Vec<Vec<f64>> = (0..n).filter(|&i| i != j).map(|i| xs[i].clone()).collect();
    let mu = DiscreteMeasure::uniform(rest)?;
    let gamma = tilt_weights(&g, &vec![1.0 / n as f64; n]);
    let gamma_star = DiscreteMeasure::normalized(xs.to_vec(), gamma)?;
    let lin: f64 = (0..n).filter(|&i| i != j).map(|i| g[i]).sum::<f64>() / (n - 1) as f64;
    let z: f64 = g.iter().map(|v| v.exp()).sum::<f64>() / n as f64;
    let cost = CostSpec::scaled_metric(1.0)?;
    let g_star = Potential::from_parts(xs.to_vec(), g, cost).normalized();
    Ok(PointSetSolution {
        active: k,
        radius: d[order[k - 1]],
        c0,
        mu,
        nu,
        gamma_star,
        g_star,
        value: lin - z.ln(),
    })
}

/// The regime of a Gaussian pair under the second-order class `Γ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianCase {
    /// `|1/σ₁² − 1/σ₂²| ≤ k`: the divergence is the relative entropy.
    Entropy,
    /// `1/σ₁² − 1/σ₂² > k`: `μ` is much narrower than `ν`.
    Narrow,
    /// `1/σ₂² − 1/σ₁² > k`: `μ` is much wider than `ν`.
    Wide,
}

/// Exact Γ_k-divergence between `μ = N(b₁, σ₁²)` and `ν = N(b₂, σ₂²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDivergence {
    pub value: f64,
    pub case: GaussianCase,
    pub gamma_star: GaussianParams,
    /// `R(γ*‖ν)`.
    pub re_part: f64,
    /// `W_Γ(μ, γ*)`.
    pub w_part: f64,
}

/// Relative entropy `R(N(b₁, σ₁²)‖N(b₂, σ₂²))`.
pub fn gaussian_kl(mu: &GaussianParams, nu: &GaussianParams) -> f64 {
    let (v1, v2) = (mu.variance, nu.variance);
    let d = mu.mean - nu.mean;
    0.5 * (v2 / v1).ln() + (v1 + d * d) / (2.0 * v2) - 0.5
}

/// Γ_k-divergence between two Gaussians, where `Γ_k` holds the functions
/// whose derivative is `k`-Lipschitz. The optimal `γ*` keeps the mean of
/// `μ`.
pub fn gaussian_gamma_div(mu: &GaussianParams, nu: &GaussianParams, k: f64) -> Result<GaussianDivergence> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::invalid(format!("curvature bound k = {k} must be positive")));
    }
    let (v1, v2) = (mu.variance, nu.variance);
    let d = mu.mean - nu.mean;
    let gap = 1.0 / v1 - 1.0 / v2;
    if gap.abs() <= k {
        let kl = gaussian_kl(mu, nu);
        return Ok(GaussianDivergence {
            value: kl,
            case: GaussianCase::Entropy,
            gamma_star: *mu,
            re_part: kl,
            w_part: 0.0,
        });
    }
    let mean_term = d * d / (2.0 * v2);
    if gap > k {
        let v3 = v2 / (1.0 + k * v2);
        let log_term = 0.5 * (k * v2).ln_1p();
        let re_part = log_term - 0.5 * k * v3 + mean_term;
        let w_part = 0.5 * k * (v3 - v1);
        return Ok(GaussianDivergence {
            value: log_term + mean_term - 0.5 * k * v1,
            case: GaussianCase::Narrow,
            gamma_star: GaussianParams::new(mu.mean, v3)?,
            re_part,
            w_part,
        });
    }
    if k * v2 >= 1.0 {
        return Err(Error::Domain(format!(
            "wide case needs k·σ₂² < 1, got {}",
            k * v2
        )));
    }
    let v3 = v2 / (1.0 - k * v2);
    let log_term = 0.5 * (-k * v2).ln_1p();
    let re_part = log_term + 0.5 * k * v3 + mean_term;
    let w_part = 0.5 * k * (v1 - v3);
    Ok(GaussianDivergence {
        value: log_term + mean_term + 0.5 * k * v1,
        case: GaussianCase::Wide,
        gamma_star: GaussianParams::new(mu.mean, v3)?,
        re_part,
        w_part,
    })
}

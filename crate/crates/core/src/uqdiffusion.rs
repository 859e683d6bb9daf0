//! Average-cost bounds for perturbed Gauss-Markov chains.
//!
//! The nominal chain is `X_{k+1} = (1 − a/N) X_k + σ W_k` with
//! `W_k ~ N(0, 1/N)`, a discretization of `dX = −aX dt + σ dW` with stationary
//! law `N(0, σ²/2a)`. The perturbed chain has kernel
//! `q_N(x, ·) = N((1 − a/N)x + σu(x)/N, σ²v(x)²/N)`.
//!
//! The long-run second moment of the perturbed chain is bounded through the
//! per-step Γ-divergence for the second-order class, which stays `O(1/N)`
//! while the per-step relative entropy does not vanish when `v ≠ 1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closedforms::{gaussian_gamma_div, gaussian_kl, GaussianCase};
use crate::measures::GaussianParams;
use crate::scalar::{golden_min, log_grid};
use crate::{Error, Result};

/// Discretized Ornstein-Uhlenbeck model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OUModel {
    /// Mean reversion rate `a > 0`.
    pub a: f64,
    /// Noise scale `σ > 0`.
    pub sigma: f64,
    /// Steps per unit time; `N > a`.
    pub n: usize,
}

impl OUModel {
    pub fn new(a: f64, sigma: f64, n: usize) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("need a > 0 and σ > 0, got a = {a}, σ = {sigma}")));
        }
        if n == 0 || (n as f64) <= a {
            return Err(Error::invalid(format!("need N > a so that 1 − a/N ∈ (0, 1), got N = {n}")));
        }
        Ok(OUModel { a, sigma, n })
    }

    /// Contraction factor `1 − a/N`.
    pub fn alpha(&self) -> f64 {
        1.0 - self.a / self.n as f64
    }

    /// Per-step noise variance `σ²/N`.
    pub fn step_variance(&self) -> f64 {
        self.sigma * self.sigma / self.n as f64
    }
}

/// A bounded function of the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    Constant(f64),
    /// Piecewise-linear interpolation on increasing `grid`, constant beyond
    /// the ends.
    Table { grid: Vec<f64>, values: Vec<f64> },
}

impl Envelope {
    fn validate(&self) -> Result<()> {
        match self {
            Envelope::Constant(c) if c.is_finite() => Ok(()),
            Envelope::Constant(c) => Err(Error::invalid(format!("envelope value {c} is not finite"))),
            Envelope::Table { grid, values } => {
                if grid.is_empty() || grid.len() != values.len() {
                    return Err(Error::invalid("table needs one value per grid point"));
                }
                if grid.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid("table grid must be strictly increasing"));
                }
                if grid.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::invalid("table entries must be finite"));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Envelope::Constant(c) => *c,
            Envelope::Table { grid, values } => {
                let last = grid.len() - 1;
                if x <= grid[0] {
                    return values[0];
                }
                if x >= grid[last] {
                    return values[last];
                }
                let i = grid.partition_point(|g| *g <= x) - 1;
                let s = (x - grid[i]) / (grid[i + 1] - grid[i]);
                values[i] + s * (values[i + 1] - values[i])
            }
        }
    }

    /// `(inf, sup)` over the real line.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Envelope::Constant(c) => (*c, *c),
            Envelope::Table { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v))),
        }
    }
}

/// Drift shift `u` and noise multiplier `v` of the perturbed kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub u: Envelope,
    pub v: Envelope,
}

impl Perturbation {
    /// Requires `inf v > 0`.
    pub fn new(u: Envelope, v: Envelope) -> Result<Self> {
        u.validate()?;
        v.validate()?;
        if !(v.range().0 > 0.0) {
            return Err(Error::invalid("noise multiplier v must be bounded below by a positive constant"));
        }
        Ok(Perturbation { u, v })
    }

    pub fn constant(u: f64, v: f64) -> Result<Self> {
        Perturbation::new(Envelope::Constant(u), Envelope::Constant(v))
    }

    /// `sup |u|`.
    pub fn u_sup(&self) -> f64 {
        let (lo, hi) = self.u.range();
        lo.abs().max(hi.abs())
    }

    /// `(inf v, sup v)`.
    pub fn v_band(&self) -> (f64, f64) {
        self.v.range()
    }
}

/// Image of a quadratic test function under the one-step map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardMap {
    /// `quad·x² + lin·x + constant`.
    Quadratic { quad: f64, lin: f64, constant: f64 },
    /// The Gaussian integral diverges.
    Infinite,
}

/// Maps `g(x) = −bx² − cx − d` through
/// `x ↦ −log∫e^{−g(y)} p(x, dy) − g(x) + λ` for the Gaussian kernel
/// `p(x, ·) = N(αx, σ²)`.
pub fn forward_map(b: f64, c: f64, _d: f64, lambda: f64, alpha: f64, sigma2: f64) -> ForwardMap {
    let s = 1.0 - 2.0 * b * sigma2;
    if s <= 0.0 {
        return ForwardMap::Infinite;
    }
    ForwardMap::Quadratic {
        quad: b * (1.0 - alpha * alpha / s),
        lin: c * (1.0 - alpha / s),
        constant: lambda - c * c * sigma2 / (2.0 * s) + 0.5 * s.ln(),
    }
}

/// The `b` on the increasing branch with `b(1 − α²/(1 − 2bσ²)) = q/2`, so
/// that the quadratic cost `½qx²` is the image of `bx²` under
/// [`forward_map`].
pub fn quadratic_cost_preimage(q: f64, alpha: f64, sigma2: f64) -> Result<f64> {
    if !(q >= 0.0) || !(sigma2 > 0.0) || !(alpha.abs() < 1.0) {
        return Err(Error::invalid("need q ≥ 0, σ² > 0 and |α| < 1"));
    }
    let phi = |b: f64| b * (1.0 - alpha * alpha / (1.0 - 2.0 * b * sigma2));
    let cap = 1.0 / (2.0 * sigma2);
    // φ is concave on (0, cap), so its maximizer bounds the increasing branch.
    let (peak, neg_max) = golden_min(|b| -phi(b), 0.0, cap, 200);
    let target = 0.5 * q;
    if target > -neg_max {
        return Err(Error::Domain(format!(
            "q/2 = {target} exceeds the largest attainable value {}",
            -neg_max
        )));
    }
    let (mut lo, mut hi) = (0.0, peak);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Summands of the average-cost bound at a fixed `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcutTerms {
    /// `u²/(4b(a − bσ²))`.
    pub drift: f64,
    /// `σ²|v² − 1|/(2(a − bσ²))`.
    pub diffusion: f64,
    /// `σ²/(2(a − bσ²))`.
    pub base: f64,
}

impl AcutTerms {
    pub fn total(&self) -> f64 {
        self.drift + self.diffusion + self.base
    }
}

/// Long-run moment estimate with a batch-means confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    /// 95% half-width from batch means.
    pub half_width: f64,
    pub samples: usize,
}

/// The bound at one value of `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcutSweepPoint {
    pub b: f64,
    pub bound: f64,
}

/// Result of [`acut_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ACUTBoundReport {
    /// Bound on the long-run average of `X²`.
    pub bound: f64,
    pub optimal_b: f64,
    pub terms: AcutTerms,
    /// The bound at `b = a/(2σ²)`.
    pub fixed_b_bound: f64,
    pub fixed_b_terms: AcutTerms,
    /// Filled in by callers that also simulate the chain.
    pub empirical_moment: Option<MomentEstimate>,
    /// Every eighth point of the search grid.
    pub sweep: Vec<AcutSweepPoint>,
}

fn acut_terms(a: f64, s2: f64, u2: f64, dv: f64, b: f64) -> AcutTerms {
    let r = a - b * s2;
    AcutTerms {
        drift: if u2 == 0.0 { 0.0 } else { u2 / (4.0 * b * r) },
        diffusion: s2 * dv / (2.0 * r),
        base: s2 / (2.0 * r),
    }
}

/// Bound on the long-run second moment of the perturbed diffusion, with
/// `u²` and `|v² − 1|` replaced by their suprema over the given envelopes,
/// minimized over `b ∈ (0, a/σ²)`.
pub fn acut_bound(a: f64, sigma: f64, u_sup: f64, v_band: (f64, f64)) -> Result<ACUTBoundReport> {
    if !(a > 0.0) || !(sigma > 0.0) || !a.is_finite() || !sigma.is_finite() {
        return Err(Error::invalid("need a > 0 and σ > 0"));
    }
    let (vlo, vhi) = v_band;
    if !(u_sup >= 0.0) || !u_sup.is_finite() || !(vlo > 0.0) || !(vhi >= vlo) || !vhi.is_finite() {
        return Err(Error::invalid("need u_sup ≥ 0 and 0 < v_lo ≤ v_hi"));
    }
    let s2 = sigma * sigma;
    let u2 = u_sup * u_sup;
    let dv = (vlo * vlo - 1.0).abs().max((vhi * vhi - 1.0).abs());
    let cap = a / s2;
    let b_min = 1e-6 * cap;
    let objective = |b: f64| acut_terms(a, s2, u2, dv, b).total();
    let grid = log_grid(b_min, cap - b_min, 512);
    let (imin, _) = grid
        .iter()
        .map(|b| objective(*b))
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("grid is nonempty");
    let lo = grid[imin.saturating_sub(1)];
    let hi = grid[(imin + 1).min(grid.len() - 1)];
    let (b_ref, f_ref) = golden_min(objective, lo, hi, 100);
    let optimal_b = if f_ref <= objective(grid[imin]) { b_ref } else { grid[imin] };
    let fixed_b_terms = acut_terms(a, s2, u2, dv, 0.5 * cap);
    let terms = acut_terms(a, s2, u2, dv, optimal_b);
    Ok(ACUTBoundReport {
        bound: terms.total(),
        optimal_b,
        terms,
        fixed_b_bound: fixed_b_terms.total(),
        fixed_b_terms,
        empirical_moment: None,
        sweep: grid
            .iter()
            .step_by(8)
            .map(|&b| AcutSweepPoint { b, bound: objective(b) })
            .collect(),
    })
}

/// Per-step divergences between the perturbed and nominal kernels at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDivergence {
    /// Exact Γ_k-divergence of `q_N(x, ·)` from `p_N(x, ·)`.
    pub value: f64,
    pub case: GaussianCase,
    /// `(k/2)(σ²/N)|v² − 1| + u²/(2N)`.
    pub leading_order: f64,
    /// Relative entropy `(v² − 1 − log v²)/2 + u²/(2N)`.
    pub kl: f64,
}

/// Exact per-step Γ_k-divergence between the perturbed and nominal kernels.
///
/// When `v(x) ≠ 1` the step must be fine enough that the variance gap
/// exceeds `k`, i.e. `N|1 − 1/v²|/σ² > k`; otherwise the error reports the
/// smallest admissible `N`.
pub fn gaussian_step_div(model: &OUModel, x: f64, pert: &Perturbation, k: f64) -> Result<StepDivergence> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::invalid(format!("curvature bound k = {k} must be positive")));
    }
    let n = model.n as f64;
    let (u, v) = (pert.u.eval(x), pert.v.eval(x));
    let s2 = model.sigma * model.sigma;
    let gap = (1.0 - 1.0 / (v * v)).abs();
    if v != 1.0 && n * gap / s2 <= k {
        let required = (k * s2 / gap).floor() as usize + 1;
        return Err(Error::Domain(format!(
            "N = {} is too coarse for k = {k} at v = {v}; need N ≥ {required}",
            model.n
        )));
    }
    let center = model.alpha() * x;
    let nominal = GaussianParams::new(center, model.step_variance())?;
    let perturbed = GaussianParams::new(center + model.sigma * u / n, model.step_variance() * v * v)?;
    let div = gaussian_gamma_div(&perturbed, &nominal, k)?;
    Ok(StepDivergence {
        value: div.value,
        case: div.case,
        leading_order: 0.5 * k * model.step_variance() * (v * v - 1.0).abs() + u * u / (2.0 * n),
        kl: gaussian_kl(&perturbed, &nominal),
    })
}

/// Number of batches used for the confidence half-width.
const BATCHES: usize = 16;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.96;

/// Long-run average of `X̄_k²` for the perturbed chain
/// `X̄_{k+1} = (1 − a/N) X̄_k + σ(u(X̄_k)/N + v(X̄_k) Z_k/√N)` started at 0.
///
/// Each replica draws from ChaCha8 seeded by `seed` on stream `replica`, so
/// the result does not depend on thread scheduling. Samples after `burn_in`
/// are split into 16 batches per replica; the half-width is
/// `1.96 · sd(batch means)/√(#batches)`.
pub fn simulate_stationary_moment(
    model: &OUModel,
    pert: &Perturbation,
    horizon: usize,
    burn_in: usize,
    seed: u64,
    replicas: usize,
) -> Result<MomentEstimate> {
    if horizon <= burn_in || horizon - burn_in < BATCHES {
        return Err(Error::invalid("horizon must exceed burn-in by at least 16 steps"));
    }
    if replicas == 0 {
        return Err(Error::invalid("need at least one replica"));
    }
    let alpha = model.alpha();
    let n = model.n as f64;
    let drift_scale = model.sigma / n;
    let noise_scale = model.sigma / n.sqrt();
    let kept = horizon - burn_in;
    let batch_len = kept / BATCHES;
    let batch_means: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|replica| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(replica);
            let mut x = 0.0_f64;
            for _ in 0..burn_in {
                let z: f64 = StandardNormal.sample(&mut rng);
                x = alpha * x + drift_scale * pert.u.eval(x) + noise_scale * pert.v.eval(x) * z;
            }
            let mut means = Vec::with_capacity(BATCHES);
            for _ in 0..BATCHES {
                let mut acc = 0.0;
                for _ in 0..batch_len {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x = alpha * x + drift_scale * pert.u.eval(x) + noise_scale * pert.v.eval(x) * z;
                    acc += x * x;
                }
                means.push(acc / batch_len as f64);
            }
            means
        })
        .collect();
    let all: Vec<f64> = batch_means.into_iter().flatten().collect();
    let m = all.len() as f64;
    let estimate = all.iter().sum::<f64>() / m;
    let var = all.iter().map(|b| (b - estimate).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(MomentEstimate {
        estimate,
        half_width: Z95 * (var / m).sqrt(),
        samples: batch_len * all.len(),
    })
}

/// Stationary second moment `(σu/a)² + σ²v²/(2a)` of the constant-coefficient
/// perturbed diffusion.
pub fn stationary_moment_constant(a: f64, sigma: f64, u: f64, v: f64) -> f64 {
    (sigma * u / a).powi(2) + sigma * sigma * v * v / (2.0 * a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn forward_map_special_cases() {
        assert_eq!(
            forward_map(0.0, 0.0, 0.0, 0.7, 0.9, 0.1),
            ForwardMap::Quadratic {
                quad: 0.0,
                lin: 0.0,
                constant: 0.7
            }
        );
        let ForwardMap::Quadratic { quad, lin, constant } = forward_map(0.0, 2.0, 0.0, 0.5, 0.9, 0.1) else {
            panic!("finite map expected")
        };
        assert_eq!(quad, 0.0);
        assert_abs_diff_eq!(lin, 2.0 * 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(constant, 0.5 - 4.0 * 0.1 / 2.0, epsilon = 1e-15);
        assert_eq!(forward_map(5.0, 0.0, 0.0, 0.0, 0.9, 0.1), ForwardMap::Infinite);
    }

    #[test]
    fn preimage_reproduces_quadratic_cost() {
        let model = OUModel::new(1.0, 1.0, 100).unwrap();
        let (alpha, s2) = (model.alpha(), model.step_variance());
        let b = quadratic_cost_preimage(0.01, alpha, s2).unwrap();
        let ForwardMap::Quadratic { quad, .. } = forward_map(b, 0.0, 0.0, 0.0, alpha, s2) else {
            panic!("finite map expected")
        };
        assert_abs_diff_eq!(quad, 0.005, epsilon = 1e-14);
        assert!(quadratic_cost_preimage(1e6, alpha, s2).is_err());
    }

    #[test]
    fn acut_unperturbed_and_fixed_b() {
        let r = acut_bound(1.0, 1.0, 0.0, (1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(r.bound, 0.5, epsilon = 1e-5);
        let r = acut_bound(1.0, 1.0, 0.2, (1.1, 1.1)).unwrap();
        assert_abs_diff_eq!(r.fixed_b_bound, 1.25, epsilon = 1e-12);
        assert!(r.bound <= r.fixed_b_bound);
        assert!(r.optimal_b > 0.0 && r.optimal_b < 1.0);
    }

    #[test]
    fn step_divergence_shift_only_and_identity() {
        let model = OUModel::new(1.0, 1.0, 1000).unwrap();
        let none = Perturbation::constant(0.0, 1.0).unwrap();
        assert_eq!(gaussian_step_div(&model, 0.3, &none, 1.0).unwrap().value, 0.0);
        let shift = Perturbation::constant(0.4, 1.0).unwrap();
        let d = gaussian_step_div(&model, 0.3, &shift, 1.0).unwrap();
        assert_abs_diff_eq!(d.value, 0.16 / 2000.0, epsilon = 1e-15);
    }

    #[test]
    fn step_divergence_requires_fine_steps() {
        let model = OUModel::new(1.0, 1.0, 2).unwrap();
        let pert = Perturbation::constant(0.0, 1.1).unwrap();
        let err = gaussian_step_div(&model, 0.0, &pert, 1.0).unwrap_err();
        assert!(err.to_string().contains("need N ≥ 6"), "{err}");
    }

    #[test]
    fn table_envelope_interpolates_and_clamps() {
        let e = Envelope::Table {
            grid: vec![0.0, 1.0],
            values: vec![1.0, 3.0],
        };
        assert_eq!(e.eval(-5.0), 1.0);
        assert_eq!(e.eval(0.5), 2.0);
        assert_eq!(e.eval(9.0), 3.0);
        assert_eq!(e.range(), (1.0, 3.0));
    }

    #[test]
    fn simulation_is_reproducible() {
        let model = OUModel::new(1.0, 1.0, 10).unwrap();
        let pert = Perturbation::constant(0.0, 1.0).unwrap();
        let a = simulate_stationary_moment(&model, &pert, 20_000, 1000, 7, 2).unwrap();
        let b = simulate_stationary_moment(&model, &pert, 20_000, 1000, 7, 2).unwrap();
        assert_eq!(a, b);
        assert!((a.estimate - 0.5).abs() < 0.1);
    }
}

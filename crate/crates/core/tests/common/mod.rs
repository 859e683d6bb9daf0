//! Reference computations for the integration and acceptance tests.
//!
//! Everything here is written independently of the library solvers: brute
//! force over grids, a generic LP solver and a first-order method on a
//! discretized dual.

#![allow(dead_code)]

use gammadiv::measures::{DiscreteMeasure, GaussianParams};
use gammadiv::transport::CostSpec;
use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector with entries bounded below by `floor / n`.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| w / s).collect()
}

/// Random points in `[0, scale]^dim` with pairwise distance at least `gap`.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize, scale: f64, gap: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    while out.len() < n {
        let p: Vec<f64> = (0..dim).map(|_| scale * rng.random::<f64>()).collect();
        if out.iter().all(|q| euclid(q, &p) >= gap) {
            out.push(p);
        }
    }
    out
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn line(xs: &[f64], w: &[f64]) -> DiscreteMeasure {
    DiscreteMeasure::from_1d(xs, w).unwrap()
}

/// A random metric on `n` points: shortest-path distances of a complete
/// graph with random edge lengths in `[lo, hi]`.
pub fn random_metric(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = lo + (hi - lo) * rng.random::<f64>();
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Minimum-cost transport between probability vectors `a` and `b` by LP.
pub fn lp_transport(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = (0..a.len())
        .map(|i| (0..b.len()).map(|j| lp.add_var(cost[i][j], (0.0, f64::INFINITY))).collect())
        .collect();
    for (i, ai) in a.iter().enumerate() {
        let row: Vec<_> = vars[i].iter().map(|v| (*v, 1.0)).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, *ai);
    }
    for (j, bj) in b.iter().enumerate().take(b.len() - 1) {
        let col: Vec<_> = vars.iter().map(|r| (r[j], 1.0)).collect();
        lp.add_constraint(col.as_slice(), ComparisonOp::Eq, *bj);
    }
    lp.solve().unwrap().into_solution().unwrap().objective()
}

/// `sup { Σ gᵢ rᵢ : gᵢ − gⱼ ≤ d(xᵢ, xⱼ) }` for a zero-sum `r`, by LP.
pub fn lp_lipschitz_sup(d: &[Vec<f64>], r: &[f64]) -> f64 {
    let n = r.len();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let g: Vec<_> = (0..n)
        .map(|i| {
            let bounds = if i == 0 { (0.0, 0.0) } else { (f64::NEG_INFINITY, f64::INFINITY) };
            lp.add_var(r[i], bounds)
        })
        .collect();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                lp.add_constraint(&[(g[i], 1.0), (g[j], -1.0)], ComparisonOp::Le, d[i][j]);
            }
        }
    }
    lp.solve().unwrap().into_solution().unwrap().objective()
}

/// One-dimensional transport cost `∫|F_a − F_b|` for weights on sorted
/// common support `xs`.
pub fn w1_sorted(xs: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut total = 0.0;
    for i in 0..xs.len() - 1 {
        diff += a[i] - b[i];
        total += diff.abs() * (xs[i + 1] - xs[i]);
    }
    total
}

pub fn kl(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(x, _)| **x > 0.0)
        .map(|(x, y)| x * (x / y).ln())
        .sum()
}

/// Brute-force minimum of `objective` over probability vectors of length
/// `n` on the lattice with step `1/steps`, refined five times on lattices
/// ten times finer around the current best point. Returns the minimum and
/// its argument.
pub fn simplex_grid_min(n: usize, steps: usize, objective: &dyn Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    let mut best = (f64::INFINITY, vec![0.0; n]);
    let mut counts = vec![0usize; n];
    let visit = |best: &mut (f64, Vec<f64>), w: &[f64]| {
        let v = objective(w);
        if v < best.0 {
            *best = (v, w.to_vec());
        }
    };
    enumerate_compositions(&mut counts, 0, steps, &mut |c| {
        let w: Vec<f64> = c.iter().map(|k| *k as f64 / steps as f64).collect();
        visit(&mut best, &w);
    });
    let radius = 20i64;
    let mut fine = steps as i64;
    for _ in 0..5 {
        fine *= 10;
        // Re-centre the window until the best lattice point stops moving.
        loop {
            let base: Vec<i64> = best.1.iter().map(|w| (w * fine as f64).round() as i64).collect();
            let before = best.0;
            let mut offsets = vec![-radius; n - 1];
            loop {
                let ks: Vec<i64> = (0..n - 1).map(|i| base[i] + offsets[i]).collect();
                let last = fine - ks.iter().sum::<i64>();
                if ks.iter().all(|k| *k >= 0) && last >= 0 {
                    let mut w: Vec<f64> = ks.iter().map(|k| *k as f64 / fine as f64).collect();
                    w.push(last as f64 / fine as f64);
                    visit(&mut best, &w);
                }
                let mut i = 0;
                while i < n - 1 {
                    offsets[i] += 1;
                    if offsets[i] <= radius {
                        break;
                    }
                    offsets[i] = -radius;
                    i += 1;
                }
                if i == n - 1 {
                    break;
                }
            }
            if best.0 >= before {
                break;
            }
        }
    }
    best
}

fn enumerate_compositions(counts: &mut Vec<usize>, i: usize, left: usize, f: &mut dyn FnMut(&[usize])) {
    let n = counts.len();
    if i == n - 1 {
        counts[i] = left;
        f(counts);
        return;
    }
    for k in 0..=left {
        counts[i] = k;
        enumerate_compositions(counts, i + 1, left - k, f);
    }
}

/// Nested brute force for the sensitivity min-max:
/// `inf_{q′} √V √(Σ q′ᵢ²/pᵢ) + sup_{g ∈ Lip} Σ gᵢ (p′ᵢ − q′ᵢ)` with the inner
/// supremum by LP and the outer infimum by a zooming lattice search over
/// the zero-sum hyperplane.
pub fn sensitivity_oracle(points: &[Vec<f64>], p: &[f64], pp: &[f64], f: &[f64]) -> f64 {
    let n = points.len();
    let d: Vec<Vec<f64>> = points.iter().map(|a| points.iter().map(|b| euclid(a, b)).collect()).collect();
    let mean: f64 = f.iter().zip(p).map(|(a, b)| a * b).sum();
    let v: f64 = f.iter().zip(p).map(|(a, b)| b * (a - mean) * (a - mean)).sum();
    let outer = |q: &[f64]| {
        let chi: f64 = q.iter().zip(p).map(|(a, b)| a * a / b).sum();
        let r: Vec<f64> = pp.iter().zip(q).map(|(a, b)| a - b).collect();
        v.sqrt() * chi.sqrt() + lp_lipschitz_sup(&d, &r)
    };
    if n == 1 {
        return 0.0;
    }
    let chi_pp: f64 = pp.iter().zip(p).map(|(a, b)| a * a / b).sum();
    // Free coordinates q′₁..q′_{n−1}; the last one closes the sum.
    let m = n - 1;
    let mut center = vec![0.0; m];
    let mut half: Vec<f64> = (0..m).map(|j| (p[j] * chi_pp).sqrt().max(1e-12)).collect();
    let per_dim = match m {
        1 => 41,
        2 => 15,
        3 => 9,
        _ => 7,
    };
    let full = |z: &[f64]| {
        let mut q = z.to_vec();
        q.push(-z.iter().sum::<f64>());
        q
    };
    let mut best = outer(&full(&center));
    for _ in 0..40 {
        let mut idx = vec![0usize; m];
        let mut next_center = center.clone();
        loop {
            let z: Vec<f64> = (0..m)
                .map(|j| center[j] + half[j] * (2.0 * idx[j] as f64 / (per_dim - 1) as f64 - 1.0))
                .collect();
            let val = outer(&full(&z));
            if val < best {
                best = val;
                next_center = z;
            }
            let mut j = 0;
            while j < m {
                idx[j] += 1;
                if idx[j] < per_dim {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == m {
                break;
            }
        }
        center = next_center;
        half.iter_mut().for_each(|h| *h *= 0.6);
    }
    best
}

/// Lower estimate of the second-order Γ_k-divergence between two Gaussians
/// from a discretized dual.
///
/// Both laws are discretized on a uniform grid covering six standard
/// deviations of every Gaussian involved. Test functions have piecewise
/// constant second derivative in `[−k, k]` on coarse cells, a free slope
/// at the left end and value zero there. The concave dual objective
/// `Σ μᵢ gᵢ − log Σ νᵢ e^{gᵢ}` is maximized by accelerated projected
/// gradient ascent with backtracking and adaptive restart.
pub fn gaussian_dual_oracle(mu: &GaussianParams, nu: &GaussianParams, k: f64) -> f64 {
    let (s1, s2) = (mu.variance.sqrt(), nu.variance.sqrt());
    let kv = k * nu.variance;
    let s3 = if kv < 1.0 { s2 / (1.0 - kv).sqrt() } else { s2 };
    let smax = s1.max(s2).max(s3);
    let left = mu.mean.min(nu.mean) - 6.0 * smax;
    let right = mu.mean.max(nu.mean) + 6.0 * smax;
    let cells = 120;
    let per_cell = 6;
    let m = cells * per_cell + 1;
    let h = (right - left) / (m - 1) as f64;
    let xs: Vec<f64> = (0..m).map(|i| left + i as f64 * h).collect();
    let density = |g: &GaussianParams| {
        let raw: Vec<f64> = xs.iter().map(|x| (-(x - g.mean).powi(2) / (2.0 * g.variance)).exp()).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / s).collect::<Vec<f64>>()
    };
    let (wmu, wnu) = (density(mu), density(nu));

    // θ = (slope, κ₀, …, κ_{cells−1}).
    let values = |theta: &[f64]| {
        let mut g = vec![0.0; m];
        let mut slope = theta[0];
        for i in 0..m - 1 {
            let kap = theta[1 + i / per_cell];
            g[i + 1] = g[i] + slope * h + 0.5 * kap * h * h;
            slope += kap * h;
        }
        g
    };
    let objective = |g: &[f64]| {
        let top = g.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        let z: f64 = g.iter().zip(&wnu).map(|(v, w)| w * (v - top).exp()).sum();
        g.iter().zip(&wmu).map(|(v, w)| v * w).sum::<f64>() - top - z.ln()
    };
    let gradient = |g: &[f64]| {
        let top = g.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        let e: Vec<f64> = g.iter().zip(&wnu).map(|(v, w)| w * (v - top).exp()).collect();
        let z: f64 = e.iter().sum();
        let r: Vec<f64> = (0..m).map(|i| wmu[i] - e[i] / z).collect();
        let mut grad = vec![0.0; 1 + cells];
        grad[0] = r.iter().zip(&xs).map(|(ri, x)| ri * (x - left)).sum();
        // ∂gᵢ/∂κ on segment s is h(xᵢ − mid_s) for i > s.
        let (mut s0, mut s1) = (0.0, 0.0);
        for s in (0..m - 1).rev() {
            s0 += r[s + 1];
            s1 += r[s + 1] * xs[s + 1];
            let mid = xs[s] + 0.5 * h;
            grad[1 + s / per_cell] += h * (s1 - mid * s0);
        }
        grad
    };
    let project = |theta: &mut [f64]| {
        for t in theta[1..].iter_mut() {
            *t = t.clamp(-k, k);
        }
    };

    let mut theta = vec![0.0; 1 + cells];
    let mut y = theta.clone();
    let mut fx = objective(&values(&theta));
    let mut step = 1.0;
    let mut momentum = 1.0_f64;
    let mut stall = 0;
    for _ in 0..60_000 {
        let gy = values(&y);
        let fy = objective(&gy);
        let grad = gradient(&gy);
        let mut cand;
        let mut fc;
        loop {
            cand = y.iter().zip(&grad).map(|(a, b)| a + step * b).collect::<Vec<f64>>();
            project(&mut cand);
            let diff: Vec<f64> = cand.iter().zip(&y).map(|(a, b)| a - b).collect();
            let lin: f64 = diff.iter().zip(&grad).map(|(a, b)| a * b).sum();
            let sq: f64 = diff.iter().map(|a| a * a).sum();
            fc = objective(&values(&cand));
            if fc >= fy + lin - sq / (2.0 * step) || step < 1e-14 {
                break;
            }
            step *= 0.5;
        }
        if fc < fx {
            // Restart the momentum from the last accepted point.
            y = theta.clone();
            momentum = 1.0;
            continue;
        }
        let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next;
        y = cand.iter().zip(&theta).map(|(a, b)| a + beta * (a - b)).collect();
        momentum = next;
        stall = if fc - fx < 1e-12 { stall + 1 } else { 0 };
        theta = cand;
        fx = fc;
        step *= 1.2;
        if stall > 100 {
            break;
        }
    }
    fx
}

pub fn cost_from_matrix(ground: &[Vec<f64>], d: &[Vec<f64>]) -> CostSpec {
    CostSpec::explicit(ground.to_vec(), d.to_vec()).unwrap()
}

/// Central difference of `f` at `x` with step `h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn random_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

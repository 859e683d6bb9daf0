//! Relative entropy, the log-moment generating functional and exponential
//! tilting.
//!
//! `+∞` is represented by `f64::INFINITY`, which propagates through sums and
//! compares correctly under `min`.

use serde::{Deserialize, Serialize};

use crate::measures::{DiscreteMeasure, PointIndex};
use crate::transport::Potential;
use crate::Result;

/// `R(μ‖ν) = Σ μᵢ log(μᵢ/νᵢ)`, or `+∞` when `μ` charges a point outside
/// `supp ν`.
pub fn rel_entropy(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let index = PointIndex::new(nu.points());
    let mut total = 0.0;
    for (p, &w) in mu.points().iter().zip(mu.weights()) {
        if w <= 0.0 {
            continue;
        }
        match index.find(p) {
            Some(j) => total += w * (w / nu.weights()[j]).ln(),
            None => return f64::INFINITY,
        }
    }
    total.max(0.0)
}

/// Relative entropy between two weight vectors on a common index set.
pub fn rel_entropy_weights(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return f64::INFINITY;
        }
        total += a * (a / b).ln();
    }
    total.max(0.0)
}

/// `log Σ wᵢ e^{gᵢ}` with a max shift against overflow.
pub fn log_sum_exp(values: &[f64], weights: &[f64]) -> f64 {
    let max = values
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = values
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(v, w)| w * (v - max).exp())
        .sum();
    max + s.ln()
}

/// Tilted weights `wᵢ e^{gᵢ} / Σ wⱼ e^{gⱼ}`.
pub fn tilt_weights(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(values, weights);
    values
        .iter()
        .zip(weights)
        .map(|(v, w)| if *w > 0.0 { w * (v - lse).exp() } else { 0.0 })
        .collect()
}

/// `log ∫e^g dν`.
pub fn log_mgf(g: &Potential, nu: &DiscreteMeasure) -> Result<f64> {
    let vals = g.eval_many(nu.points())?;
    Ok(log_sum_exp(&vals, nu.weights()))
}

/// The measure `μ₀` with `dμ₀/dν = e^g / ∫e^g dν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltedMeasure {
    pub base: DiscreteMeasure,
    pub potential: Potential,
    pub result: DiscreteMeasure,
}

/// Exponential tilt of `ν` by `g`.
pub fn tilt(nu: &DiscreteMeasure, g: &Potential) -> Result<TiltedMeasure> {
    let vals = g.eval_many(nu.points())?;
    let w = tilt_weights(&vals, nu.weights());
    let result = DiscreteMeasure::normalized(nu.points().to_vec(), w)?;
    Ok(TiltedMeasure {
        base: nu.clone(),
        potential: g.clone(),
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{to_discrete, GridDensity};
    use crate::transport::CostSpec;
    use approx::assert_abs_diff_eq;

    fn pot(xs: &[f64], vals: &[f64]) -> Potential {
        Potential::new(
            xs.iter().map(|&x| vec![x]).collect(),
            vals.to_vec(),
            CostSpec::scaled_metric(10.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn entropy_examples() {
        let nu = DiscreteMeasure::from_1d(&[0.0, 1.0, 2.0], &[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(rel_entropy(&nu, &nu), 0.0);
        let mu = DiscreteMeasure::from_1d(&[0.0, 5.0], &[0.5, 0.5]).unwrap();
        assert_eq!(rel_entropy(&mu, &nu), f64::INFINITY);
        let c = 0.3;
        let a = to_discrete(&GridDensity::uniform(0.0, 1.0 - c, 700).unwrap());
        let b = to_discrete(&GridDensity::uniform(0.0, 1.0, 1000).unwrap());
        assert_abs_diff_eq!(rel_entropy(&a, &b), -(1.0 - c).ln(), epsilon = 1e-3);
    }

    #[test]
    fn log_mgf_examples() {
        let nu = DiscreteMeasure::from_1d(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(log_mgf(&pot(&[0.0, 1.0], &[0.0, 0.0]), &nu).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(log_mgf(&pot(&[0.0, 1.0], &[2.5, 2.5]), &nu).unwrap(), 2.5, epsilon = 1e-15);
        let g = pot(&[0.0, 1.0], &[0.0, 3f64.ln()]);
        assert_abs_diff_eq!(log_mgf(&g, &nu).unwrap(), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn tilt_examples() {
        let nu = DiscreteMeasure::from_1d(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let t = tilt(&nu, &pot(&[0.0, 1.0], &[0.0, 0.0])).unwrap();
        assert_eq!(t.result.weights(), nu.weights());
        let g = pot(&[0.0, 1.0], &[0.0, 3f64.ln()]);
        let t = tilt(&nu, &g).unwrap();
        assert_abs_diff_eq!(t.result.weights()[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(t.result.weights()[1], 0.75, epsilon = 1e-15);
        let lhs = g.integrate(&t.result).unwrap() - log_mgf(&g, &nu).unwrap();
        assert_abs_diff_eq!(lhs, rel_entropy(&t.result, &nu), epsilon = 1e-12);
    }

    #[test]
    fn log_sum_exp_is_overflow_safe() {
        assert_abs_diff_eq!(log_sum_exp(&[1000.0, 1000.0], &[0.5, 0.5]), 1000.0, epsilon = 1e-12);
    }
}

//! Numerical tolerances shared by every solver.

use serde::{Deserialize, Serialize};

/// Mass conservation tolerance for measure invariants.
pub const MASS_TOL: f64 = 1e-10;
/// Points closer than this (sup-norm) are identified and their weights merged.
pub const POINT_DEDUP_EPS: f64 = 1e-12;
/// Relative gap allowed between transport primal and dual values.
pub const DUALITY_GAP_TOL: f64 = 1e-8;
/// Allowed violation of `g(x) − g(y) ≤ c(x, y)`.
pub const LIP_TOL: f64 = 1e-9;
/// Allowed violation of the triangle inequality for explicit cost matrices.
pub const COST_TRI_TOL: f64 = 1e-9;
/// Absolute primal-dual gap target for Γ-divergence solvers on values ≤ 10.
pub const GD_TOL: f64 = 1e-6;
/// Residual threshold used by optimality verification.
pub const VERIFY_TOL: f64 = 1e-6;
/// Iteration cap for iterative solvers.
pub const MAX_ITER: usize = 100_000;

/// The tolerance set in effect for a computation. Reports embed a copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub mass_tol: f64,
    pub point_dedup_eps: f64,
    pub duality_gap_tol: f64,
    pub lip_tol: f64,
    pub cost_tri_tol: f64,
    pub gd_tol: f64,
    pub verify_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mass_tol: MASS_TOL,
            point_dedup_eps: POINT_DEDUP_EPS,
            duality_gap_tol: DUALITY_GAP_TOL,
            lip_tol: LIP_TOL,
            cost_tri_tol: COST_TRI_TOL,
            gd_tol: GD_TOL,
            verify_tol: VERIFY_TOL,
            max_iter: MAX_ITER,
        }
    }
}

impl Tolerances {
    /// Gap target scaled for large values: `gd_tol · max(1, |value| / 10)`.
    pub fn gap_target(&self, value: f64) -> f64 {
        self.gd_tol * (value.abs() / 10.0).max(1.0)
    }
}

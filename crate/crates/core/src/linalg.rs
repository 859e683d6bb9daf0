//! Dense symmetric positive-definite solves.

use nalgebra::{DMatrix, DVector};

/// Solves `A x = b` for symmetric positive-definite `A` by Cholesky. When
/// the factorization fails, a growing diagonal shift is tried.
pub(crate) fn spd_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.solve(b));
    }
    let scale = (0..a.nrows()).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut shift = 1e-14 * scale;
    for _ in 0..12 {
        let mut shifted = a.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += shift;
        }
        if let Some(ch) = shifted.cholesky() {
            return Some(ch.solve(b));
        }
        shift *= 100.0;
    }
    None
}

//! Central finite-difference utilities used by the gradient test suites.
//!
//! These stay independent of the backward passes they check: they only ever
//! call a scalar loss closure.

/// Central finite differences: `(f(θ+h) - f(θ-h)) / 2h` per coordinate.
///
/// The closure receives the full perturbed parameter vector; `theta` is
/// restored between coordinates.
pub fn central_diff<F: FnMut(&[f64]) -> f64>(mut f: F, theta: &[f64], h: f64) -> Vec<f64> {
    let mut work = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let orig = work[i];
        work[i] = orig + h;
        let plus = f(&work);
        work[i] = orig - h;
        let minus = f(&work);
        work[i] = orig;
        grad.push((plus - minus) / (2.0 * h));
    }
    grad
}

/// Worst relative disagreement between two gradient vectors.
///
/// The denominator is floored at 1e-4 so near-zero gradients are compared
/// absolutely (to ~1e-8) instead of amplifying finite-difference noise.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-4))
        .fold(0.0, f64::max)
}

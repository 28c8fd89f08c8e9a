//! Small dense helpers shared across modules.

use ndarray::{Array1, Array2, ArrayBase, Data, Dimension, Zip};

pub(crate) fn sq_norm<S, D>(a: &ArrayBase<S, D>) -> f64
where
    S: Data<Elem = f64>,
    D: Dimension,
{
    a.iter().map(|x| x * x).sum()
}

pub(crate) fn inner<S, T, D>(a: &ArrayBase<S, D>, b: &ArrayBase<T, D>) -> f64
where
    S: Data<Elem = f64>,
    T: Data<Elem = f64>,
    D: Dimension,
{
    Zip::from(a).and(b).fold(0.0, |acc, x, y| acc + x * y)
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration. Returns 0 for the zero matrix.
pub(crate) fn spectral_norm_psd(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    // deterministic start with no zero components
    let mut x = Array1::from_shape_fn(n, |i| 1.0 + (i as f64 + 1.0).sqrt().fract());
    let norm = x.dot(&x).sqrt();
    x /= norm;
    let mut lambda = 0.0;
    for _ in 0..1000 {
        let y = a.dot(&x);
        let ny = y.dot(&y).sqrt();
        if ny == 0.0 {
            return 0.0;
        }
        let next = x.dot(&y);
        x = y / ny;
        if (next - lambda).abs() <= 1e-13 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Rayleigh quotient approaches from below; pad slightly so step sizes
    // derived from it stay on the safe side.
    lambda * (1.0 + 1e-9)
}

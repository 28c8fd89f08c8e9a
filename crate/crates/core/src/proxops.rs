//! Elementwise proximal maps and the scalar cubic behind every closed-form
//! `(U, V)` update.

use ndarray::{Array, Array1, Array2, ArrayBase, ArrayView1, Data, Dimension};

use crate::error::{NmdError, Result};

/// `S_τ(x) = sign(x)·max(|x| − τ, 0)` for a scalar.
#[inline]
pub fn soft_threshold_scalar(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Componentwise soft thresholding, the proximal map of `τ‖·‖₁`.
pub fn soft_threshold<S, D>(x: &ArrayBase<S, D>, tau: f64) -> Result<Array<f64, D>>
where
    S: Data<Elem = f64>,
    D: Dimension,
{
    if !(tau >= 0.0) {
        return Err(NmdError::InvalidOption {
            name: "tau",
            reason: format!("threshold must be nonnegative, got {tau}"),
        });
    }
    Ok(x.mapv(|v| soft_threshold_scalar(v, tau)))
}

/// Indices of the `s` largest-magnitude entries. Ties go to the lower index.
fn top_indices<'a>(values: impl Iterator<Item = &'a f64>, s: usize) -> Vec<usize> {
    let mut idx: Vec<(usize, f64)> = values.map(|v| v.abs()).enumerate().collect();
    if s >= idx.len() {
        return idx.into_iter().map(|(i, _)| i).collect();
    }
    // stable sort keeps lower indices first among equal magnitudes
    idx.sort_by(|a, b| b.1.total_cmp(&a.1));
    idx.truncate(s);
    idx.into_iter().map(|(i, _)| i).collect()
}

/// Keep the `s` largest-magnitude entries of `x` and zero the rest.
pub fn hard_threshold(x: ArrayView1<'_, f64>, s: usize) -> Array1<f64> {
    if s >= x.len() {
        return x.to_owned();
    }
    let mut out = Array1::zeros(x.len());
    for i in top_indices(x.iter(), s) {
        out[i] = x[i];
    }
    out
}

/// Hard thresholding of a matrix viewed as one row-major vector.
pub fn hard_threshold_matrix(x: &Array2<f64>, s: usize) -> Array2<f64> {
    if s >= x.len() {
        return x.clone();
    }
    let ncols = x.ncols();
    let mut out = Array2::zeros(x.dim());
    for flat in top_indices(x.iter(), s) {
        let (i, j) = (flat / ncols, flat % ncols);
        out[[i, j]] = x[[i, j]];
    }
    out
}

/// [`hard_threshold`] applied independently to every column.
pub fn hard_threshold_columns(v: &Array2<f64>, s: usize) -> Array2<f64> {
    let mut out = Array2::zeros(v.dim());
    for (col_in, mut col_out) in v.columns().into_iter().zip(out.columns_mut()) {
        col_out.assign(&hard_threshold(col_in, s));
    }
    out
}

/// Coefficients of `a·t³ + c·t − 1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoefficients {
    pub a: f64,
    pub c: f64,
}

impl CubicCoefficients {
    pub fn new(a: f64, c: f64) -> Self {
        CubicCoefficients { a, c }
    }

    pub fn residual(&self, t: f64) -> f64 {
        self.a * t * t * t + self.c * t - 1.0
    }
}

/// Radical form `t = (−∛α₁ − ∛α₂)/(3a)` with
/// `α₁,₂ = 3a(−9a ± √(81a² + 12ac³))/2`. `α₁` is evaluated in its
/// rationalized form `18a²c³ / (9a + √(·))`.
fn cubic_radicals(a: f64, c: f64) -> f64 {
    let disc = (81.0 * a * a + 12.0 * a * c * c * c).sqrt();
    let alpha1 = 18.0 * a * a * c * c * c / (9.0 * a + disc);
    let alpha2 = -1.5 * a * (9.0 * a + disc);
    (-alpha1.cbrt() - alpha2.cbrt()) / (3.0 * a)
}

/// The unique positive root of `a·t³ + c·t − 1 = 0` for `a ≥ 0`, `c > 0`.
///
/// The radical formula gives the starting point; Newton steps then polish it
/// to working precision. The root always lies in `(0, 1/c]`.
pub fn cubic_positive_root(coeffs: CubicCoefficients) -> Result<f64> {
    let CubicCoefficients { a, c } = coeffs;
    if !(c > 0.0) || !c.is_finite() {
        return Err(NmdError::InvalidOption {
            name: "c",
            reason: format!("linear coefficient must be positive and finite, got {c}"),
        });
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(NmdError::InvalidOption {
            name: "a",
            reason: format!("cubic coefficient must be nonnegative and finite, got {a}"),
        });
    }
    if a == 0.0 {
        return Ok(1.0 / c);
    }
    let hi = (1.0 / c).min(a.powf(-1.0 / 3.0));
    let mut t = cubic_radicals(a, c);
    if !(t.is_finite() && t > 0.0 && t <= hi) {
        t = hi;
    }
    // f is increasing and convex on t > 0, so Newton converges from either side
    for _ in 0..60 {
        let f = coeffs.residual(t);
        let df = 3.0 * a * t * t + c;
        let next = t - f / df;
        let next = if next > 0.0 { next } else { 0.5 * t };
        let done = (next - t).abs() <= 4.0 * f64::EPSILON * next;
        t = next;
        if done {
            break;
        }
    }
    Ok(t)
}

/// Solves the coupled stationarity system
///
/// ```text
/// 1 = t1·(c1 + a·(t1²·p2 + t2²·q2))
/// 1 = t2·(c2 + a·(t1²·p2 + t2²·q2))
/// ```
///
/// for `t1, t2 > 0`. Writing `σ = t1²·p2 + t2²·q2` reduces it to the scalar
/// equation `σ = p2/(c1 + aσ)² + q2/(c2 + aσ)²`, whose left-minus-right side
/// is increasing and concave in `σ`; safeguarded Newton from `σ = 0` solves it.
pub fn coupled_scale_pair(p2: f64, q2: f64, c1: f64, c2: f64, a: f64) -> Result<(f64, f64)> {
    if !(p2 >= 0.0 && q2 >= 0.0 && a >= 0.0) {
        return Err(NmdError::invalid("coupled_scale_pair: p2, q2, a must be nonnegative"));
    }
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(NmdError::invalid("coupled_scale_pair: c1, c2 must be positive"));
    }
    let g = |s: f64| {
        let d1 = c1 + a * s;
        let d2 = c2 + a * s;
        let val = s - p2 / (d1 * d1) - q2 / (d2 * d2);
        let der = 1.0 + 2.0 * a * p2 / (d1 * d1 * d1) + 2.0 * a * q2 / (d2 * d2 * d2);
        (val, der)
    };
    let mut lo = 0.0;
    let mut hi = p2 / (c1 * c1) + q2 / (c2 * c2);
    let mut s = 0.0;
    let mut converged = hi == 0.0;
    for _ in 0..200 {
        if converged {
            break;
        }
        let (val, der) = g(s);
        if val == 0.0 {
            break;
        }
        if val < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let mut next = s - val / der;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        converged = (next - s).abs() <= 4.0 * f64::EPSILON * next.max(f64::MIN_POSITIVE);
        s = next;
    }
    let t1 = 1.0 / (c1 + a * s);
    let t2 = 1.0 / (c2 + a * s);
    let sigma = t1 * t1 * p2 + t2 * t2 * q2;
    let r1 = t1 * (c1 + a * sigma) - 1.0;
    let r2 = t2 * (c2 + a * sigma) - 1.0;
    if !(r1.abs() <= 1e-10 && r2.abs() <= 1e-10) {
        return Err(NmdError::NonConvergence("coupled scale equations"));
    }
    Ok((t1, t2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Bisection on `(0, 1/c]`, independent of the closed form.
    fn bisect_root(a: f64, c: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0 / c);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if a * mid * mid * mid + c * mid - 1.0 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold_scalar(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold_scalar(-0.5, 1.0), 0.0);
        assert!((soft_threshold_scalar(-1.2, 0.5) + 0.7).abs() < 1e-15);
        let x = array![[3.0, -0.5], [-1.2, 0.0]];
        assert_eq!(soft_threshold(&x, 1.0).unwrap(), array![[2.0, 0.0], [-1.2 + 1.0, 0.0]]);
        assert!(soft_threshold(&x, -1.0).is_err());
    }

    #[test]
    fn soft_threshold_is_prox_of_l1() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x: f64 = rng.random_range(-3.0..3.0);
            let tau: f64 = rng.random_range(0.0..1.5);
            let y = soft_threshold_scalar(x, tau);
            let obj = |z: f64| tau * z.abs() + 0.5 * (z - x).powi(2);
            let best = obj(y);
            for g in 0..=6000 {
                let z = -3.0 + 0.001 * g as f64;
                assert!(best <= obj(z) + 1e-12);
            }
        }
    }

    #[test]
    fn hard_threshold_examples() {
        let x = array![3.0, -1.0, 2.0, 0.5];
        assert_eq!(hard_threshold(x.view(), 2), array![3.0, 0.0, 2.0, 0.0]);
        assert_eq!(hard_threshold(x.view(), 4), x);
        assert_eq!(hard_threshold(x.view(), 10), x);
        assert_eq!(hard_threshold(x.view(), 0), Array1::zeros(4));
        let tie = array![1.0, -2.0, 2.0, 0.1];
        assert_eq!(hard_threshold(tie.view(), 1), array![0.0, -2.0, 0.0, 0.0]);
    }

    #[test]
    fn hard_threshold_is_global_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let d = rng.random_range(1..=8);
            let x = Array1::from_shape_fn(d, |_| rng.random_range(-2.0..2.0));
            let s = rng.random_range(0..=d);
            let y = hard_threshold(x.view(), s);
            assert!(y.iter().filter(|&&v| v != 0.0).count() <= s);
            let got: f64 = (&y - &x).iter().map(|v| v * v).sum();
            // brute force over every support of size ≤ s
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << d) {
                if mask.count_ones() as usize > s {
                    continue;
                }
                let dist: f64 = (0..d)
                    .filter(|i| mask & (1 << i) == 0)
                    .map(|i| x[i] * x[i])
                    .sum();
                best = best.min(dist);
            }
            assert!((got - best).abs() < 1e-12);
        }
    }

    #[test]
    fn hard_threshold_columns_examples() {
        let eye = Array2::<f64>::eye(2);
        assert_eq!(hard_threshold_columns(&eye, 1), eye);
        assert_eq!(hard_threshold_columns(&eye, 0), Array2::zeros((2, 2)));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = Array2::from_shape_fn((3, 4), |_| rng.random_range(-1.0..1.0));
        let h = hard_threshold_columns(&v, 2);
        for j in 0..4 {
            let col = h.column(j);
            assert!(col.iter().filter(|&&x| x != 0.0).count() <= 2);
            assert_eq!(col.to_owned(), hard_threshold(v.column(j), 2));
        }
    }

    #[test]
    fn hard_threshold_matrix_is_row_major() {
        let x = array![[1.0, 3.0], [3.0, 0.5]];
        assert_eq!(hard_threshold_matrix(&x, 1), array![[0.0, 3.0], [0.0, 0.0]]);
    }

    #[test]
    fn cubic_examples() {
        let t = cubic_positive_root(CubicCoefficients::new(0.5, 0.5)).unwrap();
        assert!((t - 1.0).abs() < 1e-14);
        assert_eq!(cubic_positive_root(CubicCoefficients::new(0.0, 2.0)).unwrap(), 0.5);
        let t = cubic_positive_root(CubicCoefficients::new(2.0, 1.0)).unwrap();
        let oracle = bisect_root(2.0, 1.0);
        assert!((t - oracle).abs() < 1e-14);
        assert!((t - 0.58975).abs() < 1e-5);
        assert!(cubic_positive_root(CubicCoefficients::new(1.0, 0.0)).is_err());
        assert!(cubic_positive_root(CubicCoefficients::new(-1.0, 1.0)).is_err());
    }

    #[test]
    fn radical_form_is_accurate_in_balanced_regime() {
        for &(a, c) in &[(1.0, 1.0), (3.0, 0.2), (10.0, 2.0)] {
            let t = cubic_radicals(a, c);
            assert!((t - bisect_root(a, c)).abs() < 1e-10);
        }
    }

    #[test]
    fn cubic_residual_over_wide_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20000 {
            let a = 10f64.powf(rng.random_range(-8.0..6.0));
            let c = 10f64.powf(rng.random_range(-8.0..6.0));
            let coeffs = CubicCoefficients::new(a, c);
            let t = cubic_positive_root(coeffs).unwrap();
            assert!(t > 0.0 && t <= 1.0 / c * (1.0 + 1e-15));
            assert!(coeffs.residual(t).abs() <= 1e-10, "a={a} c={c}");
        }
    }

    #[test]
    fn cubic_root_decreases_in_both_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let a = rng.random_range(0.0..100.0);
            let c = rng.random_range(0.01..100.0);
            let da = rng.random_range(0.01..10.0);
            let dc = rng.random_range(0.01..10.0);
            let t = cubic_positive_root(CubicCoefficients::new(a, c)).unwrap();
            let ta = cubic_positive_root(CubicCoefficients::new(a + da, c)).unwrap();
            let tc = cubic_positive_root(CubicCoefficients::new(a, c + dc)).unwrap();
            assert!(ta <= t && tc <= t);
        }
    }

    #[test]
    fn coupled_pair_examples() {
        let (a, c, p2, q2) = (3.0, 2.0, 1.5, 0.7);
        let (t1, t2) = coupled_scale_pair(p2, q2, c, c, a).unwrap();
        let t = cubic_positive_root(CubicCoefficients::new(a * (p2 + q2), c)).unwrap();
        assert!((t1 - t).abs() < 1e-13 && (t2 - t).abs() < 1e-13);

        let (t1, t2) = coupled_scale_pair(0.0, 0.0, 2.0, 4.0, 3.0).unwrap();
        assert_eq!((t1, t2), (0.5, 0.25));
    }

    #[test]
    fn coupled_pair_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..2000 {
            let p2 = 10f64.powf(rng.random_range(-4.0..4.0));
            let q2 = 10f64.powf(rng.random_range(-4.0..4.0));
            let c1 = 10f64.powf(rng.random_range(-2.0..3.0));
            let c2 = 10f64.powf(rng.random_range(-2.0..3.0));
            let a = rng.random_range(0.0..5.0);
            let (t1, t2) = coupled_scale_pair(p2, q2, c1, c2, a).unwrap();
            let sigma = t1 * t1 * p2 + t2 * t2 * q2;
            assert!((t1 * (c1 + a * sigma) - 1.0).abs() <= 1e-10);
            assert!((t2 * (c2 + a * sigma) - 1.0).abs() <= 1e-10);
        }
    }
}

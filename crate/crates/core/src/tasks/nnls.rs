use ndarray::Array2;

use crate::error::{check_shape, NmdError, Result};
use crate::linalg::{inner, spectral_norm_psd, sq_norm};

#[derive(Debug, Clone, Copy)]
pub struct NnlsOptions {
    pub max_iter: usize,
    /// Stop once the Frobenius norm of the gradient mapping drops below this.
    pub tol: f64,
}

impl Default for NnlsOptions {
    fn default() -> Self {
        NnlsOptions {
            max_iter: 500,
            tol: 1e-10,
        }
    }
}

/// `argmin_{X ≥ 0} ‖B − AX‖_F` by accelerated projected gradient with
/// adaptive restart, step `1/‖AᵀA‖₂`.
pub fn nnls(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    nnls_with(a, b, NnlsOptions::default())
}

pub fn nnls_with(a: &Array2<f64>, b: &Array2<f64>, opts: NnlsOptions) -> Result<Array2<f64>> {
    if a.nrows() != b.nrows() {
        return Err(NmdError::invalid(format!(
            "nnls: A has {} rows but B has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let ata = a.t().dot(a);
    let atb = a.t().dot(b);
    let lip = spectral_norm_psd(&ata);
    let mut x = Array2::<f64>::zeros((a.ncols(), b.ncols()));
    if lip == 0.0 {
        return Ok(x);
    }
    let step = 1.0 / lip;
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..opts.max_iter {
        let grad = ata.dot(&y) - &atb;
        let next = (&y - &(grad * step)).mapv(|v| v.max(0.0));
        let mapping = sq_norm(&(&y - &next)).sqrt() * lip;
        // restart momentum when it points against the projected step
        let restart = inner(&(&y - &next), &(&next - &x)) > 0.0;
        let t_next = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let momentum = if restart { 0.0 } else { (t - 1.0) / t_next };
        y = &next + &((&next - &x) * momentum);
        x = next;
        t = t_next;
        if mapping <= opts.tol {
            break;
        }
    }
    Ok(x)
}

/// `min_{V̂ ≥ 0} ‖M − max(0, UV)·V̂‖_F / ‖M‖_F`.
pub fn tol_nmf(m: &Array2<f64>, u: &Array2<f64>, v: &Array2<f64>) -> Result<f64> {
    let denom = sq_norm(m).sqrt();
    if denom == 0.0 {
        return Err(NmdError::invalid("tol_nmf undefined for a zero matrix"));
    }
    if u.ncols() != v.nrows() {
        return Err(NmdError::invalid("tol_nmf: inner dimensions of U and V differ"));
    }
    check_shape("tol_nmf", (m.nrows(), v.ncols()), (u.nrows(), v.ncols()))?;
    let a = u.dot(v).mapv(|x| x.max(0.0));
    let vhat = nnls(&a, m)?;
    Ok(sq_norm(&(m - &a.dot(&vhat))).sqrt() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn objective(a: &Array2<f64>, b: &Array2<f64>, x: &Array2<f64>) -> f64 {
        sq_norm(&(b - &a.dot(x)))
    }

    #[test]
    fn exact_nonnegative_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Array2::from_shape_fn((20, 5), |_| rng.random_range(0.0..1.0));
        let vstar = Array2::from_shape_fn((5, 8), |_| rng.random_range(0.0..2.0));
        let b = a.dot(&vstar);
        let x = nnls_with(&a, &b, NnlsOptions { max_iter: 20_000, tol: 1e-12 }).unwrap();
        assert!(objective(&a, &b, &x).sqrt() <= 1e-8 * sq_norm(&b).sqrt());
    }

    #[test]
    fn identity_projects() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = Array2::from_shape_fn((4, 3), |_| rng.random_range(-1.0..1.0));
        let x = nnls(&Array2::eye(4), &b).unwrap();
        let expect = b.mapv(|v| v.max(0.0));
        assert!(sq_norm(&(&x - &expect)) < 1e-24);
    }

    #[test]
    fn matches_long_run_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let a = Array2::from_shape_fn((20, 5), |_| rng.random_range(-1.0..1.0));
            let b = Array2::from_shape_fn((20, 8), |_| rng.random_range(-1.0..1.0));
            let x = nnls(&a, &b).unwrap();
            let reference = nnls_with(&a, &b, NnlsOptions { max_iter: 100_000, tol: 0.0 }).unwrap();
            let (f, f_ref) = (objective(&a, &b, &x), objective(&a, &b, &reference));
            assert!(x.iter().all(|&v| v >= 0.0));
            assert!((f - f_ref).abs() <= 1e-6 * f_ref, "{f} vs {f_ref}");
            // KKT: min(x, grad) vanishes entrywise
            let grad = a.t().dot(&(a.dot(&reference) - &b));
            for (xv, g) in reference.iter().zip(grad.iter()) {
                assert!(xv.min(*g).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn tol_nmf_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u: Array2<f64> = Array2::from_shape_fn((10, 3), |_| rng.random_range(-1.0..1.0));
        let v: Array2<f64> = Array2::from_shape_fn((3, 4), |_| rng.random_range(-1.0..1.0));
        let vhat = Array2::from_shape_fn((4, 6), |_| rng.random_range(0.0..1.0));
        let m = u.dot(&v).mapv(|x| x.max(0.0)).dot(&vhat);
        assert!(tol_nmf(&m, &u, &v).unwrap() <= 1e-6);
        let tol = tol_nmf(&m, &Array2::zeros((10, 3)), &Array2::zeros((3, 4))).unwrap();
        assert_eq!(tol, 1.0);
        assert!(tol_nmf(&Array2::zeros((10, 6)), &u, &v).is_err());
    }
}

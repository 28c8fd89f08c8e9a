//! Kernel-generating distances for the `(U, V)` Bregman step.
//!
//! With `s = ‖U‖²_F + ‖V‖²_F`, the kernels are
//!
//! ```text
//! ψ₁ = (s / 2)²,   ψ₂ = s / 2,   ψ = a·ψ₁ + c·ψ₂ + (e/2)‖U‖²_F
//! ```
//!
//! For `F = ½‖W − UV‖²` the pair `(F, ψ)` is L-smooth adaptable for every
//! `L ≥ 1` when `a = 3` and `c = ‖W‖_F`.

use crate::error::{NmdError, Result};
use crate::linalg::{inner, sq_norm};
use crate::matmodel::{residual, FactorPair, SlackMatrix};
use ndarray::Array2;

/// Coefficients of `ψ = a·ψ₁ + c·ψ₂ + (e/2)‖U‖²_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub a: f64,
    pub c: f64,
    pub e: f64,
}

impl KernelSpec {
    pub fn new(a: f64, c: f64, e: f64) -> Result<Self> {
        for (name, x) in [("a", a), ("c", c), ("e", e)] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(NmdError::invalid(format!(
                    "kernel coefficient {name} = {x} must be finite and nonnegative"
                )));
            }
        }
        if a + c + e <= 0.0 {
            return Err(NmdError::invalid("kernel coefficients are all zero"));
        }
        Ok(KernelSpec { a, c, e })
    }

    /// The plain quadratic kernel `½‖·‖²`.
    pub fn quadratic() -> Self {
        KernelSpec {
            a: 0.0,
            c: 1.0,
            e: 0.0,
        }
    }

    /// Strong-convexity modulus used by the monitors. The quartic part adds
    /// curvature but no uniform lower bound, so this is `c`.
    pub fn sigma(&self) -> f64 {
        self.c
    }
}

/// `ψ(U, V)`.
pub fn psi_value(pair: &FactorPair, spec: &KernelSpec) -> f64 {
    let nu = sq_norm(pair.u());
    let s = nu + sq_norm(pair.v());
    let half = 0.5 * s;
    spec.a * half * half + spec.c * half + 0.5 * spec.e * nu
}

/// `∇ψ = ([a·s + c + e]·U, [a·s + c]·V)`.
pub fn psi_grad(pair: &FactorPair, spec: &KernelSpec) -> (Array2<f64>, Array2<f64>) {
    let s = pair.sq_norm();
    let base = spec.a * s + spec.c;
    (pair.u() * (base + spec.e), pair.v() * base)
}

/// `D_ψ(x, y) = ψ(x) − ψ(y) − ⟨∇ψ(y), x − y⟩`.
///
/// Evaluated in the expanded form
/// `a·[q_y‖d‖² + (⟨y,d⟩ + ½‖d‖²)²] + (c/2)‖d‖² + (e/2)‖d_U‖²`
/// with `d = x − y`, `q_y = ½‖y‖²`, which is nonnegative term by term and
/// free of the cancellation the direct difference suffers near `x = y`.
pub fn bregman_distance(x: &FactorPair, y: &FactorPair, spec: &KernelSpec) -> Result<f64> {
    x.same_shape(y)?;
    let du = x.u() - y.u();
    let dv = x.v() - y.v();
    let du2 = sq_norm(&du);
    let d2 = du2 + sq_norm(&dv);
    let qy = 0.5 * y.sq_norm();
    let yd = inner(y.u(), &du) + inner(y.v(), &dv);
    let dq = yd + 0.5 * d2;
    Ok(spec.a * (qy * d2 + dq * dq) + 0.5 * spec.c * d2 + 0.5 * spec.e * du2)
}

/// `|F(x) − F(y) − ⟨∇F(y), x − y⟩| − L·D_ψ(x, y)` for `F = ½‖W − UV‖²`.
/// A nonpositive value certifies the L-smad inequality at `(x, y)`.
///
/// The linearization error is computed exactly as `⟨R, B⟩ + ½‖A + B‖²`
/// where `R = U_yV_y − W`, `A = dU·V_y + U_y·dV`, `B = dU·dV`.
pub fn lsmad_gap(
    x: &FactorPair,
    y: &FactorPair,
    w: &SlackMatrix,
    spec: &KernelSpec,
    l: f64,
) -> Result<f64> {
    x.same_shape(y)?;
    let du = x.u() - y.u();
    let dv = x.v() - y.v();
    let r = residual(y, w);
    let b = du.dot(&dv);
    let mut ab = du.dot(y.v()) + y.u().dot(&dv);
    ab += &b;
    let lin_err = inner(&r, &b) + 0.5 * sq_norm(&ab);
    Ok(lin_err.abs() - l * bregman_distance(x, y, spec)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matmodel::smooth_value;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_pair(rng: &mut ChaCha8Rng, m: usize, r: usize, n: usize, scale: f64) -> FactorPair {
        FactorPair::new(
            Array2::from_shape_fn((m, r), |_| scale * rng.random_range(-1.0..1.0)),
            Array2::from_shape_fn((r, n), |_| scale * rng.random_range(-1.0..1.0)),
        )
        .unwrap()
    }

    fn direct_bregman(x: &FactorPair, y: &FactorPair, spec: &KernelSpec) -> f64 {
        let (gu, gv) = psi_grad(y, spec);
        psi_value(x, spec)
            - psi_value(y, spec)
            - inner(&gu, &(x.u() - y.u()))
            - inner(&gv, &(x.v() - y.v()))
    }

    #[test]
    fn psi_examples() {
        let spec = KernelSpec::new(3.0, 2.0, 0.0).unwrap();
        assert_eq!(psi_value(&FactorPair::zeros(2, 1, 2), &spec), 0.0);
        let one = FactorPair::new(array![[1.0]], array![[1.0]]).unwrap();
        assert_eq!(psi_value(&one, &spec), 5.0);
        let (gu, gv) = psi_grad(&one, &spec);
        assert_eq!(gu, array![[8.0]]);
        assert_eq!(gv, array![[8.0]]);
    }

    #[test]
    fn psi_matches_term_by_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = KernelSpec::new(3.0, 1.7, 0.4).unwrap();
        let p = rand_pair(&mut rng, 4, 2, 3, 1.0);
        let nu: f64 = p.u().iter().map(|x| x * x).sum();
        let nv: f64 = p.v().iter().map(|x| x * x).sum();
        let psi1 = ((nu + nv) / 2.0).powi(2);
        let psi2 = (nu + nv) / 2.0;
        let expected = 3.0 * psi1 + 1.7 * psi2 + 0.2 * nu;
        assert!((psi_value(&p, &spec) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn psi_grad_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = KernelSpec::new(3.0, 1.3, 0.5).unwrap();
        for _ in 0..20 {
            let p = rand_pair(&mut rng, 3, 2, 4, 1.0);
            let (gu, gv) = psi_grad(&p, &spec);
            let h = 1e-6;
            let mut err = 0.0;
            for idx in ndarray::indices(gu.dim()) {
                let (mut up, mut dn) = (p.u().clone(), p.u().clone());
                up[idx] += h;
                dn[idx] -= h;
                let fd = (psi_value(&FactorPair::from_parts(up, p.v().clone()), &spec)
                    - psi_value(&FactorPair::from_parts(dn, p.v().clone()), &spec))
                    / (2.0 * h);
                err += (fd - gu[idx]).powi(2);
            }
            for idx in ndarray::indices(gv.dim()) {
                let (mut up, mut dn) = (p.v().clone(), p.v().clone());
                up[idx] += h;
                dn[idx] -= h;
                let fd = (psi_value(&FactorPair::from_parts(p.u().clone(), up), &spec)
                    - psi_value(&FactorPair::from_parts(p.u().clone(), dn), &spec))
                    / (2.0 * h);
                err += (fd - gv[idx]).powi(2);
            }
            let scale = (sq_norm(&gu) + sq_norm(&gv)).sqrt();
            assert!(err.sqrt() / scale < 1e-6);
        }
    }

    #[test]
    fn bregman_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = KernelSpec::new(3.0, 2.0, 0.0).unwrap();
        let x = rand_pair(&mut rng, 3, 2, 3, 1.0);
        assert_eq!(bregman_distance(&x, &x, &spec).unwrap(), 0.0);

        let y = rand_pair(&mut rng, 3, 2, 3, 1.0);
        let q = bregman_distance(&x, &y, &KernelSpec::quadratic()).unwrap();
        let half_sq = 0.5 * (sq_norm(&(x.u() - y.u())) + sq_norm(&(x.v() - y.v())));
        assert!((q - half_sq).abs() < 1e-14);

        let z = rand_pair(&mut rng, 3, 1, 3, 1.0);
        assert!(bregman_distance(&x, &z, &spec).is_err());
    }

    #[test]
    fn bregman_expanded_form_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let spec = KernelSpec::new(
                rng.random_range(0.0..4.0),
                rng.random_range(0.0..4.0),
                rng.random_range(0.0..1.0),
            )
            .unwrap();
            let x = rand_pair(&mut rng, 3, 2, 4, 2.0);
            let y = rand_pair(&mut rng, 3, 2, 4, 2.0);
            let fast = bregman_distance(&x, &y, &spec).unwrap();
            let slow = direct_bregman(&x, &y, &spec);
            assert!((fast - slow).abs() <= 1e-10 * (1.0 + slow.abs()));
        }
    }

    #[test]
    fn bregman_nonnegative_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = KernelSpec::new(3.0, 5.0, 0.0).unwrap();
        for _ in 0..1000 {
            let x = rand_pair(&mut rng, 4, 3, 4, 3.0);
            let y = rand_pair(&mut rng, 4, 3, 4, 3.0);
            assert!(bregman_distance(&x, &y, &spec).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn three_point_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let spec = KernelSpec::new(3.0, 2.5, 0.3).unwrap();
        for _ in 0..100 {
            let a = rand_pair(&mut rng, 3, 2, 3, 1.0);
            let b = rand_pair(&mut rng, 3, 2, 3, 1.0);
            let c = rand_pair(&mut rng, 3, 2, 3, 1.0);
            let (gbu, gbv) = psi_grad(&b, &spec);
            let (gcu, gcv) = psi_grad(&c, &spec);
            let lhs = inner(&(gbu - gcu), &(a.u() - c.u())) + inner(&(gbv - gcv), &(a.v() - c.v()));
            let rhs = bregman_distance(&a, &c, &spec).unwrap()
                + bregman_distance(&c, &b, &spec).unwrap()
                - bregman_distance(&a, &b, &spec).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn lsmad_linearization_error_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = KernelSpec::quadratic();
        for _ in 0..50 {
            let x = rand_pair(&mut rng, 4, 2, 3, 1.0);
            let y = rand_pair(&mut rng, 4, 2, 3, 1.0);
            let w = SlackMatrix::from_array(Array2::from_shape_fn((4, 3), |_| {
                rng.random_range(-1.0..1.0)
            }));
            let (gu, gv) = crate::matmodel::grad_f(&y, &w).unwrap();
            let direct = smooth_value(&x, &w)
                - smooth_value(&y, &w)
                - inner(&gu, &(x.u() - y.u()))
                - inner(&gv, &(x.v() - y.v()));
            let gap = lsmad_gap(&x, &y, &w, &spec, 0.0).unwrap();
            assert!((gap - direct.abs()).abs() < 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn lsmad_holds_with_table_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..300 {
            let w = SlackMatrix::from_array(Array2::from_shape_fn((5, 4), |_| {
                rng.random_range(-2.0..2.0)
            }));
            let spec = KernelSpec::new(3.0, w.frobenius_norm(), 0.0).unwrap();
            let x = rand_pair(&mut rng, 5, 2, 4, 2.0);
            let y = rand_pair(&mut rng, 5, 2, 4, 2.0);
            let d = bregman_distance(&x, &y, &spec).unwrap();
            assert!(lsmad_gap(&x, &y, &w, &spec, 1.0).unwrap() <= 1e-10 * (1.0 + d));
            assert_eq!(lsmad_gap(&x, &x, &w, &spec, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn lsmad_fails_without_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let zero = KernelSpec {
            a: 0.0,
            c: 0.0,
            e: 0.0,
        };
        let mut positives = 0;
        for _ in 0..100 {
            let w = SlackMatrix::from_array(Array2::from_shape_fn((4, 4), |_| {
                rng.random_range(-2.0..2.0)
            }));
            let x = rand_pair(&mut rng, 4, 2, 4, 1.0);
            let y = rand_pair(&mut rng, 4, 2, 4, 1.0);
            if lsmad_gap(&x, &y, &w, &zero, 1.0).unwrap() > 0.0 {
                positives += 1;
            }
        }
        assert!(positives > 50);
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::new(-1.0, 1.0, 0.0).is_err());
        assert!(KernelSpec::new(0.0, 0.0, 0.0).is_err());
        assert!(KernelSpec::new(3.0, f64::NAN, 0.0).is_err());
    }
}

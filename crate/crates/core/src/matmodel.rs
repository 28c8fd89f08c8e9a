//! Problem representation: the observed matrix with its zero/positive index
//! sets, the factor pair `(U, V)`, the slack matrix `W`, and the smooth term
//! `F(U, V, W) = ½‖W − UV‖²_F`.

use ndarray::{Array2, Zip};

use crate::error::{check_shape, NmdError, Result};
use crate::linalg::sq_norm;
use crate::regularizers::{reg_value, RegularizerCase};

/// Nonnegative target `M` together with its index sets.
///
/// `I₊` is stored as a boolean mask over the dense data; `I₀` is its
/// complement.
#[derive(Debug, Clone)]
pub struct ObservedMatrix {
    data: Array2<f64>,
    positive: Array2<bool>,
    norm: f64,
}

impl ObservedMatrix {
    /// Validates `m` (finite, nonnegative) and precomputes the index sets.
    pub fn new(m: Array2<f64>) -> Result<Self> {
        for ((i, j), &x) in m.indexed_iter() {
            if !x.is_finite() {
                return Err(NmdError::invalid(format!("entry ({i},{j}) is not finite")));
            }
            if x < 0.0 {
                return Err(NmdError::invalid(format!(
                    "entry ({i},{j}) = {x} is negative; a ReLU target must be nonnegative"
                )));
            }
        }
        let positive = m.mapv(|x| x > 0.0);
        let norm = sq_norm(&m).sqrt();
        Ok(ObservedMatrix {
            data: m,
            positive,
            norm,
        })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn positive_mask(&self) -> &Array2<bool> {
        &self.positive
    }

    pub fn is_positive(&self, i: usize, j: usize) -> bool {
        self.positive[[i, j]]
    }

    /// Positions with `M_ij > 0`, row-major.
    pub fn i_pos(&self) -> Vec<(usize, usize)> {
        self.positive
            .indexed_iter()
            .filter(|(_, &p)| p)
            .map(|(ij, _)| ij)
            .collect()
    }

    /// Positions with `M_ij = 0`, row-major.
    pub fn i_zero(&self) -> Vec<(usize, usize)> {
        self.positive
            .indexed_iter()
            .filter(|(_, &p)| !p)
            .map(|(ij, _)| ij)
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.positive.iter().filter(|&&p| p).count()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm
    }
}

/// Same as [`ObservedMatrix::new`].
pub fn build_observed(m: Array2<f64>) -> Result<ObservedMatrix> {
    ObservedMatrix::new(m)
}

/// The factors `U` (m×r) and `V` (r×n).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    u: Array2<f64>,
    v: Array2<f64>,
}

impl FactorPair {
    pub fn new(u: Array2<f64>, v: Array2<f64>) -> Result<Self> {
        if u.ncols() != v.nrows() {
            return Err(NmdError::invalid(format!(
                "inner dimensions differ: U is {:?}, V is {:?}",
                u.dim(),
                v.dim()
            )));
        }
        if u.ncols() == 0 {
            return Err(NmdError::invalid("rank must be positive"));
        }
        Ok(FactorPair { u, v })
    }

    pub(crate) fn from_parts(u: Array2<f64>, v: Array2<f64>) -> Self {
        debug_assert_eq!(u.ncols(), v.nrows());
        FactorPair { u, v }
    }

    pub fn zeros(m: usize, r: usize, n: usize) -> Self {
        FactorPair {
            u: Array2::zeros((m, r)),
            v: Array2::zeros((r, n)),
        }
    }

    pub fn u(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn v(&self) -> &Array2<f64> {
        &self.v
    }

    pub fn into_parts(self) -> (Array2<f64>, Array2<f64>) {
        (self.u, self.v)
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// `(m, r, n)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.u.nrows(), self.u.ncols(), self.v.ncols())
    }

    /// `X = UV`.
    pub fn product(&self) -> Array2<f64> {
        self.u.dot(&self.v)
    }

    /// `‖U‖²_F + ‖V‖²_F`.
    pub fn sq_norm(&self) -> f64 {
        sq_norm(&self.u) + sq_norm(&self.v)
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }

    pub(crate) fn same_shape(&self, other: &FactorPair) -> Result<()> {
        check_shape("factor U", self.u.dim(), other.u.dim())?;
        check_shape("factor V", self.v.dim(), other.v.dim())
    }
}

/// Slack matrix `W` with `max(0, W) = M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackMatrix {
    w: Array2<f64>,
}

impl SlackMatrix {
    /// Wraps `w` after checking feasibility against `obs`.
    pub fn new(w: Array2<f64>, obs: &ObservedMatrix) -> Result<Self> {
        check_shape("slack matrix", obs.shape(), w.dim())?;
        let feasible = Zip::from(&w)
            .and(obs.data())
            .and(obs.positive_mask())
            .all(|&w, &m, &p| if p { w == m } else { w <= 0.0 });
        if !feasible {
            return Err(NmdError::invalid("slack matrix violates max(0, W) = M"));
        }
        Ok(SlackMatrix { w })
    }

    /// Wraps an arbitrary matrix without the feasibility check.
    pub fn from_array(w: Array2<f64>) -> Self {
        SlackMatrix { w }
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.w
    }

    pub fn frobenius_norm(&self) -> f64 {
        sq_norm(&self.w).sqrt()
    }

    pub fn is_feasible(&self, obs: &ObservedMatrix) -> bool {
        self.w.dim() == obs.shape()
            && Zip::from(&self.w)
                .and(obs.data())
                .all(|&w, &m| w.max(0.0) == m)
    }
}

/// Exact minimizer of `½‖W − X‖²` over `max(0, W) = M`:
/// `W_ij = M_ij` on `I₊` and `min(0, X_ij)` on `I₀`.
pub fn update_slack(x: &Array2<f64>, obs: &ObservedMatrix) -> Result<SlackMatrix> {
    check_shape("update_slack", obs.shape(), x.dim())?;
    let mut w = Array2::zeros(x.dim());
    Zip::from(&mut w)
        .and(x)
        .and(obs.data())
        .and(obs.positive_mask())
        .for_each(|w, &x, &m, &p| *w = if p { m } else { x.min(0.0) });
    Ok(SlackMatrix { w })
}

/// `UV − W`.
pub(crate) fn residual(pair: &FactorPair, w: &SlackMatrix) -> Array2<f64> {
    let mut r = pair.product();
    r -= w.w();
    r
}

/// Partial gradients of `F(U,V,W) = ½‖W − UV‖²`:
/// `(UV − W)Vᵀ` and `Uᵀ(UV − W)`.
pub fn grad_f(pair: &FactorPair, w: &SlackMatrix) -> Result<(Array2<f64>, Array2<f64>)> {
    let (m, _, n) = pair.dims();
    check_shape("grad_f", (m, n), w.w().dim())?;
    let r = residual(pair, w);
    Ok((r.dot(&pair.v.t()), pair.u.t().dot(&r)))
}

/// `F(U,V,W) = ½‖W − UV‖²`.
pub fn smooth_value(pair: &FactorPair, w: &SlackMatrix) -> f64 {
    0.5 * sq_norm(&residual(pair, w))
}

/// `Φ = ½‖W − UV‖² + H₁(U) + H₂(V)`. Violated indicator constraints give
/// `f64::INFINITY`.
///
/// # Panics
/// If the shapes of `pair` and `w` are incompatible.
pub fn objective(pair: &FactorPair, w: &SlackMatrix, case: &RegularizerCase) -> f64 {
    smooth_value(pair, w) + reg_value(case, pair)
}

/// `‖M − max(0, X)‖_F / ‖M‖_F`.
pub fn relative_error_of(obs: &ObservedMatrix, x: &Array2<f64>) -> Result<f64> {
    check_shape("relative_error", obs.shape(), x.dim())?;
    if obs.frobenius_norm() == 0.0 {
        return Err(NmdError::invalid("relative error undefined for a zero target"));
    }
    let num = Zip::from(obs.data())
        .and(x)
        .fold(0.0, |acc, &m, &x| {
            let d = m - x.max(0.0);
            acc + d * d
        });
    Ok(num.sqrt() / obs.frobenius_norm())
}

/// `Tol = ‖M − max(0, UV)‖_F / ‖M‖_F`.
pub fn relative_error(obs: &ObservedMatrix, pair: &FactorPair) -> Result<f64> {
    relative_error_of(obs, &pair.product())
}

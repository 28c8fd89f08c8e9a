//! The six regularizer configurations `H₁(U) + H₂(V)` with their kernels and
//! closed-form `(U, V)` updates.
//!
//! Every update solves
//!
//! ```text
//! min  λH₁(U) + λH₂(V) + ⟨P, U⟩ + ⟨Q, V⟩ + ψ(U, V)
//! ```
//!
//! and has the form `U = t₁·T₁(−P)`, `V = t₂·T₂(−Q)` where `T` is the
//! identity, a soft threshold or a hard threshold, and the scales solve a
//! scalar cubic.

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{NmdError, Result};
use crate::kernels::{psi_value, KernelSpec};
use crate::linalg::{inner, sq_norm};
use crate::matmodel::FactorPair;
use crate::proxops::{
    coupled_scale_pair, cubic_positive_root, hard_threshold_columns, hard_threshold_matrix,
    soft_threshold, CubicCoefficients,
};

/// Quartic kernel coefficient shared by every configuration.
pub const QUARTIC_COEFF: f64 = 3.0;

/// How `ℓ0` budgets are counted in [`RegularizerCase::SparsityConstraint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparsityScope {
    /// `‖U‖₀ ≤ s` over the whole matrix.
    Global,
    /// `‖U_{:,j}‖₀ ≤ s` for every column `j`.
    PerColumn,
}

impl SparsityScope {
    pub fn name(&self) -> &'static str {
        match self {
            SparsityScope::Global => "global",
            SparsityScope::PerColumn => "per-column",
        }
    }
}

/// Symmetric graph Laplacian over the rows of `U`.
#[derive(Debug, Clone)]
pub struct GraphLaplacian {
    matrix: Arc<Array2<f64>>,
    frobenius: f64,
}

impl GraphLaplacian {
    /// Checks squareness, symmetry and zero row sums.
    pub fn new(l: Array2<f64>) -> Result<Self> {
        let (n, k) = l.dim();
        if n != k {
            return Err(NmdError::invalid(format!("laplacian must be square, got {n}×{k}")));
        }
        let scale = l.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let x = l[[i, j]];
                if !x.is_finite() {
                    return Err(NmdError::invalid("laplacian has non-finite entries"));
                }
                if (x - l[[j, i]]).abs() > 1e-12 * scale {
                    return Err(NmdError::invalid("laplacian is not symmetric"));
                }
                sum += x;
            }
            if sum.abs() > 1e-9 * scale * n as f64 {
                return Err(NmdError::invalid(format!("laplacian row {i} does not sum to zero")));
            }
        }
        let frobenius = sq_norm(&l).sqrt();
        Ok(GraphLaplacian {
            matrix: Arc::new(l),
            frobenius,
        })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius
    }

    /// `Tr(UᵀLU)`.
    pub fn quadratic_form(&self, u: &Array2<f64>) -> f64 {
        inner(u, &self.matrix.dot(u))
    }
}

/// One `H₁(U) + H₂(V)` configuration.
#[derive(Debug, Clone)]
pub enum RegularizerCase {
    /// `0 + 0`.
    None,
    /// `(η₁/2)‖U‖² + (η₂/2)‖V‖²`.
    Tikhonov { eta1: f64, eta2: f64 },
    /// `η₁‖U‖₁ + η₂‖V‖₁`.
    L1L1 { eta1: f64, eta2: f64 },
    /// `(μ₀/2)Tr(UᵀLU) + (η₁/2)‖U‖² + (η₂/2)‖V‖²`.
    GraphTikhonov {
        mu0: f64,
        eta1: f64,
        eta2: f64,
        laplacian: GraphLaplacian,
    },
    /// `η₁‖U‖₁ − (η₂/2)‖U‖² + 0`.
    L1MinusFro { eta1: f64, eta2: f64 },
    /// `I{‖U‖₀ ≤ s₁} + I{‖V‖₀ ≤ s₂}`; `None` leaves a factor unconstrained.
    SparsityConstraint {
        s1: Option<usize>,
        s2: Option<usize>,
        scope: SparsityScope,
    },
}

/// How the two scales of the Tikhonov-type updates are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleRule {
    /// Two decoupled cubics, each with quartic coefficient
    /// `3(‖P‖² + ‖Q‖²)`. Exact when `η₁ = η₂`.
    #[default]
    Decoupled,
    /// The exact stationarity system, coupled through
    /// `3(t₁²‖P‖² + t₂²‖Q‖²)`.
    Coupled,
}

impl RegularizerCase {
    pub fn sparsity(s1: Option<usize>, s2: Option<usize>, scope: SparsityScope) -> Self {
        RegularizerCase::SparsityConstraint { s1, s2, scope }
    }

    pub fn graph(mu0: f64, eta1: f64, eta2: f64, laplacian: GraphLaplacian) -> Self {
        RegularizerCase::GraphTikhonov {
            mu0,
            eta1,
            eta2,
            laplacian,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegularizerCase::None => "none",
            RegularizerCase::Tikhonov { .. } => "tikhonov",
            RegularizerCase::L1L1 { .. } => "l1l1",
            RegularizerCase::GraphTikhonov { .. } => "graph",
            RegularizerCase::L1MinusFro { .. } => "l1-minus-fro",
            RegularizerCase::SparsityConstraint { .. } => "sparsity",
        }
    }

    /// Checks parameter ranges and, for the graph case, that the Laplacian
    /// matches the `m` rows of `U`.
    pub fn validate(&self, m: usize) -> Result<()> {
        let nonneg = |name: &'static str, x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(NmdError::InvalidOption {
                    name,
                    reason: format!("must be finite and nonnegative, got {x}"),
                })
            }
        };
        match self {
            RegularizerCase::None | RegularizerCase::SparsityConstraint { .. } => Ok(()),
            RegularizerCase::Tikhonov { eta1, eta2 }
            | RegularizerCase::L1L1 { eta1, eta2 }
            | RegularizerCase::L1MinusFro { eta1, eta2 } => {
                nonneg("eta1", *eta1)?;
                nonneg("eta2", *eta2)
            }
            RegularizerCase::GraphTikhonov {
                mu0,
                eta1,
                eta2,
                laplacian,
            } => {
                nonneg("mu0", *mu0)?;
                nonneg("eta1", *eta1)?;
                nonneg("eta2", *eta2)?;
                if laplacian.dim() != m {
                    return Err(NmdError::invalid(format!(
                        "laplacian is {0}×{0} but U has {m} rows",
                        laplacian.dim()
                    )));
                }
                Ok(())
            }
        }
    }

    /// Gradient of any part of `H₁` treated as smooth (the graph term):
    /// `μ₀·L·U`.
    pub fn smooth_grad_u(&self, u: &Array2<f64>) -> Option<Array2<f64>> {
        match self {
            RegularizerCase::GraphTikhonov { mu0, laplacian, .. } => {
                Some(laplacian.matrix().dot(u) * *mu0)
            }
            _ => None,
        }
    }

    /// Upper bound on the curvature of the smooth part of `H₁`:
    /// `μ₀‖L‖_F` for the graph case, 0 otherwise.
    pub fn smooth_curvature_u(&self) -> f64 {
        match self {
            RegularizerCase::GraphTikhonov { mu0, laplacian, .. } => mu0 * laplacian.frobenius_norm(),
            _ => 0.0,
        }
    }
}

fn cubic_root(a: f64, c: f64) -> Result<f64> {
    cubic_positive_root(CubicCoefficients::new(a, c))
}

pub(crate) fn sparsify(x: &Array2<f64>, s: Option<usize>, scope: SparsityScope) -> Array2<f64> {
    match (s, scope) {
        (None, _) => x.clone(),
        (Some(s), SparsityScope::Global) => hard_threshold_matrix(x, s),
        (Some(s), SparsityScope::PerColumn) => hard_threshold_columns(x, s),
    }
}

fn neg(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| -v)
}

/// Table of kernel coefficients per configuration:
/// `(3, ‖W‖)` for most cases, `(3, ‖W‖ + μ₀‖L‖_F)` for the graph case and
/// `e = η₂λ` for the `ℓ1 − ℓ2²` case.
pub fn kernel_for(case: &RegularizerCase, w_norm: f64, lambda: f64) -> Result<KernelSpec> {
    if !(w_norm >= 0.0) || !w_norm.is_finite() {
        return Err(NmdError::InvalidOption {
            name: "w_norm",
            reason: format!("must be finite and nonnegative, got {w_norm}"),
        });
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(NmdError::InvalidOption {
            name: "lambda",
            reason: format!("must be positive, got {lambda}"),
        });
    }
    case.validate_params_only()?;
    let (c, e) = match case {
        RegularizerCase::GraphTikhonov { .. } => (w_norm + case.smooth_curvature_u(), 0.0),
        RegularizerCase::L1MinusFro { eta2, .. } => (w_norm, eta2 * lambda),
        _ => (w_norm, 0.0),
    };
    Ok(KernelSpec {
        a: QUARTIC_COEFF,
        c,
        e,
    })
}

impl RegularizerCase {
    fn validate_params_only(&self) -> Result<()> {
        match self {
            RegularizerCase::GraphTikhonov { laplacian, .. } => self.validate(laplacian.dim()),
            _ => self.validate(0),
        }
    }
}

/// Closed-form minimizer of the `(U, V)` subproblem with the decoupled scale
/// rule. See [`update_uv_with`].
pub fn update_uv(
    case: &RegularizerCase,
    p: &Array2<f64>,
    q: &Array2<f64>,
    w_norm: f64,
    lambda: f64,
) -> Result<FactorPair> {
    update_uv_with(case, p, q, w_norm, lambda, ScaleRule::Decoupled)
}

/// Closed-form minimizer of
/// `λH₁(U) + λH₂(V) + ⟨P,U⟩ + ⟨Q,V⟩ + ψ(U,V)` with `ψ` from [`kernel_for`].
///
/// `rule` only matters for the Tikhonov and graph cases with `η₁ ≠ η₂`.
pub fn update_uv_with(
    case: &RegularizerCase,
    p: &Array2<f64>,
    q: &Array2<f64>,
    w_norm: f64,
    lambda: f64,
    rule: ScaleRule,
) -> Result<FactorPair> {
    if p.ncols() != q.nrows() {
        return Err(NmdError::invalid(format!(
            "P is {:?} but Q is {:?}",
            p.dim(),
            q.dim()
        )));
    }
    let spec = kernel_for(case, w_norm, lambda)?;
    if !(spec.c > 0.0) {
        return Err(NmdError::invalid(
            "kernel linear coefficient is zero; ‖W‖_F must be positive",
        ));
    }
    let a = spec.a;
    let pair = match case {
        RegularizerCase::None => {
            let t = cubic_root(a * (sq_norm(p) + sq_norm(q)), spec.c)?;
            FactorPair::from_parts(p * -t, q * -t)
        }
        RegularizerCase::Tikhonov { eta1, eta2 } | RegularizerCase::GraphTikhonov { eta1, eta2, .. } => {
            let (p2, q2) = (sq_norm(p), sq_norm(q));
            let c1 = spec.c + lambda * eta1;
            let c2 = spec.c + lambda * eta2;
            let (t1, t2) = match rule {
                ScaleRule::Decoupled => (cubic_root(a * (p2 + q2), c1)?, cubic_root(a * (p2 + q2), c2)?),
                ScaleRule::Coupled => coupled_scale_pair(p2, q2, c1, c2, a)?,
            };
            FactorPair::from_parts(p * -t1, q * -t2)
        }
        RegularizerCase::L1L1 { eta1, eta2 } => {
            let su = soft_threshold(&neg(p), eta1 * lambda)?;
            let sv = soft_threshold(&neg(q), eta2 * lambda)?;
            let t = cubic_root(a * (sq_norm(&su) + sq_norm(&sv)), spec.c)?;
            FactorPair::from_parts(su * t, sv * t)
        }
        RegularizerCase::L1MinusFro { eta1, .. } => {
            // the −(λη₂/2)‖U‖² of λH₁ cancels the (e/2)‖U‖² kernel term
            let su = soft_threshold(&neg(p), eta1 * lambda)?;
            let t = cubic_root(a * (sq_norm(&su) + sq_norm(q)), spec.c)?;
            FactorPair::from_parts(su * t, q * -t)
        }
        RegularizerCase::SparsityConstraint { s1, s2, scope } => {
            let hu = sparsify(&neg(p), *s1, *scope);
            let hv = sparsify(&neg(q), *s2, *scope);
            let t = cubic_root(a * (sq_norm(&hu) + sq_norm(&hv)), spec.c)?;
            FactorPair::from_parts(hu * t, hv * t)
        }
    };
    Ok(pair)
}

fn l1(x: &Array2<f64>) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

fn l0_ok(x: &Array2<f64>, s: Option<usize>, scope: SparsityScope) -> bool {
    let Some(s) = s else { return true };
    match scope {
        SparsityScope::Global => x.iter().filter(|&&v| v != 0.0).count() <= s,
        SparsityScope::PerColumn => x
            .columns()
            .into_iter()
            .all(|c| c.iter().filter(|&&v| v != 0.0).count() <= s),
    }
}

/// The part of `H₁ + H₂` kept inside the proximal subproblem: everything
/// except the graph term, which is linearized into `P`.
pub fn prox_value(case: &RegularizerCase, pair: &FactorPair) -> f64 {
    let (u, v) = (pair.u(), pair.v());
    match case {
        RegularizerCase::None => 0.0,
        RegularizerCase::Tikhonov { eta1, eta2 } | RegularizerCase::GraphTikhonov { eta1, eta2, .. } => {
            0.5 * eta1 * sq_norm(u) + 0.5 * eta2 * sq_norm(v)
        }
        RegularizerCase::L1L1 { eta1, eta2 } => eta1 * l1(u) + eta2 * l1(v),
        RegularizerCase::L1MinusFro { eta1, eta2 } => eta1 * l1(u) - 0.5 * eta2 * sq_norm(u),
        RegularizerCase::SparsityConstraint { s1, s2, scope } => {
            if l0_ok(u, *s1, *scope) && l0_ok(v, *s2, *scope) {
                0.0
            } else {
                f64::INFINITY
            }
        }
    }
}

/// `H₁(U) + H₂(V)`; violated indicator constraints give `f64::INFINITY`.
pub fn reg_value(case: &RegularizerCase, pair: &FactorPair) -> f64 {
    let mut value = prox_value(case, pair);
    if let RegularizerCase::GraphTikhonov { mu0, laplacian, .. } = case {
        value += 0.5 * mu0 * laplacian.quadratic_form(pair.u());
    }
    value
}

/// Value of the `(U, V)` subproblem
/// `λH₁(U) + λH₂(V) + ⟨P,U⟩ + ⟨Q,V⟩ + ψ(U,V)` at `pair`.
pub fn subproblem_value(
    case: &RegularizerCase,
    p: &Array2<f64>,
    q: &Array2<f64>,
    spec: &KernelSpec,
    lambda: f64,
    pair: &FactorPair,
) -> f64 {
    lambda * prox_value(case, pair) + inner(p, pair.u()) + inner(q, pair.v()) + psi_value(pair, spec)
}

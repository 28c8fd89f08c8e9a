//! ReLU-based nonlinear matrix decomposition.
//!
//! Given a nonnegative, typically sparse matrix `M`, find factors `U` (m×r)
//! and `V` (r×n) such that `M ≈ max(0, UV)`. The problem is posed with a
//! slack matrix `W` constrained by `max(0, W) = M`:
//!
//! ```text
//! min  ½‖W − UV‖²_F + H₁(U) + H₂(V)   s.t.  max(0, W) = M
//! ```
//!
//! and solved by alternating an exact `W` step with a Bregman proximal step
//! that updates `U` and `V` jointly in closed form. The Bregman kernel
//! `ψ = 3ψ₁ + ‖W‖_F ψ₂` makes the smooth term 1-smooth adaptable, so no
//! Lipschitz estimate is needed.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`matmodel`] | observed matrix, slack update, gradients, objective, relative error |
//! | [`kernels`] | kernel `ψ`, its gradient, Bregman distance, L-smad diagnostic |
//! | [`proxops`] | soft/hard thresholding, the cubic scale equation |
//! | [`regularizers`] | the six `H₁ + H₂` configurations and their closed-form updates |
//! | [`solvers`] | NMD-AAPB / NMD-APB, PPALM / iPPALM, convergence monitors |
//! | [`tasks`] | graph-regularized clustering and sparse basis compression |
//! | [`io`] | MatrixMarket and CSV loaders, synthetic generators, trace files |
//! | [`cli`] | the `relu-nmd` command-line front end |

pub mod cli;
pub mod error;
pub mod io;
pub mod kernels;
pub mod matmodel;
pub mod proxops;
pub mod regularizers;
pub mod solvers;
pub mod tasks;

mod linalg;

pub use error::{NmdError, Result};
pub use kernels::KernelSpec;
pub use matmodel::{FactorPair, ObservedMatrix, SlackMatrix};
pub use regularizers::{RegularizerCase, SparsityScope};
pub use solvers::{SolveOptions, SolveOutput, Solver, TraceRecord};

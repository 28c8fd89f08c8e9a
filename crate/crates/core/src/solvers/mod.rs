//! Iterative solvers for the ReLU decomposition and their diagnostics.
//!
//! * [`nmd_aapb`]: alternating partial Bregman method with extrapolation
//!   (`beta = 0` gives the plain method).
//! * [`ippalm`]: partial PALM baseline with separate Euclidean
//!   proximal-gradient steps on `U` then `V` (`beta = 0` gives PPALM).
//! * [`monitors`]: extrapolation safeguard, rate and Lyapunov monitors.

mod aapb;
pub mod monitors;
mod ppalm;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{NmdError, Result};
use crate::matmodel::{FactorPair, ObservedMatrix, SlackMatrix};
use crate::regularizers::{RegularizerCase, ScaleRule};

pub use aapb::{compute_pq, extrapolate, nmd_aapb, nmd_aapb_observed};
pub use monitors::{assumption32_check, rate_monitor, rate_profile, DELTA, EPSILON};
pub use ppalm::{ippalm, ippalm_observed};

/// Floor for the iPPALM Lipschitz estimates.
pub const STEP_FLOOR: f64 = 1e-8;

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub rank: usize,
    /// Bregman step size, `0 < lambda <= 1`.
    pub lambda: f64,
    /// Extrapolation weight, `0 <= beta < 1`.
    pub beta: f64,
    pub max_iter: usize,
    /// Wall-clock budget in seconds.
    pub max_time: f64,
    /// Stop once the relative error is at most this value.
    pub tol: f64,
    pub seed: u64,
    /// Fall back to `beta = 0` whenever the extrapolated point violates the
    /// Bregman inequality with `δ − ε`.
    pub assumption_check: bool,
    pub scale_rule: ScaleRule,
    /// Optional decreasing step schedule: `λ_k = min(schedule[k], λ_{k−1}, 1)`,
    /// the last entry repeating. Empty means a constant `lambda`.
    pub step_schedule: Vec<f64>,
    /// Starting point; drawn from `seed` when absent.
    pub initial: Option<FactorPair>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            rank: 1,
            lambda: 1.0,
            beta: 0.6,
            max_iter: 1000,
            max_time: f64::INFINITY,
            tol: 1e-4,
            seed: 0,
            assumption_check: false,
            scale_rule: ScaleRule::Decoupled,
            step_schedule: Vec::new(),
            initial: None,
        }
    }
}

impl SolveOptions {
    pub fn with_rank(rank: usize) -> Self {
        SolveOptions {
            rank,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(NmdError::InvalidOption { name, reason });
        if self.rank == 0 {
            return bad("rank", "must be at least 1".into());
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("lambda", format!("must lie in (0, 1], got {}", self.lambda));
        }
        if !(self.beta >= 0.0 && self.beta < 1.0) {
            return bad("beta", format!("must lie in [0, 1), got {}", self.beta));
        }
        if !(self.max_time > 0.0) {
            return bad("max_time", format!("must be positive, got {}", self.max_time));
        }
        if !(self.tol >= 0.0) {
            return bad("tol", format!("must be nonnegative, got {}", self.tol));
        }
        if self.step_schedule.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return bad("step_schedule", "entries must be positive and finite".into());
        }
        Ok(())
    }

    /// Step size for iteration `k` given the previous one.
    pub(crate) fn step_at(&self, k: usize, prev: f64) -> f64 {
        match self.step_schedule.get(k).or(self.step_schedule.last()) {
            Some(&s) => s.min(prev).min(1.0),
            None => self.lambda,
        }
    }
}

/// One row of a solver trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// 1-based iteration count.
    pub iter: usize,
    /// Seconds since the solver started.
    pub wall_time: f64,
    /// `Φ(Y^k, W^k)` after the iteration.
    pub objective: f64,
    /// `‖M − max(0, U^kV^k)‖_F / ‖M‖_F`.
    pub rel_error: f64,
    /// Step length `D(Y^{k−1}, Y^k)`, in the kernel's Bregman distance for
    /// the Bregman methods and in `½‖·‖²` for iPPALM.
    pub bregman_step: f64,
    /// `λ(Φ^k − Φ_min) + δ·D(Y^{k−1}, Y^k)` with `Φ_min` the smallest
    /// objective seen over the run.
    pub lyapunov: f64,
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIter,
    MaxTime,
    Tolerance,
}

/// Result of a solver run.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub pair: FactorPair,
    /// Slack matrix from the last iteration.
    pub slack: SlackMatrix,
    pub trace: Vec<TraceRecord>,
    pub stop: StopReason,
    /// Smallest objective over the trace; stands in for the unknown
    /// infimum in the Lyapunov column.
    pub phi_min: f64,
    /// Iterations where extrapolation was rejected by the safeguard.
    pub beta_fallbacks: usize,
}

impl SolveOutput {
    pub fn final_rel_error(&self) -> Option<f64> {
        self.trace.last().map(|r| r.rel_error)
    }
}

/// Solver family used by the bench harness and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    Aapb,
    Apb,
    Ppalm,
    Ippalm,
}

impl Solver {
    pub const ALL: [Solver; 4] = [Solver::Ppalm, Solver::Ippalm, Solver::Apb, Solver::Aapb];

    pub fn name(&self) -> &'static str {
        match self {
            Solver::Aapb => "aapb",
            Solver::Apb => "apb",
            Solver::Ppalm => "ppalm",
            Solver::Ippalm => "ippalm",
        }
    }

    /// Runs the solver. The plain variants force `beta = 0`.
    pub fn run(
        &self,
        obs: &ObservedMatrix,
        case: &RegularizerCase,
        opts: &SolveOptions,
    ) -> Result<SolveOutput> {
        let mut opts = opts.clone();
        match self {
            Solver::Apb | Solver::Ppalm => opts.beta = 0.0,
            Solver::Aapb | Solver::Ippalm => {}
        }
        match self {
            Solver::Aapb | Solver::Apb => nmd_aapb(obs, case, &opts),
            Solver::Ppalm | Solver::Ippalm => ippalm(obs, case, &opts),
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Solver {
    type Err = NmdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aapb" | "nmd-aapb" => Ok(Solver::Aapb),
            "apb" | "nmd-apb" => Ok(Solver::Apb),
            "ppalm" => Ok(Solver::Ppalm),
            "ippalm" => Ok(Solver::Ippalm),
            _ => Err(NmdError::InvalidOption {
                name: "solver",
                reason: format!("unknown solver `{s}` (expected aapb, apb, ppalm, ippalm)"),
            }),
        }
    }
}

/// Gaussian start scaled by `√(‖M‖_F / (r·√(mn)))`, or `opts.initial`.
pub fn initial_pair(obs: &ObservedMatrix, opts: &SolveOptions) -> Result<FactorPair> {
    let (m, n) = obs.shape();
    if let Some(init) = &opts.initial {
        let (im, ir, in_) = init.dims();
        if (im, in_) != (m, n) || ir != opts.rank {
            return Err(NmdError::invalid(format!(
                "initial factors are {im}×{ir}×{in_}, expected {m}×{}×{n}",
                opts.rank
            )));
        }
        return Ok(init.clone());
    }
    let r = opts.rank;
    let scale = (obs.frobenius_norm() / (r as f64 * ((m * n) as f64).sqrt())).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut draw = |rows, cols| {
        Array2::from_shape_simple_fn((rows, cols), || {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
    };
    let u = draw(m, r);
    let v = draw(r, n);
    FactorPair::new(u, v)
}

/// Shared preconditions; returns `(m, n)`.
pub(crate) fn check_problem(
    obs: &ObservedMatrix,
    case: &RegularizerCase,
    opts: &SolveOptions,
) -> Result<()> {
    opts.validate()?;
    let (m, n) = obs.shape();
    if m == 0 || n == 0 {
        return Err(NmdError::invalid("observed matrix is empty"));
    }
    if obs.frobenius_norm() == 0.0 {
        return Err(NmdError::invalid("observed matrix is identically zero"));
    }
    case.validate(m)
}

/// Fills the Lyapunov column with `Φ_min` = the smallest objective seen.
pub(crate) fn finish_trace(trace: &mut [TraceRecord], lambdas: &[f64]) -> f64 {
    let phi_min = trace
        .iter()
        .map(|r| r.objective)
        .fold(f64::INFINITY, f64::min);
    for (rec, &lam) in trace.iter_mut().zip(lambdas) {
        rec.lyapunov = lam * (rec.objective - phi_min) + DELTA * rec.bregman_step;
    }
    phi_min
}

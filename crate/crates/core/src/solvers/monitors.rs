//! Extrapolation safeguard and convergence monitors.

use crate::error::{NmdError, Result};
use crate::kernels::{bregman_distance, KernelSpec};
use crate::matmodel::FactorPair;

use super::TraceRecord;

/// Lyapunov weight on the last step.
pub const DELTA: f64 = 0.9;
/// Margin below `DELTA` used by the safeguard; `δ − ε = 0.8`.
pub const EPSILON: f64 = 0.1;

/// `D(Y^k, Ȳ^k) ≤ (δ − ε)/(1 + λ) · D(Y^{k−1}, Y^k)`.
///
/// Shapes are assumed to agree; mismatched pairs fail the check.
pub fn assumption32_check(
    y_bar: &FactorPair,
    y_curr: &FactorPair,
    y_prev: &FactorPair,
    spec: &KernelSpec,
    lambda: f64,
    delta_minus_eps: f64,
) -> bool {
    let (Ok(lhs), Ok(rhs)) = (
        bregman_distance(y_curr, y_bar, spec),
        bregman_distance(y_prev, y_curr, spec),
    ) else {
        return false;
    };
    lhs <= delta_minus_eps / (1.0 + lambda) * rhs
}

/// `K · min_{k≤K} D(Y^{k−1}, Y^k)` at `K = trace.len()`.
pub fn rate_monitor(trace: &[TraceRecord]) -> Result<f64> {
    rate_profile(trace)
        .last()
        .copied()
        .ok_or_else(|| NmdError::invalid("rate monitor needs a nonempty trace"))
}

/// Running minima `min_{k≤K} D(Y^{k−1}, Y^k)` for every prefix.
pub fn running_min_steps(trace: &[TraceRecord]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    trace
        .iter()
        .map(|r| {
            best = best.min(r.bregman_step);
            best
        })
        .collect()
}

/// `K · min_{k≤K} D(Y^{k−1}, Y^k)` for `K = 1..=trace.len()`.
pub fn rate_profile(trace: &[TraceRecord]) -> Vec<f64> {
    running_min_steps(trace)
        .into_iter()
        .enumerate()
        .map(|(i, m)| (i + 1) as f64 * m)
        .collect()
}

use std::time::Instant;

use ndarray::Array2;

use super::{check_problem, finish_trace, initial_pair, SolveOptions, SolveOutput, StopReason, TraceRecord, STEP_FLOOR};
use crate::error::{NmdError, Result};
use crate::linalg::{spectral_norm_psd, sq_norm};
use crate::matmodel::{objective, relative_error, residual, update_slack, FactorPair, ObservedMatrix};
use crate::proxops::soft_threshold;
use crate::regularizers::{sparsify, RegularizerCase};

fn prox_u(case: &RegularizerCase, x: Array2<f64>, step: f64) -> Result<Array2<f64>> {
    Ok(match case {
        RegularizerCase::None => x,
        RegularizerCase::Tikhonov { eta1, .. } | RegularizerCase::GraphTikhonov { eta1, .. } => {
            x / (1.0 + step * eta1)
        }
        RegularizerCase::L1L1 { eta1, .. } => soft_threshold(&x, step * eta1)?,
        RegularizerCase::L1MinusFro { eta1, eta2 } => soft_threshold(&x, step * eta1)? / (1.0 - step * eta2),
        RegularizerCase::SparsityConstraint { s1, scope, .. } => sparsify(&x, *s1, *scope),
    })
}

fn prox_v(case: &RegularizerCase, x: Array2<f64>, step: f64) -> Result<Array2<f64>> {
    Ok(match case {
        RegularizerCase::None | RegularizerCase::L1MinusFro { .. } => x,
        RegularizerCase::Tikhonov { eta2, .. } | RegularizerCase::GraphTikhonov { eta2, .. } => {
            x / (1.0 + step * eta2)
        }
        RegularizerCase::L1L1 { eta2, .. } => soft_threshold(&x, step * eta2)?,
        RegularizerCase::SparsityConstraint { s2, scope, .. } => sparsify(&x, *s2, *scope),
    })
}

/// Upper bound on `λ₁` so that the `ℓ1 − ℓ2²` prox stays strongly convex.
fn max_u_step(case: &RegularizerCase) -> f64 {
    match case {
        RegularizerCase::L1MinusFro { eta2, .. } if *eta2 > 0.0 => 0.5 / eta2,
        _ => f64::INFINITY,
    }
}

/// iPPALM. With `opts.beta = 0` this is PPALM.
///
/// Steps are `λ₁ = 1/max(‖VVᵀ‖₂ + κ, ε₀)` and `λ₂ = 1/max(‖UᵀU‖₂, ε₀)`
/// where `κ` is the curvature of the graph term (0 for other cases).
/// `opts.lambda` only weights the Lyapunov column.
pub fn ippalm(obs: &ObservedMatrix, case: &RegularizerCase, opts: &SolveOptions) -> Result<SolveOutput> {
    ippalm_observed(obs, case, opts, |_, _| {})
}

/// [`ippalm`] calling `observer(k, &Y^k)` after every iteration.
pub fn ippalm_observed<F>(
    obs: &ObservedMatrix,
    case: &RegularizerCase,
    opts: &SolveOptions,
    mut observer: F,
) -> Result<SolveOutput>
where
    F: FnMut(usize, &FactorPair),
{
    check_problem(obs, case, opts)?;
    let start = Instant::now();
    let init = initial_pair(obs, opts)?;
    let (mut u, mut v) = init.into_parts();
    let (mut u_prev, mut v_prev) = (u.clone(), v.clone());
    let mut curr = FactorPair::from_parts(u.clone(), v.clone());
    let mut slack = update_slack(&curr.product(), obs)?;
    let mut trace = Vec::with_capacity(opts.max_iter.min(100_000));
    let mut stop = StopReason::MaxIter;
    let beta = opts.beta;
    let kappa = case.smooth_curvature_u();

    for k in 0..opts.max_iter {
        slack = update_slack(&u.dot(&v), obs)?;

        let u_bar = &u + &((&u - &u_prev) * beta);
        let step1 = (1.0 / (spectral_norm_psd(&v.dot(&v.t())) + kappa).max(STEP_FLOOR)).min(max_u_step(case));
        let bar = FactorPair::from_parts(u_bar, v.clone());
        let mut gu = residual(&bar, &slack).dot(&v.t());
        if let Some(g) = case.smooth_grad_u(bar.u()) {
            gu += &g;
        }
        let (u_bar, _) = bar.into_parts();
        let u_next = prox_u(case, u_bar - gu * step1, step1)?;

        let v_bar = &v + &((&v - &v_prev) * beta);
        let step2 = 1.0 / spectral_norm_psd(&u_next.t().dot(&u_next)).max(STEP_FLOOR);
        let bar = FactorPair::from_parts(u_next, v_bar);
        let gv = bar.u().t().dot(&residual(&bar, &slack));
        let (u_next, v_bar) = bar.into_parts();
        let v_next = prox_v(case, v_bar - gv * step2, step2)?;

        let step = 0.5 * (sq_norm(&(&u_next - &u)) + sq_norm(&(&v_next - &v)));
        u_prev = std::mem::replace(&mut u, u_next);
        v_prev = std::mem::replace(&mut v, v_next);
        curr = FactorPair::from_parts(u.clone(), v.clone());
        if !curr.is_finite() {
            return Err(NmdError::Divergence { iter: k + 1 });
        }
        let phi = objective(&curr, &slack, case);
        let rel = relative_error(obs, &curr)?;
        observer(k + 1, &curr);
        trace.push(TraceRecord {
            iter: k + 1,
            wall_time: start.elapsed().as_secs_f64(),
            objective: phi,
            rel_error: rel,
            bregman_step: step,
            lyapunov: 0.0,
        });

        if rel <= opts.tol {
            stop = StopReason::Tolerance;
            break;
        }
        if start.elapsed().as_secs_f64() >= opts.max_time {
            stop = StopReason::MaxTime;
            break;
        }
    }

    let lambdas = vec![opts.lambda; trace.len()];
    let phi_min = finish_trace(&mut trace, &lambdas);
    Ok(SolveOutput {
        pair: curr,
        slack,
        trace,
        stop,
        phi_min,
        beta_fallbacks: 0,
    })
}

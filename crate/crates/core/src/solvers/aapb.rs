use std::time::Instant;

use ndarray::Array2;

use super::{check_problem, finish_trace, initial_pair, monitors, SolveOptions, SolveOutput, StopReason, TraceRecord};
use crate::error::{NmdError, Result};
use crate::kernels::{bregman_distance, psi_grad, KernelSpec};
use crate::matmodel::{grad_f, objective, relative_error, update_slack, FactorPair, ObservedMatrix, SlackMatrix};
use crate::regularizers::{kernel_for, update_uv_with, RegularizerCase};

/// Linear extrapolation `Ȳ = Y + β(Y − Y_prev)` on both factors.
///
/// # Panics
/// If the two pairs have different shapes.
pub fn extrapolate(curr: &FactorPair, prev: &FactorPair, beta: f64) -> FactorPair {
    if beta == 0.0 {
        return curr.clone();
    }
    let u = curr.u() + &((curr.u() - prev.u()) * beta);
    let v = curr.v() + &((curr.v() - prev.v()) * beta);
    FactorPair::from_parts(u, v)
}

/// `P = λ∇_U F(Ȳ) − ∇_Uψ(Ȳ)` and `Q = λ∇_V F(Ȳ) − ∇_Vψ(Ȳ)`. In the graph
/// case `∇_U F` includes `μ₀L̄Ū`.
pub fn compute_pq(
    bar_pair: &FactorPair,
    w: &SlackMatrix,
    lambda: f64,
    spec: &KernelSpec,
    case: &RegularizerCase,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (mut gu, gv) = grad_f(bar_pair, w)?;
    if let Some(g) = case.smooth_grad_u(bar_pair.u()) {
        if g.dim() != gu.dim() {
            return Err(NmdError::ShapeMismatch {
                context: "compute_pq",
                expected: gu.dim(),
                actual: g.dim(),
            });
        }
        gu += &g;
    }
    let (pu, pv) = psi_grad(bar_pair, spec);
    Ok((gu * lambda - pu, gv * lambda - pv))
}

/// NMD-AAPB. With `opts.beta = 0` this is NMD-APB.
pub fn nmd_aapb(obs: &ObservedMatrix, case: &RegularizerCase, opts: &SolveOptions) -> Result<SolveOutput> {
    nmd_aapb_observed(obs, case, opts, |_, _| {})
}

/// [`nmd_aapb`] calling `observer(k, &Y^k)` after every iteration.
pub fn nmd_aapb_observed<F>(
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
    let mut curr = initial_pair(obs, opts)?;
    let mut prev = curr.clone();
    let mut slack = update_slack(&curr.product(), obs)?;
    let mut trace = Vec::with_capacity(opts.max_iter.min(100_000));
    let mut lambdas = Vec::with_capacity(trace.capacity());
    let mut lambda = opts.lambda;
    let mut fallbacks = 0;
    let mut stop = StopReason::MaxIter;

    for k in 0..opts.max_iter {
        lambda = opts.step_at(k, lambda);
        slack = update_slack(&curr.product(), obs)?;
        let spec = kernel_for(case, slack.frobenius_norm(), lambda)?;

        let mut bar = extrapolate(&curr, &prev, opts.beta);
        if opts.assumption_check
            && opts.beta > 0.0
            && !monitors::assumption32_check(&bar, &curr, &prev, &spec, lambda, monitors::DELTA - monitors::EPSILON)
        {
            bar = curr.clone();
            fallbacks += 1;
        }

        let (p, q) = compute_pq(&bar, &slack, lambda, &spec, case)?;
        let next = update_uv_with(case, &p, &q, slack.frobenius_norm(), lambda, opts.scale_rule)?;
        if !next.is_finite() {
            return Err(NmdError::Divergence { iter: k + 1 });
        }

        let step = bregman_distance(&curr, &next, &spec)?;
        let phi = objective(&next, &slack, case);
        let rel = relative_error(obs, &next)?;
        prev = std::mem::replace(&mut curr, next);
        observer(k + 1, &curr);
        trace.push(TraceRecord {
            iter: k + 1,
            wall_time: start.elapsed().as_secs_f64(),
            objective: phi,
            rel_error: rel,
            bregman_step: step,
            lyapunov: 0.0,
        });
        lambdas.push(lambda);

        if rel <= opts.tol {
            stop = StopReason::Tolerance;
            break;
        }
        if start.elapsed().as_secs_f64() >= opts.max_time {
            stop = StopReason::MaxTime;
            break;
        }
    }

    let phi_min = finish_trace(&mut trace, &lambdas);
    Ok(SolveOutput {
        pair: curr,
        slack,
        trace,
        stop,
        phi_min,
        beta_fallbacks: fallbacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::synth_relu;
    use crate::linalg::sq_norm;
    use crate::matmodel::build_observed;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn extrapolation_examples() {
        let c = FactorPair::new(array![[2.0]], array![[1.0]]).unwrap();
        let p = FactorPair::new(array![[1.0]], array![[1.0]]).unwrap();
        let e = extrapolate(&c, &p, 0.6);
        assert!((e.u()[[0, 0]] - 2.6).abs() < 1e-15);
        assert_eq!(e.v()[[0, 0]], 1.0);
        assert_eq!(extrapolate(&c, &p, 0.0).u(), c.u());
        assert_eq!(extrapolate(&c, &c, 0.9).u(), c.u());
    }

    #[test]
    fn pq_examples() {
        let spec = KernelSpec::new(3.0, 2.0, 0.0).unwrap();
        let w = SlackMatrix::from_array(array![[2.0]]);
        let one = FactorPair::new(array![[1.0]], array![[1.0]]).unwrap();
        let (p, q) = compute_pq(&one, &w, 1.0, &spec, &RegularizerCase::None).unwrap();
        assert_eq!(p, array![[-9.0]]);
        assert_eq!(q, array![[-9.0]]);

        let zero = FactorPair::zeros(2, 1, 3);
        let w = SlackMatrix::from_array(Array2::from_elem((2, 3), -1.0));
        let (p, q) = compute_pq(&zero, &w, 1.0, &spec, &RegularizerCase::None).unwrap();
        assert!(p.iter().chain(q.iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn pq_recomposes_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rnd = |r, c| Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0));
        let pair = FactorPair::new(rnd(5, 2), rnd(2, 4)).unwrap();
        let w = SlackMatrix::from_array(rnd(5, 4));
        let spec = KernelSpec::new(3.0, 1.7, 0.2).unwrap();
        let lambda = 0.7;
        let (p, q) = compute_pq(&pair, &w, lambda, &spec, &RegularizerCase::None).unwrap();
        let (pu, pv) = psi_grad(&pair, &spec);
        let (gu, gv) = grad_f(&pair, &w).unwrap();
        assert!(sq_norm(&(&p + &pu - &gu * lambda)) < 1e-26);
        assert!(sq_norm(&(&q + &pv - &gv * lambda)) < 1e-26);
    }

    #[test]
    fn max_iter_zero_returns_initialization() {
        let obs = build_observed(array![[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let opts = SolveOptions { rank: 1, max_iter: 0, seed: 5, ..Default::default() };
        let out = nmd_aapb(&obs, &RegularizerCase::None, &opts).unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(out.pair.u(), super::super::initial_pair(&obs, &opts).unwrap().u());
    }

    #[test]
    fn plain_method_descends_on_small_instance() {
        let (m, _, _) = synth_relu(30, 20, 3, 1).unwrap();
        let obs = build_observed(m).unwrap();
        let opts = SolveOptions { rank: 4, beta: 0.0, max_iter: 200, tol: 0.0, ..Default::default() };
        for case in [
            RegularizerCase::None,
            RegularizerCase::L1L1 { eta1: 0.01, eta2: 0.015 },
            RegularizerCase::Tikhonov { eta1: 0.1, eta2: 0.1 },
            RegularizerCase::L1MinusFro { eta1: 0.05, eta2: 0.01 },
        ] {
            let out = nmd_aapb(&obs, &case, &opts).unwrap();
            for pair in out.trace.windows(2) {
                assert!(
                    pair[1].objective <= pair[0].objective + 1e-12 * pair[0].objective.max(1.0),
                    "{} rose at {}",
                    case.name(),
                    pair[1].iter
                );
            }
            for r in &out.trace {
                assert!(r.bregman_step >= 0.0);
            }
        }
    }

    #[test]
    fn slack_stays_feasible() {
        let (m, _, _) = synth_relu(15, 12, 2, 4).unwrap();
        let obs = build_observed(m).unwrap();
        let opts = SolveOptions { rank: 2, max_iter: 25, tol: 0.0, ..Default::default() };
        let mut feasible = true;
        let out = nmd_aapb_observed(&obs, &RegularizerCase::None, &opts, |_, pair| {
            feasible &= update_slack(&pair.product(), &obs).unwrap().is_feasible(&obs);
        })
        .unwrap();
        assert!(feasible && out.slack.is_feasible(&obs));
    }
}

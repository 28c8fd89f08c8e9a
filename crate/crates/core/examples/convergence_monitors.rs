//! Rate monitor `K·min D` and the extrapolation safeguard on one run.

use relu_nmd::io::synth_relu;
use relu_nmd::matmodel::build_observed;
use relu_nmd::solvers::{nmd_aapb, rate_profile};
use relu_nmd::{RegularizerCase, SolveOptions};

fn main() -> relu_nmd::Result<()> {
    let (m, _, _) = synth_relu(200, 100, 5, 1)?;
    let obs = build_observed(m)?;
    let case = RegularizerCase::None;

    for (beta, check) in [(0.0, false), (0.6, false), (0.9, true)] {
        let opts = SolveOptions {
            rank: 6,
            beta,
            assumption_check: check,
            max_iter: 500,
            tol: 0.0,
            ..Default::default()
        };
        let out = nmd_aapb(&obs, &case, &opts)?;
        let profile = rate_profile(&out.trace);
        let at = |k: usize| profile[k - 1];
        println!(
            "beta {beta} (safeguard {check}, {} fallbacks): K*minD at K=10 {:.3e}, 100 {:.3e}, 500 {:.3e}; phi_min {:.6e}",
            out.beta_fallbacks,
            at(10),
            at(100),
            at(500),
            out.phi_min
        );
    }
    Ok(())
}

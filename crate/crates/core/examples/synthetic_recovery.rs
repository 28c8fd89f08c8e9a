//! Recover a planted ReLU low-rank structure with NMD-AAPB.
//!
//! ```text
//! cargo run --release --example synthetic_recovery
//! ```

use relu_nmd::io::synth_relu;
use relu_nmd::matmodel::build_observed;
use relu_nmd::{RegularizerCase, SolveOptions, Solver};

fn main() -> relu_nmd::Result<()> {
    let (m, _u_star, _v_star) = synth_relu(200, 100, 5, 1)?;
    let obs = build_observed(m)?;
    println!("M is {:?} with {} positive entries", obs.shape(), obs.nnz());

    let case = RegularizerCase::L1L1 { eta1: 0.01, eta2: 0.015 };
    let opts = SolveOptions {
        rank: 6,
        max_iter: 2000,
        tol: 1e-4,
        ..Default::default()
    };
    let out = Solver::Aapb.run(&obs, &case, &opts)?;
    for rec in out.trace.iter().step_by(250) {
        println!("iter {:5}  objective {:.6e}  rel_error {:.3e}", rec.iter, rec.objective, rec.rel_error);
    }
    println!(
        "stopped after {} iterations ({:?}), final rel_error {:.3e}",
        out.trace.len(),
        out.stop,
        out.final_rel_error().unwrap_or(f64::NAN)
    );
    Ok(())
}

//! All four solvers on one problem at an equal iteration budget.

use relu_nmd::cli::run_bench;
use relu_nmd::io::synth_relu;
use relu_nmd::matmodel::build_observed;
use relu_nmd::{RegularizerCase, SolveOptions, Solver};

fn main() -> relu_nmd::Result<()> {
    let iters: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let (m, _, _) = synth_relu(200, 100, 5, 1)?;
    let obs = build_observed(m)?;
    let case = RegularizerCase::L1L1 { eta1: 0.01, eta2: 0.015 };
    let opts = SolveOptions { rank: 6, max_iter: iters, tol: 0.0, ..Default::default() };

    let outputs = run_bench(&obs, &case, &opts, &Solver::ALL, 4)?;
    println!("{:<8} {:>12} {:>12} {:>10}", "solver", "final", "best", "seconds");
    for (solver, out) in Solver::ALL.iter().zip(&outputs) {
        let best = out.trace.iter().map(|r| r.rel_error).fold(f64::INFINITY, f64::min);
        let last = out.trace.last().expect("nonempty trace");
        println!("{:<8} {:>12.4e} {:>12.4e} {:>10.3}", solver, last.rel_error, best, last.wall_time);
    }
    Ok(())
}

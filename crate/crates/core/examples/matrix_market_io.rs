//! Write a synthetic matrix as MatrixMarket, read it back, factor it and
//! store the factors and the trace as CSV.

use relu_nmd::io::{load_matrix, read_trace, sha256_file, synth_relu, write_matrix, write_trace, TraceMeta};
use relu_nmd::matmodel::build_observed;
use relu_nmd::{RegularizerCase, SolveOptions, Solver};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("relu_nmd_io_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("M.mtx");

    let (m, _, _) = synth_relu(80, 60, 3, 2)?;
    write_matrix(&path, &m)?;
    let back = load_matrix(&path)?;
    assert_eq!(back, m);

    let obs = build_observed(back)?;
    let opts = SolveOptions { rank: 4, max_iter: 300, ..Default::default() };
    let out = Solver::Aapb.run(&obs, &RegularizerCase::None, &opts)?;
    write_matrix(dir.join("U.csv"), out.pair.u())?;
    write_matrix(dir.join("V.csv"), out.pair.v())?;

    let meta = TraceMeta::new("aapb", "none", opts.seed, opts.lambda, opts.beta, &sha256_file(&path)?);
    write_trace(dir.join("trace.csv"), &out.trace, &meta)?;
    let trace = read_trace(dir.join("trace.csv"))?;
    println!(
        "{} trace rows in {}, input sha256 {}",
        trace.records.len(),
        dir.display(),
        trace.meta.get("dataset_sha256").unwrap_or("?")
    );
    Ok(())
}

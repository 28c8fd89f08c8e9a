//! Compress a sparse nonnegative basis under a per-column budget on V and
//! refit the data with NNLS.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relu_nmd::tasks::compress_pipeline;
use relu_nmd::SolveOptions;

fn main() -> relu_nmd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let basis = Array2::from_shape_fn((200, 40), |_| {
        if rng.random::<f64>() < 0.2 { rng.random_range(0.0..1.0) } else { 0.0 }
    });
    let coeffs = Array2::from_shape_fn((40, 60), |_| rng.random_range(0.0..1.0));
    let data = basis.dot(&coeffs);

    let s2 = 40 * 10 / 12;
    for r_prime in [10, 25, 40] {
        let opts = SolveOptions { max_iter: 500, tol: 0.0, seed: 10, ..Default::default() };
        let res = compress_pipeline(&basis, r_prime, s2, &opts, Some(&data))?;
        println!(
            "r' = {r_prime:2}: tol_nmd {:.4}  tol_nmf {:.4}  max nnz per column {}",
            res.tol_nmd,
            res.tol_nmf.unwrap_or(f64::NAN),
            res.max_column_nnz
        );
    }
    Ok(())
}

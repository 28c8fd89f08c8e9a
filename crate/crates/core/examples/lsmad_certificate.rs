use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relu_nmd::kernels::{bregman_distance, lsmad_gap, KernelSpec};
use relu_nmd::{FactorPair, SlackMatrix};

/// Samples pairs at several scales and reports the worst L-smad margin of
/// the quartic kernel with `L = 1`. Negative means certified.
fn main() -> relu_nmd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (m, n, r) = (20, 15, 4);
    let w = Array2::from_shape_fn((m, n), |_| rng.random_range(-2.0..2.0));
    let w_norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let w = SlackMatrix::from_array(w);
    let spec = KernelSpec::new(3.0, w_norm, 0.0)?;

    for scale in [0.01, 0.1, 1.0, 10.0] {
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..250 {
            let mut pair = || {
                FactorPair::new(
                    Array2::from_shape_fn((m, r), |_| scale * rng.random_range(-1.0..1.0)),
                    Array2::from_shape_fn((r, n), |_| scale * rng.random_range(-1.0..1.0)),
                )
            };
            let (x, y) = (pair()?, pair()?);
            let d = bregman_distance(&x, &y, &spec)?;
            worst = worst.max(lsmad_gap(&x, &y, &w, &spec, 1.0)? / (1.0 + d));
        }
        println!("scale {scale:>5}: max gap/(1+D) = {worst:+.3e}");
    }
    Ok(())
}

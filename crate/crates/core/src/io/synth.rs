use ndarray::{concatenate, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{NmdError, Result};

/// Offset subtracted before the ReLU in [`synth_blobs`].
pub const BLOB_SHIFT: f64 = 0.5;

fn sparse_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() < 1.0 {
            0.0
        } else {
            z
        }
    })
}

/// `M = max(0, U*V*)` with Gaussian factors whose entries of magnitude
/// below 1 are zeroed. `U*` is drawn before `V*` from one ChaCha8 stream.
pub fn synth_relu(m: usize, n: usize, r_star: usize, seed: u64) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
    if m == 0 || n == 0 || r_star == 0 || r_star > m.min(n) {
        return Err(NmdError::invalid(format!(
            "synth_relu needs m, n >= 1 and 1 <= r* <= min(m, n), got {m}, {n}, {r_star}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = sparse_gaussian(&mut rng, m, r_star);
    let v = sparse_gaussian(&mut rng, r_star, n);
    let x = u.dot(&v).mapv(|x| x.max(0.0));
    Ok((x, u, v))
}

/// `k` Gaussian clusters in `dim` dimensions mapped to nonnegative sparse
/// features by `max(0, x − 0.5)`.
///
/// Samples are assigned round-robin to clusters. With `k <= dim` the
/// centers are `separation·e_j`; otherwise they are Gaussian directions
/// scaled by `separation`. Points are center plus unit Gaussian noise.
pub fn synth_blobs(m: usize, k: usize, dim: usize, separation: f64, seed: u64) -> Result<(Array2<f64>, Vec<usize>)> {
    if k == 0 || k > m || dim == 0 {
        return Err(NmdError::invalid(format!(
            "synth_blobs needs 1 <= k <= m and dim >= 1, got m={m}, k={k}, dim={dim}"
        )));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(NmdError::invalid("separation must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = if k <= dim {
        Array2::from_shape_fn((k, dim), |(j, d)| if j == d { separation } else { 0.0 })
    } else {
        Array2::from_shape_simple_fn((k, dim), || {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * separation
        })
    };
    let labels: Vec<usize> = (0..m).map(|i| i % k).collect();
    let mut x = Array2::zeros((m, dim));
    for (i, &l) in labels.iter().enumerate() {
        for d in 0..dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[[i, d]] = (centers[[l, d]] + z - BLOB_SHIFT).max(0.0);
        }
    }
    Ok((x, labels))
}

/// Appends `extra` columns of `Uniform[0, scale)` noise. One wide column
/// stretches every cluster along a shared axis, which misleads K-means
/// while local neighborhoods stay within a cluster.
pub fn inject_noise(x: &Array2<f64>, extra: usize, scale: f64, seed: u64) -> Result<Array2<f64>> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(NmdError::invalid("noise scale must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Array2::from_shape_simple_fn((x.nrows(), extra), || rng.random::<f64>() * scale);
    concatenate(Axis(1), &[x.view(), noise.view()]).map_err(|e| NmdError::invalid(e.to_string()))
}

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NmdError, Result};

pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_MAX_ITER: usize = 300;

/// Outcome of the best restart.
#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    /// Within-cluster sum of squares.
    pub wcss: f64,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: ArrayView1<'_, f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_seed(x: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let m = x.nrows();
    let mut centroids = Array2::zeros((k, x.ncols()));
    let first = rng.random_range(0..m);
    centroids.row_mut(0).assign(&x.row(first));
    let mut d2: Vec<f64> = x.rows().into_iter().map(|r| sq_dist(r, x.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = m - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.random_range(0..m)
        };
        centroids.row_mut(c).assign(&x.row(pick));
        for (i, row) in x.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(row, centroids.row(c)));
        }
    }
    centroids
}

fn lloyd(x: &Array2<f64>, mut centroids: Array2<f64>, max_iter: usize) -> KMeansResult {
    let (m, d) = x.dim();
    let k = centroids.nrows();
    let mut labels = vec![usize::MAX; m];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, row) in x.rows().into_iter().enumerate() {
            let (j, _) = nearest(row, &centroids);
            if labels[i] != j {
                labels[i] = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, row) in x.rows().into_iter().enumerate() {
            sums.row_mut(labels[i]).scaled_add(1.0, &row);
            counts[labels[i]] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids.row_mut(j).assign(&(&sums.row(j) / counts[j] as f64));
            } else {
                // move an empty centroid onto the point farthest from its own
                let far = (0..m)
                    .map(|i| (i, sq_dist(x.row(i), centroids.row(labels[i]))))
                    .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a })
                    .0;
                centroids.row_mut(j).assign(&x.row(far));
            }
        }
    }
    let mut wcss = 0.0;
    for (i, row) in x.rows().into_iter().enumerate() {
        let (j, dist) = nearest(row, &centroids);
        labels[i] = j;
        wcss += dist;
    }
    KMeansResult {
        labels,
        centroids,
        wcss,
    }
}

/// Lloyd's method with k-means++ seeding; the best of `restarts` runs by
/// within-cluster sum of squares. Restart `i` draws from stream `i` of a
/// generator seeded with `seed`.
pub fn kmeans_full(x: &Array2<f64>, k: usize, seed: u64, restarts: usize, max_iter: usize) -> Result<KMeansResult> {
    let m = x.nrows();
    if k == 0 || k > m {
        return Err(NmdError::InvalidOption {
            name: "k",
            reason: format!("need 1 <= k <= {m}, got {k}"),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(NmdError::invalid("k-means input has non-finite entries"));
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let res = lloyd(x, plus_plus_seed(x, k, &mut rng), max_iter);
        if best.as_ref().is_none_or(|b| res.wcss < b.wcss) {
            best = Some(res);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Labels from [`kmeans_full`] with the default iteration cap.
pub fn kmeans(x: &Array2<f64>, k: usize, seed: u64, restarts: usize) -> Result<Vec<usize>> {
    Ok(kmeans_full(x, k, seed, restarts, DEFAULT_MAX_ITER)?.labels)
}

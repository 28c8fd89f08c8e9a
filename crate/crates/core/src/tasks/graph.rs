use ndarray::Array2;

use crate::error::{NmdError, Result};

/// Symmetric binary `p`-nearest-neighbor adjacency over the rows of `x`
/// (Euclidean distance, OR symmetrization). Distance ties go to the lower
/// row index.
pub fn knn_adjacency(x: &Array2<f64>, p: usize) -> Result<Array2<f64>> {
    let m = x.nrows();
    if p == 0 || p >= m {
        return Err(NmdError::InvalidOption {
            name: "neighbors",
            reason: format!("need 1 <= p < {m}, got {p}"),
        });
    }
    let mut s = Array2::zeros((m, m));
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(m);
    for i in 0..m {
        dist.clear();
        let xi = x.row(i);
        for j in 0..m {
            if j != i {
                let d: f64 = xi.iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                dist.push((d, j));
            }
        }
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in &dist[..p] {
            s[[i, j]] = 1.0;
            s[[j, i]] = 1.0;
        }
    }
    Ok(s)
}

/// `L = D − S` for the adjacency of [`knn_adjacency`].
pub fn knn_graph_laplacian(x: &Array2<f64>, p: usize) -> Result<Array2<f64>> {
    let s = knn_adjacency(x, p)?;
    let mut l = -s;
    for i in 0..l.nrows() {
        let deg: f64 = -l.row(i).sum();
        l[[i, i]] = deg;
    }
    Ok(l)
}

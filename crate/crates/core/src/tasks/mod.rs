//! Application pipelines: graph-regularized clustering and sparse
//! compression of a nonnegative basis, with their supporting algorithms.

mod graph;
mod hungarian;
mod kmeans;
mod nnls;

use ndarray::Array2;

use crate::error::{NmdError, Result};
use crate::matmodel::{relative_error, FactorPair, ObservedMatrix};
use crate::regularizers::{GraphLaplacian, RegularizerCase, SparsityScope};
use crate::solvers::{nmd_aapb_observed, SolveOptions, SolveOutput};

pub use graph::{knn_adjacency, knn_graph_laplacian};
pub use hungarian::{clustering_accuracy, hungarian};
pub use kmeans::{kmeans, kmeans_full, KMeansResult, DEFAULT_MAX_ITER, DEFAULT_RESTARTS};
pub use nnls::{nnls, nnls_with, tol_nmf, NnlsOptions};

/// Parameters of the clustering pipeline beyond the solver options.
#[derive(Debug, Clone, Copy)]
pub struct ClusterConfig {
    pub mu0: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub neighbors: usize,
    pub kmeans_restarts: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            mu0: 100.0,
            eta1: 0.1,
            eta2: 0.1,
            neighbors: 5,
            kmeans_restarts: DEFAULT_RESTARTS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    pub accuracy_percent: f64,
    pub factor: FactorPair,
    pub solve: SolveOutput,
}

fn class_count(truth: &[usize]) -> usize {
    truth.iter().max().map_or(0, |&k| k + 1)
}

/// Builds the `p`-NN Laplacian over the rows of `M`, solves the
/// graph-regularized model, clusters the rows of `U` into as many groups as
/// `truth` has classes and scores the result.
pub fn cluster_pipeline(
    obs: &ObservedMatrix,
    truth: &[usize],
    r: usize,
    mu0: f64,
    eta1: f64,
    eta2: f64,
    opts: &SolveOptions,
) -> Result<ClusterResult> {
    let config = ClusterConfig {
        mu0,
        eta1,
        eta2,
        ..Default::default()
    };
    let opts = SolveOptions { rank: r, ..opts.clone() };
    cluster_pipeline_with(obs, truth, &config, &opts)
}

/// [`cluster_pipeline`] with every parameter explicit; the rank is
/// `opts.rank`.
pub fn cluster_pipeline_with(
    obs: &ObservedMatrix,
    truth: &[usize],
    config: &ClusterConfig,
    opts: &SolveOptions,
) -> Result<ClusterResult> {
    let m = obs.shape().0;
    if truth.len() != m {
        return Err(NmdError::invalid(format!("{} labels for {m} samples", truth.len())));
    }
    let k = class_count(truth);
    let laplacian = GraphLaplacian::new(knn_graph_laplacian(obs.data(), config.neighbors)?)?;
    let case = RegularizerCase::graph(config.mu0, config.eta1, config.eta2, laplacian);
    let solve = nmd_aapb_observed(obs, &case, opts, |_, _| {})?;
    let labels = kmeans(solve.pair.u(), k, opts.seed, config.kmeans_restarts)?;
    let accuracy_percent = clustering_accuracy(&labels, truth)?;
    Ok(ClusterResult {
        labels,
        accuracy_percent,
        factor: solve.pair.clone(),
        solve,
    })
}

/// Accuracy of K-means applied directly to the rows of `data`.
pub fn raw_kmeans_accuracy(data: &Array2<f64>, truth: &[usize], seed: u64, restarts: usize) -> Result<f64> {
    let labels = kmeans(data, class_count(truth), seed, restarts)?;
    clustering_accuracy(&labels, truth)
}

#[derive(Debug, Clone)]
pub struct CompressionResult {
    /// `U` is m×r′, `V` is r′×r.
    pub factor: FactorPair,
    pub tol_nmd: f64,
    /// Present when the original data was supplied.
    pub tol_nmf: Option<f64>,
    /// Largest per-column nonzero count of `V` seen at any iteration.
    pub max_column_nnz: usize,
    pub solve: SolveOutput,
}

/// Sparsity configuration used by [`compress_pipeline`]: `U` free, each
/// column of `V` limited to `s2` nonzeros.
pub fn compression_case(s2: usize) -> RegularizerCase {
    RegularizerCase::sparsity(None, Some(s2), SparsityScope::PerColumn)
}

/// Approximates a nonnegative basis `Ũ` (m×r) by `max(0, UV)` with `U`
/// m×r′ and per-column `‖V_{:,j}‖₀ ≤ s2`. The extrapolation weight comes
/// from `opts.beta`; the rank from `r_prime`.
///
/// `r_prime = r` is accepted so the pipeline can be checked for
/// near-lossless reconstruction.
pub fn compress_pipeline(
    u_tilde: &Array2<f64>,
    r_prime: usize,
    s2: usize,
    opts: &SolveOptions,
    original: Option<&Array2<f64>>,
) -> Result<CompressionResult> {
    let r = u_tilde.ncols();
    if r_prime == 0 || r_prime > r {
        return Err(NmdError::InvalidOption {
            name: "r_prime",
            reason: format!("need 1 <= r' <= {r}, got {r_prime}"),
        });
    }
    if let Some(m) = original {
        if m.nrows() != u_tilde.nrows() {
            return Err(NmdError::invalid(format!(
                "original data has {} rows but the basis has {}",
                m.nrows(),
                u_tilde.nrows()
            )));
        }
    }
    let obs = ObservedMatrix::new(u_tilde.clone())?;
    let opts = SolveOptions {
        rank: r_prime,
        ..opts.clone()
    };
    let mut max_column_nnz = 0;
    let solve = nmd_aapb_observed(&obs, &compression_case(s2), &opts, |_, pair| {
        for col in pair.v().columns() {
            max_column_nnz = max_column_nnz.max(col.iter().filter(|&&x| x != 0.0).count());
        }
    })?;
    let tol_nmd = relative_error(&obs, &solve.pair)?;
    let tol_nmf = original
        .map(|m| tol_nmf(m, solve.pair.u(), solve.pair.v()))
        .transpose()?;
    Ok(CompressionResult {
        factor: solve.pair.clone(),
        tol_nmd,
        tol_nmf,
        max_column_nnz,
        solve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::synth_blobs;
    use crate::matmodel::build_observed;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_class_is_trivially_perfect() {
        let (m, truth) = synth_blobs(20, 1, 4, 5.0, 3).unwrap();
        let obs = build_observed(m).unwrap();
        let opts = SolveOptions { max_iter: 10, ..Default::default() };
        let res = cluster_pipeline(&obs, &truth, 1, 100.0, 0.1, 0.1, &opts).unwrap();
        assert_eq!(res.accuracy_percent, 100.0);
        assert!(res.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn label_length_is_checked() {
        let (m, truth) = synth_blobs(20, 2, 4, 5.0, 3).unwrap();
        let obs = build_observed(m).unwrap();
        let r = cluster_pipeline(&obs, &truth[1..], 2, 100.0, 0.1, 0.1, &SolveOptions::default());
        assert!(r.is_err());
    }

    fn sparse_basis(m: usize, r: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((m, r), |_| {
            if rng.random::<f64>() < 0.3 {
                rng.random_range(0.1..1.0)
            } else {
                0.0
            }
        })
    }

    #[test]
    fn zero_budget_gives_zero_v() {
        let u = sparse_basis(30, 6, 1);
        let opts = SolveOptions { max_iter: 20, tol: 0.0, ..Default::default() };
        let res = compress_pipeline(&u, 4, 0, &opts, None).unwrap();
        assert!(res.factor.v().iter().all(|&x| x == 0.0));
        assert_eq!(res.tol_nmd, 1.0);
        assert_eq!(res.max_column_nnz, 0);
        assert!(res.tol_nmf.is_none());
    }

    #[test]
    fn rank_bounds_are_checked() {
        let u = sparse_basis(30, 6, 1);
        let opts = SolveOptions::default();
        assert!(compress_pipeline(&u, 7, 3, &opts, None).is_err());
        assert!(compress_pipeline(&u, 0, 3, &opts, None).is_err());
    }

    #[test]
    fn budget_holds_and_tol_nmf_is_reported() {
        let u = sparse_basis(40, 8, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = Array2::from_shape_fn((8, 12), |_| rng.random_range(0.0..1.0));
        let data = u.dot(&h);
        let opts = SolveOptions { max_iter: 50, tol: 0.0, ..Default::default() };
        let res = compress_pipeline(&u, 5, 3, &opts, Some(&data)).unwrap();
        assert!(res.max_column_nnz <= 3);
        let t = res.tol_nmf.unwrap();
        assert!((0.0..=1.0).contains(&t));
    }
}

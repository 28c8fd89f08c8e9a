//! Graph-regularized clustering against plain K-means on blobs with one
//! wide noise column.

use relu_nmd::io::{inject_noise, synth_blobs};
use relu_nmd::matmodel::build_observed;
use relu_nmd::tasks::{cluster_pipeline, raw_kmeans_accuracy};
use relu_nmd::SolveOptions;

fn main() -> relu_nmd::Result<()> {
    let (x, truth) = synth_blobs(300, 3, 3, 8.0, 3)?;
    let noisy = inject_noise(&x, 1, 30.0, 4)?;
    let opts = SolveOptions { max_iter: 1000, tol: 0.0, seed: 3, ..Default::default() };

    for (name, data) in [("clean", x), ("noisy", noisy)] {
        let raw = raw_kmeans_accuracy(&data, &truth, 3, 10)?;
        let res = cluster_pipeline(&build_observed(data)?, &truth, 3, 100.0, 0.1, 0.1, &opts)?;
        println!("{name}: k-means {raw:5.1}%  pipeline {:5.1}%", res.accuracy_percent);
    }
    Ok(())
}

use ndarray::Array2;

use crate::error::{NmdError, Result};

/// Minimum-cost perfect matching on a square cost matrix.
/// Returns `perm` with row `i` assigned to column `perm[i]`.
pub fn hungarian(cost: &Array2<f64>) -> Result<Vec<usize>> {
    let (n, k) = cost.dim();
    if n != k {
        return Err(NmdError::invalid(format!("cost matrix must be square, got {n}×{k}")));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(NmdError::invalid("cost matrix has non-finite entries"));
    }
    // potentials u (rows), v (columns); column 0 is a sentinel, arrays 1-based
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        if owner[j] > 0 {
            perm[owner[j] - 1] = j - 1;
        }
    }
    Ok(perm)
}

/// Percentage of points whose predicted label matches the truth under the
/// best one-to-one relabeling.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(NmdError::invalid(format!(
            "label vectors differ in length: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(NmdError::invalid("no labels to score"));
    }
    let k = pred.iter().chain(truth).max().map_or(0, |&x| x + 1);
    let mut confusion = Array2::<f64>::zeros((k, k));
    for (&p, &t) in pred.iter().zip(truth) {
        confusion[[p, t]] += 1.0;
    }
    let perm = hungarian(&confusion.mapv(|c| -c))?;
    let matched: f64 = perm.iter().enumerate().map(|(i, &j)| confusion[[i, j]]).sum();
    Ok(100.0 * matched / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn total(cost: &Array2<f64>, perm: &[usize]) -> f64 {
        perm.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = vec![];
        for p in permutations(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn small_examples() {
        let id = array![[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
        assert_eq!(hungarian(&id).unwrap(), vec![0, 1, 2]);
        let c = array![[2.0, 1.0], [1.0, 2.0]];
        let p = hungarian(&c).unwrap();
        assert_eq!(p, vec![1, 0]);
        assert_eq!(total(&c, &p), 2.0);
        assert!(hungarian(&Array2::zeros((2, 3))).is_err());
        assert!(hungarian(&Array2::zeros((0, 0))).unwrap().is_empty());
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let perms = permutations(6);
        assert_eq!(perms.len(), 720);
        for _ in 0..50 {
            let c = Array2::from_shape_fn((6, 6), |_| rng.random_range(-5.0..5.0));
            let best = perms.iter().map(|p| total(&c, p)).fold(f64::INFINITY, f64::min);
            let got = total(&c, &hungarian(&c).unwrap());
            assert!((got - best).abs() < 1e-9);
        }
    }

    #[test]
    fn accuracy_examples() {
        let truth = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        assert_eq!(clustering_accuracy(&truth, &truth).unwrap(), 100.0);
        let swapped: Vec<usize> = truth.iter().map(|&t| 1 - t).collect();
        assert_eq!(clustering_accuracy(&swapped, &truth).unwrap(), 100.0);
        let pred = [0, 0, 0, 1, 1, 1, 1, 1, 0, 1];
        // identity matches 3 + 4 = 7, swap matches 2 + 1 = 3
        assert_eq!(clustering_accuracy(&pred, &truth).unwrap(), 70.0);
        assert!(clustering_accuracy(&pred[..3], &truth).is_err());
    }

    #[test]
    fn accuracy_handles_unequal_label_counts() {
        assert_eq!(clustering_accuracy(&[0, 0, 0], &[0, 1, 2]).unwrap(), 100.0 / 3.0);
        assert_eq!(clustering_accuracy(&[2, 2, 1], &[0, 0, 0]).unwrap(), 200.0 / 3.0);
    }
}

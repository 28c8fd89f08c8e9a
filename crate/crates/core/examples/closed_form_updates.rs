//! The closed-form (U, V) step for each regularizer, checked against random
//! perturbations of the subproblem.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relu_nmd::regularizers::{kernel_for, subproblem_value, update_uv};
use relu_nmd::{FactorPair, RegularizerCase, SparsityScope};

fn main() -> relu_nmd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rnd = |r, c| Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0));
    let (p, q) = (rnd(3, 2), rnd(2, 4));
    let (w_norm, lambda) = (1.5, 0.8);

    let cases = [
        RegularizerCase::None,
        RegularizerCase::Tikhonov { eta1: 0.3, eta2: 0.3 },
        RegularizerCase::L1L1 { eta1: 0.2, eta2: 0.1 },
        RegularizerCase::L1MinusFro { eta1: 0.2, eta2: 0.5 },
        RegularizerCase::sparsity(Some(3), Some(4), SparsityScope::Global),
    ];
    for case in &cases {
        let spec = kernel_for(case, w_norm, lambda)?;
        let y = update_uv(case, &p, &q, w_norm, lambda)?;
        let best = subproblem_value(case, &p, &q, &spec, lambda, &y);

        // random feasible neighbours never do better
        let mut worst_gain = f64::NEG_INFINITY;
        for _ in 0..2000 {
            let du = rnd(3, 2) * 0.05;
            let dv = rnd(2, 4) * 0.05;
            let mask_u = y.u().mapv(|x| if x != 0.0 { 1.0 } else { 0.0 });
            let mask_v = y.v().mapv(|x| if x != 0.0 { 1.0 } else { 0.0 });
            let (du, dv) = match case {
                RegularizerCase::SparsityConstraint { .. } => (du * &mask_u, dv * &mask_v),
                _ => (du, dv),
            };
            let z = FactorPair::new(y.u() + &du, y.v() + &dv)?;
            worst_gain = worst_gain.max(best - subproblem_value(case, &p, &q, &spec, lambda, &z));
        }
        println!("{:<12} value {:+.6}  best neighbour gain {:+.2e}", case.name(), best, worst_gain);
    }
    Ok(())
}

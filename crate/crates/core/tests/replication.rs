//! The held-out replication protocol on a synthetic nonlinear regression
//! task with the same shape as the real-data benchmark (4177 x 8).

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::replicate;
use streamboost::dataset::{Dataset, Sample, Supervision, Task};

fn surrogate(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|index| {
            let x: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let z = 10.0 + x.iter().map(|v| 2.0 * (3.0 * v).sin()).sum::<f64>() + 3.0 * x[0] * x[1]
                + rng.gen_range(-0.5..0.5);
            Sample { index, features: x, supervision: Supervision::Target(vec![z]) }
        })
        .collect();
    Dataset::new(samples, 8, Task::Regression { outputs: 1 }).unwrap()
}

#[test]
fn boosted_ensembles_beat_a_single_tree() {
    let r = replicate(&surrogate(4177, 17), 7);
    assert!(r.sgb <= 1.25 * r.gb, "{r:?}");
    assert!(r.sgb <= 0.5 * r.base && r.gb <= 0.5 * r.base, "{r:?}");
}

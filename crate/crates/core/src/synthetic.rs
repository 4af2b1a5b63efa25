//! Seeded synthetic datasets with known generating functions.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, Sample, Supervision, Task};
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::metrics::Comparator;

/// `x -> W x + b` with `W` stored row-major (`outputs x inputs`).
#[derive(Clone, Debug, PartialEq)]
pub struct LinearTarget {
    pub inputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearTarget {
    pub fn random(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        LinearTarget {
            inputs,
            weights: (0..inputs * outputs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            bias: (0..outputs).map(|_| rng.gen_range(-0.5..0.5)).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.bias
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let row = &self.weights[k * self.inputs..(k + 1) * self.inputs];
                b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    pub fn as_fn(&self) -> Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync> {
        let f = self.clone();
        Arc::new(move |x: &[f64]| f.eval(x))
    }
}

/// Which synthetic family to draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Regression targets `f*(x) + noise`.
    Linear,
    /// Labels `sign(f*(x))`, with a fraction of flips given by `noise`.
    Binary,
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(SyntheticKind::Linear),
            "binary" => Ok(SyntheticKind::Binary),
            other => Err(Error::Config(format!("unknown synthetic dataset `{other}`"))),
        }
    }
}

/// Features uniform on `[-1, 1]^d`, generator drawn from the same seed.
/// Regression noise is uniform on `[-noise, noise]`.
pub fn generate(
    kind: SyntheticKind,
    n: usize,
    dim: usize,
    noise: f64,
    seed: u64,
) -> Result<(Dataset, LinearTarget)> {
    if n == 0 || dim == 0 {
        return Err(Error::invalid("synthetic data needs n >= 1 and d >= 1"));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::invalid(format!("noise {noise} must be >= 0")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = LinearTarget::random(dim, 1, &mut rng);
    let samples = (0..n)
        .map(|index| {
            let features: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = target.eval(&features)[0];
            let supervision = match kind {
                SyntheticKind::Linear => {
                    let e = if noise > 0.0 { rng.gen_range(-noise..=noise) } else { 0.0 };
                    Supervision::Target(vec![f + e])
                }
                SyntheticKind::Binary => {
                    let u = if f >= 0.0 { 1.0 } else { -1.0 };
                    let flip = noise > 0.0 && rng.gen_bool(noise.min(1.0));
                    Supervision::Sign(if flip { -u } else { u })
                }
            };
            Sample {
                index,
                features,
                supervision,
            }
        })
        .collect();
    let task = match kind {
        SyntheticKind::Linear => Task::Regression { outputs: 1 },
        SyntheticKind::Binary => Task::Binary,
    };
    Ok((Dataset::new(samples, dim, task)?, target))
}

/// Comparator that predicts, at each `x`, the minimizer of the loss for
/// the noiseless supervision the generator assigns to `x`.
pub fn oracle_comparator(kind: SyntheticKind, target: &LinearTarget, loss: &LossSpec) -> Result<Comparator> {
    let supervision = move |f: f64| match kind {
        SyntheticKind::Linear => Supervision::Target(vec![f]),
        SyntheticKind::Binary => Supervision::Sign(if f >= 0.0 { 1.0 } else { -1.0 }),
    };
    // fail early on loss/supervision mismatches
    loss.at(&supervision(0.0))?.minimizer()?;
    let (target, loss) = (target.clone(), loss.clone());
    Ok(Comparator::oracle(move |x| {
        let sup = supervision(target.eval(x)[0]);
        loss.at(&sup)
            .and_then(|l| l.minimizer())
            .expect("checked at construction")
    }))
}

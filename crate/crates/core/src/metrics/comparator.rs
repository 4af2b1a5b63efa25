//! Hindsight comparators `f*` for regret: fitted once on the training
//! split, then frozen.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::learners::{Hypothesis, RegressionTree, TreeParams};
use crate::losses::LossSpec;

pub const DEFAULT_COMPARATOR_DEPTH: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComparatorKind {
    DeepTree,
    BestLinear,
    Oracle,
}

impl FromStr for ComparatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deep_tree" => Ok(ComparatorKind::DeepTree),
            "best_linear" => Ok(ComparatorKind::BestLinear),
            "oracle" => Ok(ComparatorKind::Oracle),
            other => Err(Error::Config(format!("unknown comparator `{other}`"))),
        }
    }
}

pub type OracleFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A frozen predictor used only as the regret baseline.
#[derive(Clone)]
pub enum Comparator {
    Tree(RegressionTree),
    Linear(Hypothesis),
    Oracle(OracleFn),
}

impl fmt::Debug for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comparator::Tree(t) => write!(f, "Comparator::Tree(depth {})", t.depth()),
            Comparator::Linear(h) => write!(f, "Comparator::Linear({h:?})"),
            Comparator::Oracle(_) => f.write_str("Comparator::Oracle"),
        }
    }
}

impl Comparator {
    pub fn oracle(f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Comparator::Oracle(Arc::new(f))
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Comparator::Tree(t) => t.leaf_value(x).to_vec(),
            Comparator::Linear(h) => h.predict(x),
            Comparator::Oracle(f) => f(x),
        }
    }

    /// `l_t(f*(x_t))` for one sample.
    pub fn loss(&self, spec: &LossSpec, sample: &Sample) -> Result<f64> {
        spec.at(&sample.supervision)?.value(&self.predict(&sample.features))
    }
}

/// Per-sample regression targets for fitting a comparator: the pointwise
/// minimizer of each sample's loss.
pub fn comparator_targets(train: &Dataset, loss: &LossSpec) -> Result<Vec<Vec<f64>>> {
    train
        .samples()
        .iter()
        .map(|s| loss.at(&s.supervision)?.minimizer())
        .collect()
}

pub fn comparator_fit(
    train: &Dataset,
    loss: &LossSpec,
    kind: ComparatorKind,
    depth: usize,
) -> Result<Comparator> {
    let targets = comparator_targets(train, loss)?;
    let xs: Vec<&[f64]> = train.samples().iter().map(|s| s.features.as_slice()).collect();
    match kind {
        ComparatorKind::DeepTree => Ok(Comparator::Tree(RegressionTree::fit(
            &xs,
            &targets,
            loss.outputs,
            TreeParams {
                max_depth: depth,
                min_leaf: 1,
            },
        ))),
        ComparatorKind::BestLinear => best_linear(&xs, &targets, loss.outputs).map(Comparator::Linear),
        ComparatorKind::Oracle => Err(Error::Config(
            "the oracle comparator needs a known generating function and cannot be fitted".into(),
        )),
    }
}

/// Least-squares affine fit `W x + b` (minimum-norm solution).
pub fn best_linear(xs: &[&[f64]], targets: &[Vec<f64>], outputs: usize) -> Result<Hypothesis> {
    let n = xs.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = xs[0].len();
    let design = DMatrix::from_fn(n, d + 1, |i, j| if j < d { xs[i][j] } else { 1.0 });
    let svd = design.svd(true, true);
    let mut weights = vec![0.0; outputs * d];
    let mut bias = vec![0.0; outputs];
    for k in 0..outputs {
        let rhs = DVector::from_fn(n, |i, _| targets[i][k]);
        let coef = svd
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::numeric(format!("least squares failed: {e}")))?;
        weights[k * d..(k + 1) * d].copy_from_slice(&coef.as_slice()[..d]);
        bias[k] = coef[d];
    }
    Ok(Hypothesis::Linear {
        weights,
        bias,
        inputs: d,
    })
}

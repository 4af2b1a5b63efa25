//! Batch gradient boosting baseline.
//!
//! Stages are trained in order. Stage `i` streams over the training set,
//! re-evaluating the frozen prefix `h_1 .. h_{i-1}` on every sample (no
//! cached predictions), and trains learner `i` on the square loss towards
//! the loss gradient at the prefix prediction. A stage ends when its mean
//! square loss improves by less than the relative tolerance between passes
//! or after `max_passes` passes.

use crate::dataset::{stream, Dataset};
use crate::error::{check_dim, Error, Result};
use crate::learners::{Hypothesis, LearnerConfig};
use crate::losses::LossSpec;
use crate::metrics::CostCounter;
use crate::sgb_smooth::{additive_predict, norm_sq};

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_MAX_PASSES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GbCriteria {
    /// Relative improvement of the stage square loss below which a stage
    /// stops. The first pass is compared against the zero predictor.
    pub tolerance: f64,
    pub max_passes: usize,
}

impl Default for GbCriteria {
    fn default() -> Self {
        GbCriteria {
            tolerance: DEFAULT_TOLERANCE,
            max_passes: DEFAULT_MAX_PASSES,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GbStage {
    pub passes: usize,
    /// Samples streamed through the stage, `passes * |train|`.
    pub samples: u64,
    /// Mean square loss of the learner on its last pass.
    pub square_loss: f64,
    /// Training loss of the ensemble after this stage (uncounted).
    pub train_loss: f64,
}

#[derive(Clone, Debug)]
pub struct BatchGb {
    inputs: usize,
    y0: Vec<f64>,
    eta: f64,
    hypotheses: Vec<Hypothesis>,
    stages: Vec<GbStage>,
    costs: CostCounter,
}

impl BatchGb {
    pub fn new(inputs: usize, y0: Vec<f64>, eta: f64) -> Self {
        BatchGb {
            inputs,
            y0,
            eta,
            hypotheses: Vec::new(),
            stages: Vec::new(),
            costs: CostCounter::default(),
        }
    }

    /// Rebuilds a fitted model from its parts.
    pub fn from_parts(inputs: usize, y0: Vec<f64>, eta: f64, hypotheses: Vec<Hypothesis>) -> Self {
        BatchGb {
            hypotheses,
            ..Self::new(inputs, y0, eta)
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn stages(&self) -> &[GbStage] {
        &self.stages
    }

    pub fn costs(&self) -> CostCounter {
        self.costs
    }

    /// Counted prediction: one unit per hypothesis.
    pub fn predict(&mut self, x: &[f64]) -> Vec<f64> {
        self.costs.record_predictions(self.hypotheses.len() as u64);
        self.evaluate(x)
    }

    /// `y0 - eta * sum_i h_i(x)` without cost accounting.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        additive_predict(&self.y0, self.eta, &self.hypotheses, x)
    }

    /// Mean loss of the ensemble over a dataset (uncounted).
    pub fn mean_loss(&self, data: &Dataset, loss: &LossSpec) -> Result<f64> {
        let mut total = 0.0;
        for s in data.samples() {
            total += loss.at(&s.supervision)?.value(&self.evaluate(&s.features))?;
        }
        Ok(total / data.len() as f64)
    }
}

/// The closed-form unit count `sum_i T_i (i + 2)` for stages with `T_i`
/// streamed samples.
pub fn closed_form_cost(stage_samples: &[u64]) -> u64 {
    stage_samples
        .iter()
        .enumerate()
        .map(|(i, t)| t * (i as u64 + 1 + 2))
        .sum()
}

#[allow(clippy::too_many_arguments)]
pub fn train_batch_gb(
    train: &Dataset,
    loss: &LossSpec,
    n_learners: usize,
    learner: &LearnerConfig,
    eta: f64,
    y0: Vec<f64>,
    criteria: GbCriteria,
    seed: u64,
) -> Result<BatchGb> {
    if n_learners == 0 {
        return Err(Error::invalid("need at least one weak learner"));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("gb eta {eta} must be >= 0")));
    }
    if criteria.max_passes == 0 || criteria.tolerance.is_nan() || criteria.tolerance < 0.0 {
        return Err(Error::invalid("gb needs max_passes >= 1 and tolerance >= 0"));
    }
    let m = y0.len();
    check_dim(loss.outputs, m)?;
    let mut model = BatchGb::new(train.dim(), y0, eta);
    let mut g = vec![0.0; m];
    let mut h = vec![0.0; m];

    for stage in 0..n_learners {
        let mut weak = learner.build(train.dim(), m)?;
        let mut prev = f64::NAN;
        let mut passes = 0;
        let mut last = f64::NAN;
        while passes < criteria.max_passes {
            let pass_seed = seed
                .wrapping_add((stage as u64) << 32)
                .wrapping_add(passes as u64);
            let mut sq = 0.0;
            let mut zero_sq = 0.0;
            for s in stream(train, pass_seed, true, Some(1)) {
                let y = model.predict(&s.features);
                loss.at(&s.supervision)?.gradient_into(&y, &mut g)?;
                weak.predict_into(&s.features, &mut h)?;
                sq += g.iter().zip(&h).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                zero_sq += norm_sq(&g);
                weak.update(&s.features, &g)?;
            }
            passes += 1;
            let n = train.len() as f64;
            let (cur, base) = (sq / n, if prev.is_nan() { zero_sq / n } else { prev });
            if !cur.is_finite() {
                return Err(Error::numeric(format!("stage {} diverged", stage + 1)));
            }
            last = cur;
            let improvement = if base > 0.0 { (base - cur) / base } else { 0.0 };
            prev = cur;
            if improvement < criteria.tolerance {
                break;
            }
        }
        model.costs.merge(&weak.costs());
        model.hypotheses.push(weak.hypothesis());
        let train_loss = model.mean_loss(train, loss)?;
        if !train_loss.is_finite() {
            return Err(Error::numeric(format!("stage {} diverged", stage + 1)));
        }
        model.stages.push(GbStage {
            passes,
            samples: passes as u64 * train.len() as u64,
            square_loss: last,
            train_loss,
        });
    }
    Ok(model)
}

//! No-regret online square-loss regressors used as weak learners.
//!
//! A [`WeakLearner`] wraps one concrete model and counts its cost: each
//! counted prediction is one unit and each update two units.

pub mod axis;
pub mod edge;
pub mod hypothesis;
pub mod linear;
pub mod tree;

use std::str::FromStr;

pub use axis::AxisRestricted;
pub use edge::{edge_existence_check, measure_edge, EdgeReport, EdgeTracker};
pub use hypothesis::{Hypothesis, HypothesisAverage, Thinned};
pub use linear::{LinearFtrl, LinearOgd, StepSchedule};
pub use tree::{BufferedTree, Node, RegressionTree, TreeParams};

use crate::error::{check_dim, Error, Result};
use crate::metrics::CostCounter;

pub const DEFAULT_SNAPSHOTS: usize = 32;

#[derive(Clone, Debug)]
pub enum LearnerModel {
    Linear(LinearOgd),
    Ftrl(LinearFtrl),
    Tree(BufferedTree),
    Axis(AxisRestricted),
}

/// Hyperparameters for building weak learners.
#[derive(Clone, Debug, PartialEq)]
pub enum LearnerConfig {
    LinearOgd {
        step: f64,
        schedule: StepSchedule,
        radius: Option<f64>,
        intercept: bool,
    },
    LinearFtrl {
        reg: f64,
        intercept: bool,
    },
    Tree {
        params: TreeParams,
        buffer: usize,
        refit_every: usize,
    },
    Axis {
        cap: f64,
    },
}

impl LearnerConfig {
    pub fn linear_ogd(step: f64) -> Self {
        LearnerConfig::LinearOgd {
            step,
            schedule: StepSchedule::InvSqrt,
            radius: None,
            intercept: true,
        }
    }

    pub fn linear_ftrl(reg: f64) -> Self {
        LearnerConfig::LinearFtrl {
            reg,
            intercept: true,
        }
    }

    pub fn tree(depth: usize, buffer: usize, refit_every: usize) -> Self {
        LearnerConfig::Tree {
            params: TreeParams {
                max_depth: depth,
                min_leaf: 1,
            },
            buffer,
            refit_every,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerConfig::LinearOgd { .. } => "linear_ogd",
            LearnerConfig::LinearFtrl { .. } => "linear_ftrl",
            LearnerConfig::Tree { .. } => "tree",
            LearnerConfig::Axis { .. } => "axis",
        }
    }

    pub fn build(&self, inputs: usize, outputs: usize) -> Result<WeakLearner> {
        let model = match *self {
            LearnerConfig::LinearOgd {
                step,
                schedule,
                radius,
                intercept,
            } => {
                if !(step >= 0.0 && step.is_finite()) {
                    return Err(Error::invalid(format!("learner step {step} must be >= 0")));
                }
                LearnerModel::Linear(LinearOgd::new(inputs, outputs, step, schedule, radius, intercept))
            }
            LearnerConfig::LinearFtrl { reg, intercept } => {
                if !(reg > 0.0) {
                    return Err(Error::invalid(format!("ftrl regularization {reg} must be > 0")));
                }
                LearnerModel::Ftrl(LinearFtrl::new(inputs, outputs, reg, intercept))
            }
            LearnerConfig::Tree {
                params,
                buffer,
                refit_every,
            } => {
                if buffer == 0 || refit_every == 0 {
                    return Err(Error::invalid("tree buffer and refit period must be positive"));
                }
                LearnerModel::Tree(BufferedTree::new(inputs, outputs, buffer, refit_every, params))
            }
            LearnerConfig::Axis { cap } => {
                if outputs != 2 {
                    return Err(Error::invalid("axis-restricted learners need m = 2"));
                }
                LearnerModel::Axis(AxisRestricted::new(inputs, cap))
            }
        };
        Ok(WeakLearner::from_model(model, outputs))
    }
}

impl FromStr for StepSchedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt" | "inv_sqrt" => Ok(StepSchedule::InvSqrt),
            "inv" | "strong" => Ok(StepSchedule::Inv),
            other => Err(Error::Config(format!("unknown step schedule `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WeakLearner {
    model: LearnerModel,
    outputs: usize,
    costs: CostCounter,
}

impl WeakLearner {
    pub fn from_model(model: LearnerModel, outputs: usize) -> Self {
        WeakLearner {
            model,
            outputs,
            costs: CostCounter::default(),
        }
    }

    pub fn model(&self) -> &LearnerModel {
        &self.model
    }

    pub fn inputs(&self) -> usize {
        match &self.model {
            LearnerModel::Linear(l) => l.inputs(),
            LearnerModel::Ftrl(l) => l.inputs(),
            LearnerModel::Tree(l) => l.inputs(),
            LearnerModel::Axis(l) => l.inputs(),
        }
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn costs(&self) -> CostCounter {
        self.costs
    }

    /// Prediction without cost accounting; safe on a shared snapshot.
    pub fn peek_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.inputs(), x.len())?;
        check_dim(self.outputs, out.len())?;
        match &self.model {
            LearnerModel::Linear(l) => l.predict_into(x, out),
            LearnerModel::Ftrl(l) => l.predict_into(x, out),
            LearnerModel::Tree(l) => l.predict_into(x, out),
            LearnerModel::Axis(l) => l.predict_into(x, out),
        }
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::numeric("weak learner produced a non-finite prediction"))
        }
    }

    pub fn peek(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.outputs];
        self.peek_into(x, &mut out)?;
        Ok(out)
    }

    /// Counted prediction (one unit).
    pub fn predict_into(&mut self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.peek_into(x, out)?;
        self.costs.record_prediction();
        Ok(())
    }

    pub fn predict(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.outputs];
        self.predict_into(x, &mut out)?;
        Ok(out)
    }

    /// Feeds the square loss `||target - h(x)||^2` (two units).
    pub fn update(&mut self, x: &[f64], target: &[f64]) -> Result<()> {
        check_dim(self.inputs(), x.len())?;
        check_dim(self.outputs, target.len())?;
        if !target.iter().all(|v| v.is_finite()) {
            return Err(Error::numeric("non-finite weak learner target"));
        }
        match &mut self.model {
            LearnerModel::Linear(l) => l.learn(x, target),
            LearnerModel::Ftrl(l) => l.learn(x, target),
            LearnerModel::Tree(l) => l.learn(x, target),
            LearnerModel::Axis(l) => l.learn(x, target),
        }
        self.costs.record_update();
        Ok(())
    }

    /// Frozen copy of the current hypothesis.
    pub fn hypothesis(&self) -> Hypothesis {
        match &self.model {
            LearnerModel::Linear(l) => l.hypothesis(),
            LearnerModel::Ftrl(l) => l.hypothesis(),
            LearnerModel::Tree(l) => Hypothesis::Tree(l.tree().clone()),
            LearnerModel::Axis(l) => l.hypothesis(),
        }
    }

    /// An empty running average suited to this learner's hypotheses.
    pub fn new_average(&self, snapshots: usize) -> HypothesisAverage {
        match &self.model {
            LearnerModel::Linear(_) | LearnerModel::Ftrl(_) => HypothesisAverage::Linear {
                sum_weights: vec![0.0; self.inputs() * self.outputs],
                sum_bias: vec![0.0; self.outputs],
                inputs: self.inputs(),
                count: 0,
            },
            LearnerModel::Axis(_) => HypothesisAverage::Constant {
                sum: vec![0.0; self.outputs],
                count: 0,
            },
            LearnerModel::Tree(_) => HypothesisAverage::Snapshots(Thinned::new(snapshots)),
        }
    }

    /// Adds the current hypothesis to a running average.
    pub fn accumulate(&self, avg: &mut HypothesisAverage) {
        match avg {
            HypothesisAverage::Snapshots(s) => s.offer(|| self.hypothesis()),
            HypothesisAverage::Linear {
                sum_weights,
                sum_bias,
                count,
                ..
            } => {
                if let Hypothesis::Linear { weights, bias, .. } = self.hypothesis() {
                    sum_weights.iter_mut().zip(&weights).for_each(|(s, w)| *s += w);
                    sum_bias.iter_mut().zip(&bias).for_each(|(s, b)| *s += b);
                }
                *count += 1;
            }
            HypothesisAverage::Constant { sum, count } => {
                if let Hypothesis::Constant(v) = self.hypothesis() {
                    sum.iter_mut().zip(&v).for_each(|(s, a)| *s += a);
                }
                *count += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn costs_count_predictions_and_updates() {
        let mut l = LearnerConfig::linear_ogd(0.1).build(2, 1).unwrap();
        for t in 0..10 {
            let x = [t as f64 * 0.1, 1.0];
            l.predict(&x).unwrap();
            l.update(&x, &[1.0]).unwrap();
        }
        assert_eq!(l.costs().predictions, 10);
        assert_eq!(l.costs().update_units, 20);
        assert_eq!(l.costs().total(), 30);
        l.peek(&[0.0, 0.0]).unwrap();
        assert_eq!(l.costs().predictions, 10);
    }

    #[test]
    fn dimension_errors() {
        let mut l = LearnerConfig::linear_ftrl(1.0).build(2, 1).unwrap();
        assert!(matches!(l.predict(&[1.0]), Err(Error::Dimension { .. })));
        assert!(l.update(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(LearnerConfig::Axis { cap: 2.0 }.build(2, 1).is_err());
    }

    #[test]
    fn tree_predicts_zero_before_refit() {
        let l = LearnerConfig::tree(3, 8, 8).build(2, 2).unwrap();
        assert_eq!(l.peek(&[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn linear_average_is_parameter_mean() {
        let mut l = LearnerConfig::linear_ogd(0.2).build(1, 1).unwrap();
        let mut avg = l.new_average(DEFAULT_SNAPSHOTS);
        let mut preds = Vec::new();
        let x = [0.7];
        for t in 0..5 {
            l.accumulate(&mut avg);
            preds.push(l.peek(&x).unwrap()[0]);
            l.update(&[t as f64 * 0.3], &[1.0]).unwrap();
        }
        let mean = preds.iter().sum::<f64>() / preds.len() as f64;
        let h = avg.mean().unwrap();
        assert!((h.predict(&x)[0] - mean).abs() < 1e-12);
    }
}

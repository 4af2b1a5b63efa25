//! One training run over a stream with regret, edge and cost bookkeeping.

use crate::batch_gb::{train_batch_gb, BatchGb, GbCriteria};
use crate::dataset::{stream, Dataset};
use crate::error::{Error, Result};
use crate::learners::edge::DEFAULT_EDGE_WINDOW;
use crate::learners::{EdgeReport, LearnerConfig, DEFAULT_SNAPSHOTS};
use crate::losses::LossSpec;
use crate::model_io::{Algorithm, Combiner, FrozenModel, TestPredictor};
use crate::sgb_nonsmooth::{AvgDenominator, SgbResidual};
use crate::sgb_smooth::{
    default_eta, EtaSetting, SgbSmooth, StageStats, DEFAULT_GAMMA_WARMUP, PROVISIONAL_GAMMA,
};

use super::{Comparator, CostCounter, RegretRecord, RegretTracker};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaChoice {
    Fixed(f64),
    /// `default_eta(gamma, beta)` for a user-supplied edge.
    Gamma(f64),
    /// Edge estimated on a warmup window, then frozen.
    Auto { warmup: usize },
}

/// Everything needed to train one model.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub loss: LossSpec,
    pub learner: LearnerConfig,
    pub n_learners: usize,
    pub eta: EtaChoice,
    /// Strong convexity used by residual boosting; defaults to the loss's.
    pub lambda_sc: Option<f64>,
    pub radius: f64,
    pub avg_denominator: AvgDenominator,
    pub snapshots: usize,
    pub edge_window: usize,
    pub gb: GbCriteria,
    /// Stage step of batch boosting; defaults to the boosting step size.
    pub gb_eta: Option<f64>,
    pub y0: Option<Vec<f64>>,
    pub passes: usize,
    pub shuffle: bool,
    /// Stop the stream after this many steps.
    pub max_steps: Option<u64>,
    pub seed: u64,
}

impl RunSpec {
    pub fn new(algorithm: Algorithm, loss: LossSpec, learner: LearnerConfig, n_learners: usize) -> Self {
        RunSpec {
            algorithm,
            loss,
            learner,
            n_learners,
            eta: EtaChoice::Auto {
                warmup: DEFAULT_GAMMA_WARMUP,
            },
            lambda_sc: None,
            radius: 1.0,
            avg_denominator: AvgDenominator::N,
            snapshots: DEFAULT_SNAPSHOTS,
            edge_window: DEFAULT_EDGE_WINDOW,
            gb: GbCriteria::default(),
            gb_eta: None,
            y0: None,
            passes: 1,
            shuffle: true,
            max_steps: None,
            seed: 0,
        }
    }

    pub fn y0(&self) -> Vec<f64> {
        self.y0.clone().unwrap_or_else(|| vec![0.0; self.loss.outputs])
    }

    fn eta_setting(&self) -> Result<EtaSetting> {
        Ok(match self.eta {
            EtaChoice::Fixed(e) => EtaSetting::Fixed(e),
            EtaChoice::Gamma(g) => EtaSetting::Fixed(default_eta(g, self.loss.smoothness()?)?),
            EtaChoice::Auto { warmup } => EtaSetting::Auto {
                beta: self.loss.smoothness()?,
                warmup,
            },
        })
    }

    /// Step size of batch boosting stages.
    pub fn batch_eta(&self) -> Result<f64> {
        if let Some(e) = self.gb_eta {
            return Ok(e);
        }
        match self.eta {
            EtaChoice::Fixed(e) => Ok(e),
            EtaChoice::Gamma(g) => default_eta(g, self.loss.smoothness()?),
            EtaChoice::Auto { .. } => default_eta(PROVISIONAL_GAMMA, self.loss.smoothness()?),
        }
    }

    pub fn lambda(&self) -> Result<f64> {
        match self.lambda_sc {
            Some(l) => Ok(l),
            None => Ok(self.loss.convexity()?.lambda_sc),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_learners == 0 {
            return Err(Error::Config("n_learners must be at least 1".into()));
        }
        if self.passes == 0 {
            return Err(Error::Config("passes must be at least 1".into()));
        }
        if self.algorithm == Algorithm::SgbSmooth && !self.loss.kind.is_smooth() {
            return Err(Error::Config(format!(
                "{} is non-smooth; use sgb_residual",
                self.loss.kind
            )));
        }
        if self.algorithm == Algorithm::SgbResidual && !(self.lambda()? > 0.0) {
            return Err(Error::Config(format!(
                "sgb_residual needs a strongly convex loss; {} has lambda = 0 (set reg_lambda > 0)",
                self.loss.kind
            )));
        }
        Ok(())
    }

    pub fn build(&self, inputs: usize) -> Result<TrainedModel> {
        self.validate()?;
        let learners = (0..self.n_learners)
            .map(|_| self.learner.build(inputs, self.loss.outputs))
            .collect::<Result<Vec<_>>>()?;
        Ok(match self.algorithm {
            Algorithm::SgbSmooth => TrainedModel::Smooth(SgbSmooth::with_options(
                learners,
                self.eta_setting()?,
                self.y0(),
                self.snapshots,
                self.edge_window,
            )?),
            Algorithm::SgbResidual => TrainedModel::Residual(SgbResidual::with_options(
                learners,
                self.lambda()?,
                self.radius,
                self.y0(),
                self.avg_denominator,
                self.snapshots,
                self.edge_window,
            )?),
            Algorithm::BatchGb => TrainedModel::Batch(BatchGb::new(inputs, self.y0(), self.batch_eta()?)),
        })
    }
}

#[derive(Clone, Debug)]
pub enum TrainedModel {
    Smooth(SgbSmooth),
    Residual(SgbResidual),
    Batch(BatchGb),
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            TrainedModel::Smooth(_) => Algorithm::SgbSmooth,
            TrainedModel::Residual(_) => Algorithm::SgbResidual,
            TrainedModel::Batch(_) => Algorithm::BatchGb,
        }
    }

    pub fn costs(&self) -> CostCounter {
        match self {
            TrainedModel::Smooth(m) => m.costs(),
            TrainedModel::Residual(m) => m.costs(),
            TrainedModel::Batch(m) => m.costs(),
        }
    }

    /// Per-learner stage statistics (empty for batch boosting).
    pub fn stats(&self) -> &[StageStats] {
        match self {
            TrainedModel::Smooth(m) => m.stats(),
            TrainedModel::Residual(m) => m.stats(),
            TrainedModel::Batch(_) => &[],
        }
    }

    /// Edge report per learner; `None` where the edge is undefined.
    pub fn edges(&self) -> Vec<Option<EdgeReport>> {
        self.stats().iter().map(|s| s.edge.report().ok()).collect()
    }

    pub fn default_predictor(&self) -> TestPredictor {
        match self {
            TrainedModel::Smooth(_) => TestPredictor::Average,
            TrainedModel::Residual(_) | TrainedModel::Batch(_) => TestPredictor::Final,
        }
    }

    pub fn predict(&self, x: &[f64], predictor: TestPredictor) -> Result<Vec<f64>> {
        match (self, predictor) {
            (TrainedModel::Smooth(m), TestPredictor::Average) => m.predict_average(x),
            (TrainedModel::Smooth(m), TestPredictor::Final) => m.predict_online(x),
            (TrainedModel::Residual(m), TestPredictor::Final) => m.predict_test_final(x),
            (TrainedModel::Residual(m), TestPredictor::Full) => m.predict_test_full(x),
            (TrainedModel::Batch(m), TestPredictor::Final) => {
                crate::error::check_dim(m.inputs(), x.len())?;
                Ok(m.evaluate(x))
            }
            (m, p) => Err(Error::Config(format!(
                "test predictor `{}` is not available for {}",
                p.name(),
                m.algorithm().name()
            ))),
        }
    }

    pub fn freeze(&self, loss: &LossSpec, inputs: usize) -> Result<FrozenModel> {
        let (combiner, y0, final_hypotheses, averaged, epochs) = match self {
            TrainedModel::Smooth(m) => (
                Combiner::Additive { eta: m.eta() },
                m.y0().to_vec(),
                m.final_hypotheses(),
                if m.steps() > 0 {
                    m.averaged_hypotheses()?
                } else {
                    Vec::new()
                },
                Vec::new(),
            ),
            TrainedModel::Residual(m) => (
                Combiner::Residual(m.combiner()),
                m.y0().to_vec(),
                m.final_hypotheses(),
                Vec::new(),
                m.snapshots().to_vec(),
            ),
            TrainedModel::Batch(m) => (
                Combiner::Additive { eta: m.eta() },
                m.y0().to_vec(),
                m.hypotheses().to_vec(),
                Vec::new(),
                Vec::new(),
            ),
        };
        Ok(FrozenModel {
            algorithm: self.algorithm(),
            loss: loss.kind,
            inputs,
            outputs: loss.outputs,
            combiner,
            y0,
            final_hypotheses,
            averaged,
            epochs,
        })
    }
}

/// One logged step.
#[derive(Clone, Debug)]
pub struct StepLog {
    pub record: RegretRecord,
    pub prediction: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub model: TrainedModel,
    pub regret: RegretTracker,
    /// `(t, average regret)` at the requested checkpoints.
    pub checkpoints: Vec<(u64, f64)>,
    /// Per-step log when requested.
    pub log: Vec<StepLog>,
}

impl RunOutcome {
    pub fn costs(&self) -> CostCounter {
        self.model.costs()
    }
}

/// Trains `spec` on `train`, scoring every prediction against `comparator`.
///
/// Online algorithms are scored prequentially (predict, score, update).
/// Batch boosting is trained first and then scored on the training set in
/// stored order, which is its hindsight training regret.
pub fn run(
    spec: &RunSpec,
    train: &Dataset,
    comparator: &Comparator,
    checkpoints: &[u64],
    keep_log: bool,
) -> Result<RunOutcome> {
    let mut model = spec.build(train.dim())?;
    let mut regret = RegretTracker::new();
    let mut marks: Vec<u64> = checkpoints.to_vec();
    marks.sort_unstable();
    marks.dedup();
    let mut next_mark = 0;
    let mut hits = Vec::new();
    let mut log = Vec::new();
    let limit = spec.max_steps.unwrap_or(u64::MAX);

    let mut record = |regret: &mut RegretTracker, loss: f64, comp: f64, prediction: &[f64]| {
        let r = regret.push(loss, comp);
        while next_mark < marks.len() && marks[next_mark] < r.t {
            next_mark += 1;
        }
        if next_mark < marks.len() && marks[next_mark] == r.t {
            hits.push((r.t, r.avg_regret));
            next_mark += 1;
        }
        if keep_log {
            log.push(StepLog {
                record: r,
                prediction: prediction.to_vec(),
            });
        }
    };

    match &mut model {
        TrainedModel::Batch(m) => {
            *m = train_batch_gb(
                train,
                &spec.loss,
                spec.n_learners,
                &spec.learner,
                spec.batch_eta()?,
                spec.y0(),
                spec.gb,
                spec.seed,
            )?;
            for s in train.samples().iter().take(limit.min(usize::MAX as u64) as usize) {
                let y = m.evaluate(&s.features);
                let l = spec.loss.at(&s.supervision)?.value(&y)?;
                record(&mut regret, l, comparator.loss(&spec.loss, s)?, &y);
            }
        }
        TrainedModel::Smooth(m) => {
            for s in stream(train, spec.seed, spec.shuffle, Some(spec.passes)) {
                if regret.steps() >= limit {
                    break;
                }
                let step = m.step(&s.features, &spec.loss.at(&s.supervision)?)?;
                record(&mut regret, step.loss, comparator.loss(&spec.loss, s)?, &step.prediction);
            }
        }
        TrainedModel::Residual(m) => {
            for s in stream(train, spec.seed, spec.shuffle, Some(spec.passes)) {
                if regret.steps() >= limit {
                    break;
                }
                let step = m.step(&s.features, &spec.loss.at(&s.supervision)?)?;
                record(&mut regret, step.loss, comparator.loss(&spec.loss, s)?, &step.prediction);
            }
        }
    }
    Ok(RunOutcome {
        model,
        regret,
        checkpoints: hits,
        log,
    })
}

/// Mean loss of a trained model on held-out data.
pub fn test_risk(
    model: &TrainedModel,
    predictor: TestPredictor,
    loss: &LossSpec,
    test: &Dataset,
) -> Result<f64> {
    let mut total = 0.0;
    for s in test.samples() {
        total += loss.at(&s.supervision)?.value(&model.predict(&s.features, predictor)?)?;
    }
    Ok(total / test.len() as f64)
}

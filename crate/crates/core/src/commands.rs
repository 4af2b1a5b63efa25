//! The `train`, `eval`, `sweep` and `counterexample` subcommands as library
//! functions. Each takes a validated [`RunConfig`] and writes its outputs
//! to the configured paths.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::config::{DataFormat, DataSource, EvalSplit, RunConfig, SweepAxis};
use crate::dataset::{load_csv, load_libsvm, split, Dataset, LoadOptions, MinMaxScaler, Supervision};
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::metrics::{
    comparator_fit, counterexample_run, run, sweep_n, sweep_t, test_risk, write_counterexample,
    write_step_log, write_sweep_n, write_sweep_t, Comparator, ComparatorKind, CounterexampleConfig,
    CounterexampleReport, SweepNRow, SweepTRow,
};
use crate::model_io::FrozenModel;
use crate::synthetic::{generate, oracle_comparator, LinearTarget, SyntheticKind};

/// Train/test data plus the generator when the data is synthetic.
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub generator: Option<(SyntheticKind, LinearTarget)>,
}

fn load_file(path: &Path, cfg: &RunConfig, dim: Option<usize>) -> Result<Dataset> {
    let format = cfg.format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => DataFormat::Csv,
        _ => DataFormat::Libsvm,
    });
    let mut data = match format {
        DataFormat::Libsvm => load_libsvm(path, LoadOptions { task: cfg.task, dim })?,
        DataFormat::Csv => {
            let d = load_csv(path, cfg.target_column, cfg.task)?;
            match dim {
                Some(n) => d.with_dim(n)?,
                None => d,
            }
        }
    };
    if let Some(k) = cfg.classes {
        data = data.with_classes(k)?;
    }
    Ok(data)
}

/// Loads or generates the data and splits it (or loads the separate test
/// file), applying min-max scaling fitted on train when enabled.
pub fn prepare_data(cfg: &RunConfig) -> Result<Prepared> {
    let source = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("no data source; set `data`".into()))?;
    let (train, test, generator) = match source {
        DataSource::Synthetic(kind) => {
            let (all, f) = generate(*kind, cfg.synthetic_n, cfg.synthetic_d, cfg.synthetic_noise, cfg.seed)?;
            let (train, test) = split(&all, cfg.test_fraction, cfg.seed)?;
            (train, test, Some((*kind, f)))
        }
        DataSource::File(path) => {
            let all = load_file(path, cfg, cfg.dim)?;
            match &cfg.test_data {
                Some(tp) => {
                    let test = load_file(tp, cfg, Some(all.dim()))?;
                    (all, test, None)
                }
                None => {
                    let (train, test) = split(&all, cfg.test_fraction, cfg.seed)?;
                    (train, test, None)
                }
            }
        }
    };
    let (train, test) = if cfg.scale {
        let scaler = MinMaxScaler::fit(&train);
        (scaler.transform(&train)?, scaler.transform(&test)?)
    } else {
        (train, test)
    };
    Ok(Prepared { train, test, generator })
}

fn comparator_for(cfg: &RunConfig, data: &Prepared, loss: &LossSpec) -> Result<Comparator> {
    match (cfg.comparator, &data.generator) {
        (ComparatorKind::Oracle, Some((kind, f))) => oracle_comparator(*kind, f, loss),
        (ComparatorKind::Oracle, None) => Err(Error::Config(
            "comparator = oracle needs a synthetic data source".into(),
        )),
        (kind, _) => comparator_fit(&data.train, loss, kind, cfg.comparator_depth),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes with `f` to `path`, or to stdout when no path is configured.
fn write_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush().map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub steps: u64,
    pub avg_regret: f64,
    pub cost_units: u64,
    pub test_risk: f64,
    pub gamma_hat: Vec<Option<f64>>,
}

pub fn run_train(cfg: &RunConfig) -> Result<TrainSummary> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let spec = cfg.run_spec(data.train.task().output_dim())?;
    let comparator = comparator_for(cfg, &data, &spec.loss)?;
    let out = run(&spec, &data.train, &comparator, &[], cfg.metrics.is_some())?;
    let predictor = cfg.predictor.unwrap_or_else(|| out.model.default_predictor());
    if let Some(p) = &cfg.model {
        let frozen = out.model.freeze(&spec.loss, data.train.dim())?;
        let mut w = create(p)?;
        frozen
            .write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &cfg.metrics {
        write_output(Some(p), |w| write_step_log(&out.log, w))?;
    }
    Ok(TrainSummary {
        steps: out.regret.steps(),
        avg_regret: out.regret.avg_regret(),
        cost_units: out.costs().total(),
        test_risk: test_risk(&out.model, predictor, &spec.loss, &data.test)?,
        gamma_hat: out.model.edges().iter().map(|e| e.map(|r| r.gamma_hat)).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    pub samples: usize,
    /// Mean loss of the configured loss.
    pub risk: f64,
    /// Mean `||y - z||^2` for regression.
    pub square_error: Option<f64>,
    /// Fraction misclassified (sign rule for binary, argmax for multiclass).
    pub error_rate: Option<f64>,
}

/// Scores predictions `ys` against `data`.
pub fn score(data: &Dataset, ys: &[Vec<f64>], loss: &LossSpec) -> Result<EvalSummary> {
    let n = data.len();
    let (mut risk, mut sq, mut wrong) = (0.0, 0.0, 0usize);
    let mut regression = false;
    for (s, y) in data.samples().iter().zip(ys) {
        risk += loss.at(&s.supervision)?.value(y)?;
        match &s.supervision {
            Supervision::Target(z) => {
                regression = true;
                sq += y.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            }
            Supervision::Sign(u) => {
                let pred = if y[0] >= 0.0 { 1.0 } else { -1.0 };
                wrong += usize::from(pred != *u);
            }
            Supervision::Class(c) => {
                let arg = y
                    .iter()
                    .enumerate()
                    .fold(0, |best, (k, v)| if *v > y[best] { k } else { best });
                wrong += usize::from(arg != *c);
            }
        }
    }
    let nf = n as f64;
    Ok(EvalSummary {
        samples: n,
        risk: risk / nf,
        square_error: regression.then_some(sq / nf),
        error_rate: (!regression).then_some(wrong as f64 / nf),
    })
}

pub fn run_eval(cfg: &RunConfig) -> Result<EvalSummary> {
    cfg.validate()?;
    let path = cfg
        .model
        .as_ref()
        .ok_or_else(|| Error::Config("eval needs `model`".into()))?;
    let model = FrozenModel::load(path)?;
    let data = prepare_data(cfg)?;
    let loss = cfg.loss_spec(data.train.task().output_dim())?;
    if model.loss != loss.kind || model.outputs != loss.outputs || model.inputs != data.train.dim() {
        return Err(Error::Config(format!(
            "model ({}, {} inputs, {} outputs) does not match config ({}, {} inputs, {} outputs)",
            model.loss,
            model.inputs,
            model.outputs,
            loss.kind,
            data.train.dim(),
            loss.outputs
        )));
    }
    let predictor = cfg.predictor.unwrap_or(match model.algorithm {
        crate::model_io::Algorithm::SgbSmooth => crate::model_io::TestPredictor::Average,
        _ => crate::model_io::TestPredictor::Final,
    });
    let eval_data = match cfg.eval_split {
        EvalSplit::Test => data.test,
        EvalSplit::Train => data.train,
        EvalSplit::All => {
            let mut samples = data.train.samples().to_vec();
            samples.extend_from_slice(data.test.samples());
            Dataset::new(samples, data.train.dim(), data.train.task())?
        }
    };
    let ys = eval_data
        .samples()
        .iter()
        .map(|s| model.predict(&s.features, predictor))
        .collect::<Result<Vec<_>>>()?;
    score(&eval_data, &ys, &loss)
}

pub enum SweepRows {
    N(Vec<SweepNRow>),
    T(Vec<SweepTRow>),
}

pub fn run_sweep(cfg: &RunConfig) -> Result<SweepRows> {
    cfg.validate()?;
    if cfg.sweep_axis == SweepAxis::N && (cfg.sweep_ns.is_empty() || cfg.sweep_ns.contains(&0)) {
        return Err(Error::Config("sweep_ns needs positive learner counts".into()));
    }
    if cfg.sweep_axis == SweepAxis::T && cfg.checkpoints.is_empty() {
        return Err(Error::Config("sweep over t needs `checkpoints`".into()));
    }
    let data = prepare_data(cfg)?;
    let spec = cfg.run_spec(data.train.task().output_dim())?;
    let comparator = comparator_for(cfg, &data, &spec.loss)?;
    let out = cfg.output.as_deref();
    match cfg.sweep_axis {
        SweepAxis::N => {
            let rows = sweep_n(&data.train, &comparator, &spec, &cfg.sweep_ns, cfg.jobs)?;
            write_output(out, |w| write_sweep_n(&rows, w))?;
            Ok(SweepRows::N(rows))
        }
        SweepAxis::T => {
            let rows = sweep_t(&data.train, &comparator, &spec, &cfg.checkpoints)?;
            write_output(out, |w| write_sweep_t(&rows, w))?;
            Ok(SweepRows::T(rows))
        }
    }
}

pub fn run_counterexample(cfg: &RunConfig) -> Result<CounterexampleReport> {
    let ce = CounterexampleConfig {
        steps: cfg.ce_steps,
        n_learners: cfg.ce_n,
        y0: cfg.ce_y0,
        eta: cfg.ce_eta,
        residual_lambda: cfg.ce_lambda,
        residual_radius: cfg.ce_radius,
    };
    let report = counterexample_run(&ce)?;
    if let Some(p) = &cfg.output {
        write_output(Some(p), |w| write_counterexample(&report, w))?;
    }
    Ok(report)
}

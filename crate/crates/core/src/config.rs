//! Flat `key = value` run configuration.
//!
//! A config file and command-line overrides are merged into a [`RawConfig`]
//! (overrides win) and then parsed into a typed [`RunConfig`]. Unknown keys
//! and unparsable values are configuration errors. [`RunConfig::to_text`]
//! writes every effective setting, defaults included, in a form that loads
//! back into an identical config.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::batch_gb::{GbCriteria, DEFAULT_MAX_PASSES, DEFAULT_TOLERANCE};
use crate::dataset::TaskKind;
use crate::error::{Error, Result};
use crate::learners::edge::DEFAULT_EDGE_WINDOW;
use crate::learners::{LearnerConfig, StepSchedule, TreeParams, DEFAULT_SNAPSHOTS};
use crate::losses::{LossKind, LossSpec};
use crate::metrics::{ComparatorKind, EtaChoice, RunSpec, DEFAULT_COMPARATOR_DEPTH, DEFAULT_COUNTEREXAMPLE_ETA};
use crate::model_io::{Algorithm, TestPredictor};
use crate::sgb_nonsmooth::AvgDenominator;
use crate::sgb_smooth::DEFAULT_GAMMA_WARMUP;
use crate::synthetic::SyntheticKind;

pub const SEED_ENV: &str = "STREAMBOOST_SEED";

/// Untyped `key -> value` entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines; `#` starts a comment, blank lines are
    /// ignored and a key may appear only once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            if raw.entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", i + 1)));
            }
        }
        Ok(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    /// Parses a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim());
        Ok(())
    }

    /// Entries of `other` replace entries of `self`.
    pub fn merge(&mut self, other: RawConfig) {
        self.entries.extend(other.entries);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Where samples come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Synthetic(SyntheticKind),
}

impl DataSource {
    fn parse(s: &str) -> Result<Self> {
        match s.strip_prefix("synthetic:") {
            Some(kind) => Ok(DataSource::Synthetic(kind.parse()?)),
            None => Ok(DataSource::File(PathBuf::from(s))),
        }
    }

    fn text(&self) -> String {
        match self {
            DataSource::File(p) => p.display().to_string(),
            DataSource::Synthetic(SyntheticKind::Linear) => "synthetic:linear".into(),
            DataSource::Synthetic(SyntheticKind::Binary) => "synthetic:binary".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    Libsvm,
    Csv,
}

impl FromStr for DataFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "libsvm" => Ok(DataFormat::Libsvm),
            "csv" => Ok(DataFormat::Csv),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    N,
    T,
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(SweepAxis::N),
            "t" => Ok(SweepAxis::T),
            other => Err(Error::Config(format!("unknown sweep axis `{other}` (expected n or t)"))),
        }
    }
}

/// Which part of the data `eval` scores.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalSplit {
    Test,
    Train,
    All,
}

impl EvalSplit {
    pub fn name(self) -> &'static str {
        match self {
            EvalSplit::Test => "test",
            EvalSplit::Train => "train",
            EvalSplit::All => "all",
        }
    }
}

impl FromStr for EvalSplit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test" => Ok(EvalSplit::Test),
            "train" => Ok(EvalSplit::Train),
            "all" => Ok(EvalSplit::All),
            other => Err(Error::Config(format!("unknown eval_split `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LearnerKind {
    LinearOgd,
    LinearFtrl,
    Tree,
}

impl FromStr for LearnerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear_ogd" | "online_linear" => Ok(LearnerKind::LinearOgd),
            "linear_ftrl" | "ftrl_linear" => Ok(LearnerKind::LinearFtrl),
            "tree" | "buffered_tree" => Ok(LearnerKind::Tree),
            other => Err(Error::Config(format!("unknown learner `{other}`"))),
        }
    }
}

/// Fully typed configuration of every subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data: Option<DataSource>,
    pub format: Option<DataFormat>,
    pub task: TaskKind,
    pub target_column: usize,
    pub dim: Option<usize>,
    pub classes: Option<usize>,
    pub test_data: Option<PathBuf>,
    pub test_fraction: f64,
    pub scale: bool,
    pub synthetic_n: usize,
    pub synthetic_d: usize,
    pub synthetic_noise: f64,

    pub loss: LossKind,
    pub reg_lambda: f64,
    pub domain_bound: Option<f64>,

    pub learner: LearnerKind,
    pub learner_step: f64,
    pub learner_schedule: StepSchedule,
    pub learner_radius: Option<f64>,
    pub intercept: bool,
    pub ftrl_reg: f64,
    pub tree_depth: usize,
    pub tree_min_leaf: usize,
    pub tree_buffer: usize,
    pub tree_refit: usize,

    pub algorithm: Algorithm,
    pub n: usize,
    pub eta: EtaChoice,
    pub lambda: Option<f64>,
    pub radius: f64,
    pub avg_denominator: AvgDenominator,
    pub snapshots: usize,
    pub edge_window: usize,
    pub gb_tolerance: f64,
    pub gb_max_passes: usize,
    pub gb_eta: Option<f64>,
    pub passes: usize,
    pub shuffle: bool,
    pub max_steps: Option<u64>,
    pub seed: u64,

    pub comparator: ComparatorKind,
    pub comparator_depth: usize,
    pub predictor: Option<TestPredictor>,
    pub eval_split: EvalSplit,

    pub model: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub output: Option<PathBuf>,

    pub sweep_axis: SweepAxis,
    pub sweep_ns: Vec<usize>,
    pub checkpoints: Vec<u64>,
    pub jobs: usize,

    pub ce_steps: u64,
    pub ce_n: usize,
    pub ce_y0: [f64; 2],
    pub ce_eta: f64,
    pub ce_lambda: Option<f64>,
    pub ce_radius: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            format: None,
            task: TaskKind::Regression,
            target_column: 0,
            dim: None,
            classes: None,
            test_data: None,
            test_fraction: 0.1,
            scale: false,
            synthetic_n: 2000,
            synthetic_d: 5,
            synthetic_noise: 0.0,
            loss: LossKind::Square,
            reg_lambda: 0.0,
            domain_bound: None,
            learner: LearnerKind::LinearOgd,
            learner_step: 0.1,
            learner_schedule: StepSchedule::InvSqrt,
            learner_radius: None,
            intercept: true,
            ftrl_reg: 1.0,
            tree_depth: 4,
            tree_min_leaf: 1,
            tree_buffer: 512,
            tree_refit: 64,
            algorithm: Algorithm::SgbSmooth,
            n: 4,
            eta: EtaChoice::Auto {
                warmup: DEFAULT_GAMMA_WARMUP,
            },
            lambda: None,
            radius: 1.0,
            avg_denominator: AvgDenominator::N,
            snapshots: DEFAULT_SNAPSHOTS,
            edge_window: DEFAULT_EDGE_WINDOW,
            gb_tolerance: DEFAULT_TOLERANCE,
            gb_max_passes: DEFAULT_MAX_PASSES,
            gb_eta: None,
            passes: 1,
            shuffle: true,
            max_steps: None,
            seed: 0,
            comparator: ComparatorKind::DeepTree,
            comparator_depth: DEFAULT_COMPARATOR_DEPTH,
            predictor: None,
            eval_split: EvalSplit::Test,
            model: None,
            metrics: None,
            output: None,
            sweep_axis: SweepAxis::N,
            sweep_ns: vec![1, 2, 4, 8],
            checkpoints: vec![100, 1000],
            jobs: 1,
            ce_steps: 5000,
            ce_n: 2,
            ce_y0: [1.0, 1.0],
            ce_eta: DEFAULT_COUNTEREXAMPLE_ETA,
            ce_lambda: None,
            ce_radius: 10.0,
        }
    }
}

fn parse_val<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: Display,
{
    v.parse().map_err(|e: T::Err| {
        let msg = e.to_string();
        let msg = msg.strip_prefix("config error: ").unwrap_or(&msg);
        Error::Config(format!("`{key}`: cannot parse `{v}`: {msg}"))
    })
}

fn parse_opt<T: FromStr>(key: &str, v: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    if v.is_empty() || v == "none" {
        Ok(None)
    } else {
        parse_val(key, v).map(Some)
    }
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_val(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

fn opt_text<T: Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn list_text<T: Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn task_name(t: TaskKind) -> &'static str {
    match t {
        TaskKind::Regression => "regression",
        TaskKind::Binary => "binary",
        TaskKind::Multiclass => "multiclass",
    }
}

fn comparator_name(c: ComparatorKind) -> &'static str {
    match c {
        ComparatorKind::DeepTree => "deep_tree",
        ComparatorKind::BestLinear => "best_linear",
        ComparatorKind::Oracle => "oracle",
    }
}

fn learner_name(l: LearnerKind) -> &'static str {
    match l {
        LearnerKind::LinearOgd => "linear_ogd",
        LearnerKind::LinearFtrl => "linear_ftrl",
        LearnerKind::Tree => "tree",
    }
}

fn schedule_name(s: StepSchedule) -> &'static str {
    match s {
        StepSchedule::InvSqrt => "inv_sqrt",
        StepSchedule::Inv => "inv",
    }
}

fn path_text(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(|| "none".to_string(), |p| p.display().to_string())
}

fn parse_path(v: &str) -> Option<PathBuf> {
    if v.is_empty() || v == "none" {
        None
    } else {
        Some(PathBuf::from(v))
    }
}

impl RunConfig {
    /// Parses `raw`; `env_seed` is used when `seed` is not set.
    pub fn from_raw(raw: &RawConfig, env_seed: Option<&str>) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut warmup = DEFAULT_GAMMA_WARMUP;
        let mut eta_text: Option<String> = None;
        let mut gamma: Option<f64> = None;
        let mut seed_set = false;

        for (k, v) in &raw.entries {
            let (k, v) = (k.as_str(), v.as_str());
            match k {
                "data" => c.data = if v == "none" || v.is_empty() { None } else { Some(DataSource::parse(v)?) },
                "format" => c.format = parse_opt(k, v)?,
                "task" => c.task = parse_val(k, v)?,
                "target_column" => c.target_column = parse_val(k, v)?,
                "dim" => c.dim = parse_opt(k, v)?,
                "classes" => c.classes = parse_opt(k, v)?,
                "test_data" => c.test_data = parse_path(v),
                "test_fraction" => c.test_fraction = parse_val(k, v)?,
                "scale" => c.scale = parse_bool(k, v)?,
                "synthetic_n" => c.synthetic_n = parse_val(k, v)?,
                "synthetic_d" => c.synthetic_d = parse_val(k, v)?,
                "synthetic_noise" => c.synthetic_noise = parse_val(k, v)?,
                "loss" => c.loss = parse_val(k, v)?,
                "reg_lambda" => c.reg_lambda = parse_val(k, v)?,
                "domain_bound" => c.domain_bound = parse_opt(k, v)?,
                "learner" => c.learner = parse_val(k, v)?,
                "learner_step" => c.learner_step = parse_val(k, v)?,
                "learner_schedule" => c.learner_schedule = parse_val(k, v)?,
                "learner_radius" => c.learner_radius = parse_opt(k, v)?,
                "intercept" => c.intercept = parse_bool(k, v)?,
                "ftrl_reg" => c.ftrl_reg = parse_val(k, v)?,
                "tree_depth" => c.tree_depth = parse_val(k, v)?,
                "tree_min_leaf" => c.tree_min_leaf = parse_val(k, v)?,
                "tree_buffer" => c.tree_buffer = parse_val(k, v)?,
                "tree_refit" => c.tree_refit = parse_val(k, v)?,
                "algorithm" | "algo" => c.algorithm = parse_val(k, v)?,
                "n" => c.n = parse_val(k, v)?,
                "eta" => eta_text = Some(v.to_string()),
                "gamma" => gamma = parse_opt(k, v)?,
                "warmup" => warmup = parse_val(k, v)?,
                "lambda" => c.lambda = parse_opt(k, v)?,
                "radius" => c.radius = parse_val(k, v)?,
                "avg_denominator" => c.avg_denominator = parse_val(k, v)?,
                "snapshots" => c.snapshots = parse_val(k, v)?,
                "edge_window" => c.edge_window = parse_val(k, v)?,
                "gb_tolerance" => c.gb_tolerance = parse_val(k, v)?,
                "gb_max_passes" => c.gb_max_passes = parse_val(k, v)?,
                "gb_eta" => c.gb_eta = parse_opt(k, v)?,
                "passes" => c.passes = parse_val(k, v)?,
                "shuffle" => c.shuffle = parse_bool(k, v)?,
                "max_steps" => c.max_steps = parse_opt(k, v)?,
                "seed" => {
                    c.seed = parse_val(k, v)?;
                    seed_set = true;
                }
                "comparator" => c.comparator = parse_val(k, v)?,
                "comparator_depth" => c.comparator_depth = parse_val(k, v)?,
                "predictor" => c.predictor = parse_opt(k, v)?,
                "eval_split" => c.eval_split = parse_val(k, v)?,
                "model" => c.model = parse_path(v),
                "metrics" => c.metrics = parse_path(v),
                "output" => c.output = parse_path(v),
                "sweep_axis" => c.sweep_axis = parse_val(k, v)?,
                "sweep_ns" => c.sweep_ns = parse_list(k, v)?,
                "checkpoints" => c.checkpoints = parse_list(k, v)?,
                "jobs" => c.jobs = parse_val(k, v)?,
                "ce_steps" => c.ce_steps = parse_val(k, v)?,
                "ce_n" => c.ce_n = parse_val(k, v)?,
                "ce_y0" => {
                    let y: Vec<f64> = parse_list(k, v)?;
                    if y.len() != 2 {
                        return Err(Error::Config(format!("`ce_y0` needs two values, got `{v}`")));
                    }
                    c.ce_y0 = [y[0], y[1]];
                }
                "ce_eta" => c.ce_eta = parse_val(k, v)?,
                "ce_lambda" => c.ce_lambda = parse_opt(k, v)?,
                "ce_radius" => c.ce_radius = parse_val(k, v)?,
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }

        c.eta = match (eta_text.as_deref(), gamma) {
            (Some(e), Some(_)) if e != "auto" => {
                return Err(Error::Config(format!("set either `eta = {e}` or `gamma`, not both")))
            }
            (_, Some(g)) => EtaChoice::Gamma(g),
            (None | Some("auto"), None) => EtaChoice::Auto { warmup },
            (Some(e), None) => EtaChoice::Fixed(parse_val("eta", e)?),
        };
        if !seed_set {
            if let Some(s) = env_seed {
                c.seed = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{SEED_ENV} = `{s}` is not an integer")))?;
            }
        }
        Ok(c)
    }

    /// Reads a config file (when given), applies overrides and the seed
    /// environment variable.
    pub fn resolve(file: Option<&Path>, overrides: RawConfig) -> Result<Self> {
        let mut raw = match file {
            Some(p) => RawConfig::load(p)?,
            None => RawConfig::new(),
        };
        raw.merge(overrides);
        let env = std::env::var(SEED_ENV).ok();
        Self::from_raw(&raw, env.as_deref())
    }

    pub fn loss_spec(&self, outputs: usize) -> Result<LossSpec> {
        let mut spec = LossSpec::new(self.loss, outputs)
            .map_err(|e| Error::Config(e.to_string()))?
            .with_reg(self.reg_lambda)
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(b) = self.domain_bound {
            spec = spec.with_domain_bound(b).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(spec)
    }

    pub fn learner_config(&self) -> LearnerConfig {
        match self.learner {
            LearnerKind::LinearOgd => LearnerConfig::LinearOgd {
                step: self.learner_step,
                schedule: self.learner_schedule,
                radius: self.learner_radius,
                intercept: self.intercept,
            },
            LearnerKind::LinearFtrl => LearnerConfig::LinearFtrl {
                reg: self.ftrl_reg,
                intercept: self.intercept,
            },
            LearnerKind::Tree => LearnerConfig::Tree {
                params: TreeParams {
                    max_depth: self.tree_depth,
                    min_leaf: self.tree_min_leaf,
                },
                buffer: self.tree_buffer,
                refit_every: self.tree_refit,
            },
        }
    }

    /// The training specification for a dataset with `outputs` outputs.
    pub fn run_spec(&self, outputs: usize) -> Result<RunSpec> {
        let mut spec = RunSpec::new(self.algorithm, self.loss_spec(outputs)?, self.learner_config(), self.n);
        spec.eta = self.eta;
        spec.lambda_sc = self.lambda;
        spec.radius = self.radius;
        spec.avg_denominator = self.avg_denominator;
        spec.snapshots = self.snapshots;
        spec.edge_window = self.edge_window;
        spec.gb = GbCriteria {
            tolerance: self.gb_tolerance,
            max_passes: self.gb_max_passes,
        };
        spec.gb_eta = self.gb_eta;
        spec.passes = self.passes;
        spec.shuffle = self.shuffle;
        spec.max_steps = self.max_steps;
        spec.seed = self.seed;
        spec.validate()?;
        Ok(spec)
    }

    /// Checks that do not need the dataset.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} must lie in (0, 1)", self.test_fraction));
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.passes == 0 {
            return bad("passes must be at least 1".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        if self.algorithm == Algorithm::SgbSmooth && !self.loss.is_smooth() {
            return bad(format!("{} is non-smooth; use sgb_residual", self.loss));
        }
        if let EtaChoice::Gamma(g) = self.eta {
            if !(g > 0.0 && g <= 1.0) {
                return bad(format!("gamma {g} must lie in (0, 1]"));
            }
        }
        if let EtaChoice::Fixed(e) = self.eta {
            if !(e >= 0.0 && e.is_finite()) {
                return bad(format!("eta {e} must be >= 0"));
            }
        }
        if !(self.radius > 0.0) {
            return bad(format!("radius {} must be positive", self.radius));
        }
        if let Some(p) = self.predictor {
            let ok = matches!(
                (self.algorithm, p),
                (Algorithm::SgbSmooth, TestPredictor::Average | TestPredictor::Final)
                    | (Algorithm::SgbResidual, TestPredictor::Final | TestPredictor::Full)
                    | (Algorithm::BatchGb, TestPredictor::Final)
            );
            if !ok {
                return bad(format!(
                    "predictor `{}` is not available for {}",
                    p.name(),
                    self.algorithm.name()
                ));
            }
        }
        Ok(())
    }

    /// Every effective setting as `key = value` lines, sorted by key.
    pub fn to_text(&self) -> String {
        let mut m: BTreeMap<&str, String> = BTreeMap::new();
        m.insert("data", self.data.as_ref().map_or_else(|| "none".into(), DataSource::text));
        m.insert("format", opt_text(&self.format.map(|f| match f {
            DataFormat::Libsvm => "libsvm",
            DataFormat::Csv => "csv",
        })));
        m.insert("task", task_name(self.task).into());
        m.insert("target_column", self.target_column.to_string());
        m.insert("dim", opt_text(&self.dim));
        m.insert("classes", opt_text(&self.classes));
        m.insert("test_data", path_text(&self.test_data));
        m.insert("test_fraction", self.test_fraction.to_string());
        m.insert("scale", self.scale.to_string());
        m.insert("synthetic_n", self.synthetic_n.to_string());
        m.insert("synthetic_d", self.synthetic_d.to_string());
        m.insert("synthetic_noise", self.synthetic_noise.to_string());
        m.insert("loss", self.loss.name().into());
        m.insert("reg_lambda", self.reg_lambda.to_string());
        m.insert("domain_bound", opt_text(&self.domain_bound));
        m.insert("learner", learner_name(self.learner).into());
        m.insert("learner_step", self.learner_step.to_string());
        m.insert("learner_schedule", schedule_name(self.learner_schedule).into());
        m.insert("learner_radius", opt_text(&self.learner_radius));
        m.insert("intercept", self.intercept.to_string());
        m.insert("ftrl_reg", self.ftrl_reg.to_string());
        m.insert("tree_depth", self.tree_depth.to_string());
        m.insert("tree_min_leaf", self.tree_min_leaf.to_string());
        m.insert("tree_buffer", self.tree_buffer.to_string());
        m.insert("tree_refit", self.tree_refit.to_string());
        m.insert("algorithm", self.algorithm.name().into());
        m.insert("n", self.n.to_string());
        match self.eta {
            EtaChoice::Fixed(e) => {
                m.insert("eta", e.to_string());
            }
            EtaChoice::Gamma(g) => {
                m.insert("gamma", g.to_string());
            }
            EtaChoice::Auto { warmup } => {
                m.insert("eta", "auto".into());
                m.insert("warmup", warmup.to_string());
            }
        }
        m.insert("lambda", opt_text(&self.lambda));
        m.insert("radius", self.radius.to_string());
        m.insert("avg_denominator", self.avg_denominator.name().into());
        m.insert("snapshots", self.snapshots.to_string());
        m.insert("edge_window", self.edge_window.to_string());
        m.insert("gb_tolerance", self.gb_tolerance.to_string());
        m.insert("gb_max_passes", self.gb_max_passes.to_string());
        m.insert("gb_eta", opt_text(&self.gb_eta));
        m.insert("passes", self.passes.to_string());
        m.insert("shuffle", self.shuffle.to_string());
        m.insert("max_steps", opt_text(&self.max_steps));
        m.insert("seed", self.seed.to_string());
        m.insert("comparator", comparator_name(self.comparator).into());
        m.insert("comparator_depth", self.comparator_depth.to_string());
        m.insert("predictor", opt_text(&self.predictor.map(TestPredictor::name)));
        m.insert("eval_split", self.eval_split.name().into());
        m.insert("model", path_text(&self.model));
        m.insert("metrics", path_text(&self.metrics));
        m.insert("output", path_text(&self.output));
        m.insert("sweep_axis", match self.sweep_axis {
            SweepAxis::N => "n".into(),
            SweepAxis::T => "t".into(),
        });
        m.insert("sweep_ns", list_text(&self.sweep_ns));
        m.insert("checkpoints", list_text(&self.checkpoints));
        m.insert("jobs", self.jobs.to_string());
        m.insert("ce_steps", self.ce_steps.to_string());
        m.insert("ce_n", self.ce_n.to_string());
        m.insert("ce_y0", list_text(&self.ce_y0));
        m.insert("ce_eta", self.ce_eta.to_string());
        m.insert("ce_lambda", opt_text(&self.ce_lambda));
        m.insert("ce_radius", self.ce_radius.to_string());
        m.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let mut raw = RawConfig::parse("# run\nloss = square   # inline\n\nn = 3\nseed = 5\n").unwrap();
        let mut flags = RawConfig::new();
        flags.set_pair("n=8").unwrap();
        raw.merge(flags);
        let c = RunConfig::from_raw(&raw, Some("99")).unwrap();
        assert_eq!(c.n, 8);
        assert_eq!(c.seed, 5);
        assert_eq!(c.loss, LossKind::Square);
    }

    #[test]
    fn env_seed_fallback() {
        let c = RunConfig::from_raw(&RawConfig::new(), Some("42")).unwrap();
        assert_eq!(c.seed, 42);
        assert!(RunConfig::from_raw(&RawConfig::new(), Some("x")).is_err());
        assert_eq!(RunConfig::from_raw(&RawConfig::new(), None).unwrap().seed, 0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RawConfig::parse("n 3").is_err());
        assert!(RawConfig::parse("n = 1\nn = 2").is_err());
        let unknown = RawConfig::parse("colour = red").unwrap();
        assert_eq!(RunConfig::from_raw(&unknown, None).unwrap_err().exit_code(), 2);
        let axis = RawConfig::parse("sweep_axis = depth").unwrap();
        assert!(RunConfig::from_raw(&axis, None).is_err());
    }

    #[test]
    fn non_smooth_with_smooth_algorithm() {
        let raw = RawConfig::parse("algorithm = sgb_smooth\nloss = hinge_l2").unwrap();
        let err = RunConfig::from_raw(&raw, None).unwrap().validate().unwrap_err();
        assert_eq!(err.to_string(), "config error: hinge_l2 is non-smooth; use sgb_residual");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn effective_config_round_trips() {
        let raw = RawConfig::parse(
            "data = synthetic:binary\nloss = hinge_l2\nreg_lambda = 0.1\nalgorithm = sgb_residual\n\
             gamma = 0.3\nlambda = 0.2\nsweep_ns = 1,2,16\nce_y0 = 1.5,0.25\nmodel = out/m.bin\n\
             predictor = full\nmax_steps = 1000",
        )
        .unwrap();
        let c = RunConfig::from_raw(&raw, None).unwrap();
        let text = c.to_text();
        let back = RunConfig::from_raw(&RawConfig::parse(&text).unwrap(), Some("7")).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);

        let fixed = RunConfig::from_raw(&RawConfig::parse("eta = 0.1").unwrap(), None).unwrap();
        let back = RunConfig::from_raw(&RawConfig::parse(&fixed.to_text()).unwrap(), None).unwrap();
        assert_eq!(back.eta, EtaChoice::Fixed(0.1));
    }
}

//! Boosting with axis-restricted follow-the-leader learners on the fixed loss
//! `l(y) = 2|y1| + |y2|`, whose minimum 0 is at the origin.
//!
//! While the first coordinate of every partial sum stays positive, each
//! learner sees the target `[2, 1]` and picks `[2, 0]`, so the second
//! coordinate never leaves `b` and the regret grows like `b T`. Large step
//! sizes break that premise: once partial sums cross zero the first-axis
//! targets cancel and learners switch to the second axis.

use std::io::Write;

use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, LearnerModel, WeakLearner};
use crate::losses::Objective;
use crate::sgb_nonsmooth::SgbResidual;
use crate::sgb_smooth::{EtaSetting, SgbSmooth};

use super::sweep::fmt_num;
use super::RegretTracker;

pub const DEFAULT_COUNTEREXAMPLE_ETA: f64 = 0.025;
pub const AXIS_CAP: f64 = 2.0;
/// Steps at which the follow-the-leader choice is always checked.
const DENSE_CHECKS: u64 = 64;

/// `l(y) = 2|y1| + |y2|` with the zero subgradient at kinks.
#[derive(Clone, Copy, Debug, Default)]
pub struct WeightedAbs;

impl Objective for WeightedAbs {
    fn outputs(&self) -> usize {
        2
    }

    fn value(&self, y: &[f64]) -> Result<f64> {
        crate::error::check_dim(2, y.len())?;
        Ok(2.0 * y[0].abs() + y[1].abs())
    }

    fn gradient_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        crate::error::check_dim(2, y.len())?;
        crate::error::check_dim(2, out.len())?;
        out[0] = 2.0 * sign(y[0]);
        out[1] = sign(y[1]);
        Ok(())
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleConfig {
    pub steps: u64,
    pub n_learners: usize,
    pub y0: [f64; 2],
    pub eta: f64,
    /// Also run residual projection boosting with this strong-convexity
    /// parameter (the loss has none, so nothing is claimed for it).
    pub residual_lambda: Option<f64>,
    pub residual_radius: f64,
}

impl CounterexampleConfig {
    pub fn new(steps: u64, n_learners: usize, y0: [f64; 2]) -> Self {
        CounterexampleConfig {
            steps,
            n_learners,
            y0,
            eta: DEFAULT_COUNTEREXAMPLE_ETA,
            residual_lambda: None,
            residual_radius: 10.0,
        }
    }
}

/// Observations from the residual projection run.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualObservation {
    pub lambda: f64,
    pub total_regret: f64,
    pub avg_regret: f64,
    pub final_prediction: [f64; 2],
    pub y2_min: f64,
    pub y2_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleReport {
    pub config: CounterexampleConfig,
    /// Final prediction `y^N` at each step.
    pub trajectory: Vec<[f64; 2]>,
    /// Loss of the final prediction at each step.
    pub losses: Vec<f64>,
    /// True if the second coordinate of every partial sum `y^0 .. y^N` equals
    /// `b` exactly at every step.
    pub y2_constant: bool,
    pub max_y2_deviation: f64,
    /// Regret against the fixed prediction at the origin (loss 0).
    pub total_regret: f64,
    pub avg_regret: f64,
    /// `(axis, alpha)` of every learner after the last step.
    pub final_choices: Vec<(usize, f64)>,
    /// Number of (step, learner) follow-the-leader choices checked.
    pub ftl_checks: u64,
    /// First mismatch against the brute-force leader, if any.
    pub ftl_mismatch: Option<String>,
    pub residual: Option<ResidualObservation>,
}

impl CounterexampleReport {
    pub fn ftl_matches(&self) -> bool {
        self.ftl_mismatch.is_none()
    }
}

fn axis_learners(n: usize) -> Result<Vec<WeakLearner>> {
    let cfg = LearnerConfig::Axis { cap: AXIS_CAP };
    (0..n).map(|_| cfg.build(1, 2)).collect()
}

fn axis_choice(l: &WeakLearner) -> (usize, f64) {
    match l.model() {
        LearnerModel::Axis(a) => a.choice(),
        _ => unreachable!("counterexample learners are axis restricted"),
    }
}

/// Accumulated square loss of `alpha * e_axis` over `targets`, summed directly.
pub fn accumulated_square_loss(targets: &[[f64; 2]], axis: usize, alpha: f64) -> f64 {
    targets
        .iter()
        .map(|g| {
            let mut h = [0.0; 2];
            h[axis] = alpha;
            (h[0] - g[0]).powi(2) + (h[1] - g[1]).powi(2)
        })
        .sum()
}

fn clipped_mean(targets: &[[f64; 2]], axis: usize) -> f64 {
    let mean = targets.iter().map(|g| g[axis]).sum::<f64>() / targets.len() as f64;
    mean.clamp(-AXIS_CAP, AXIS_CAP)
}

/// Best `(axis, alpha, loss)` for `targets` by direct evaluation of the
/// accumulated square loss at the clipped mean of each axis.
pub fn brute_force_leader(targets: &[[f64; 2]]) -> (usize, f64, f64) {
    let mut best = (0usize, 0.0, f64::INFINITY);
    for axis in 0..2 {
        let alpha = clipped_mean(targets, axis);
        let loss = accumulated_square_loss(targets, axis, alpha);
        if loss < best.2 {
            best = (axis, alpha, loss);
        }
    }
    best
}

fn is_check_step(t: u64, total: u64) -> bool {
    t <= DENSE_CHECKS || t.is_power_of_two() || t == total
}

pub fn counterexample_run(cfg: &CounterexampleConfig) -> Result<CounterexampleReport> {
    let [a, b] = cfg.y0;
    if !(a > 0.0 && a.is_finite() && b >= 0.0 && b.is_finite()) {
        return Err(Error::Config(format!("y0 = ({a}, {b}) needs a > 0 and b >= 0")));
    }
    if cfg.n_learners == 0 || cfg.steps == 0 {
        return Err(Error::Config("counterexample needs n >= 1 and steps >= 1".into()));
    }
    let loss = WeightedAbs;
    let x = [0.0];
    let mut model = SgbSmooth::with_options(
        axis_learners(cfg.n_learners)?,
        EtaSetting::Fixed(cfg.eta),
        cfg.y0.to_vec(),
        1,
        crate::learners::edge::DEFAULT_EDGE_WINDOW,
    )?;
    let mut regret = RegretTracker::new();
    let mut trajectory = Vec::with_capacity(cfg.steps as usize);
    let mut losses = Vec::with_capacity(cfg.steps as usize);
    let mut histories: Vec<Vec<[f64; 2]>> = vec![Vec::with_capacity(cfg.steps as usize); cfg.n_learners];
    let mut y2_constant = true;
    let mut max_dev: f64 = 0.0;
    let mut ftl_checks = 0;
    let mut ftl_mismatch = None;

    for t in 1..=cfg.steps {
        let step = model.step(&x, &loss)?;
        for y in &step.partial_sums {
            y2_constant &= y[1] == b;
            max_dev = max_dev.max((y[1] - b).abs());
        }
        for (hist, g) in histories.iter_mut().zip(&step.gradients) {
            hist.push([g[0], g[1]]);
        }
        regret.push(step.loss, 0.0);
        trajectory.push([step.prediction[0], step.prediction[1]]);
        losses.push(step.loss);

        if is_check_step(t, cfg.steps) {
            for (i, l) in model.learners().iter().enumerate() {
                let (axis, alpha) = axis_choice(l);
                let hist = &histories[i];
                let (bf_axis, bf_alpha, best) = brute_force_leader(hist);
                let own = accumulated_square_loss(hist, axis, alpha);
                // exact ties between the axes may be broken either way
                let optimal = own <= best + 1e-9 * (1.0 + best);
                let consistent = (alpha - clipped_mean(hist, axis)).abs() <= 1e-9;
                ftl_checks += 1;
                if ftl_mismatch.is_none() && !(optimal && consistent) {
                    ftl_mismatch = Some(format!(
                        "t = {t}, learner {}: chose ({axis}, {alpha}), leader is ({bf_axis}, {bf_alpha})",
                        i + 1
                    ));
                }
            }
        }
    }

    let residual = match cfg.residual_lambda {
        Some(lambda) => Some(residual_observation(cfg, lambda)?),
        None => None,
    };

    Ok(CounterexampleReport {
        config: cfg.clone(),
        trajectory,
        losses,
        y2_constant,
        max_y2_deviation: max_dev,
        total_regret: regret.total_regret(),
        avg_regret: regret.avg_regret(),
        final_choices: model.learners().iter().map(axis_choice).collect(),
        ftl_checks,
        ftl_mismatch,
        residual,
    })
}

fn residual_observation(cfg: &CounterexampleConfig, lambda: f64) -> Result<ResidualObservation> {
    let mut model = SgbResidual::new(axis_learners(cfg.n_learners)?, lambda, cfg.residual_radius, cfg.y0.to_vec())?;
    let mut regret = RegretTracker::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut last = [0.0; 2];
    for _ in 0..cfg.steps {
        let step = model.step(&[0.0], &WeightedAbs)?;
        regret.push(step.loss, 0.0);
        lo = lo.min(step.prediction[1]);
        hi = hi.max(step.prediction[1]);
        last = [step.prediction[0], step.prediction[1]];
    }
    Ok(ResidualObservation {
        lambda,
        total_regret: regret.total_regret(),
        avg_regret: regret.avg_regret(),
        final_prediction: last,
        y2_min: lo,
        y2_max: hi,
    })
}

/// Trajectory CSV: `t, y1, y2, loss`.
pub fn write_counterexample<W: Write>(report: &CounterexampleReport, out: W) -> Result<()> {
    let err = |e: csv::Error| Error::Output(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "y1", "y2", "loss"]).map_err(err)?;
    for (t, (y, l)) in report.trajectory.iter().zip(&report.losses).enumerate() {
        w.write_record([(t + 1).to_string(), fmt_num(y[0]), fmt_num(y[1]), fmt_num(*l)])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Output(format!("csv flush: {e}")))
}

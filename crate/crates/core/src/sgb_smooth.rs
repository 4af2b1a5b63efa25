//! Streaming gradient boosting for strongly convex, smooth losses.
//!
//! Each step runs a forward pass over the pre-update hypotheses,
//! `y^i = y^{i-1} - eta * h_i(x)`, predicts `y^N`, and then trains learner
//! `i` on the square loss towards the gradient of the loss at `y^{i-1}`.
//! All targets come from the forward pass, so the updates are independent
//! of each other.

use crate::error::{Error, Result};
use crate::learners::{EdgeTracker, Hypothesis, HypothesisAverage, WeakLearner, DEFAULT_SNAPSHOTS};
use crate::learners::edge::DEFAULT_EDGE_WINDOW;
use crate::losses::Objective;
use crate::metrics::CostCounter;

/// Partial sums above this norm abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

pub const DEFAULT_GAMMA_WARMUP: usize = 500;

/// Provisional edge used for the step size while the edge is being
/// estimated during warmup.
pub const PROVISIONAL_GAMMA: f64 = 0.5;

/// Lower clamp applied to a measured edge before it sets the step size.
pub const MIN_GAMMA: f64 = 0.05;

/// Step size `gamma / (beta (8 - 4 gamma))` that minimizes the per-learner
/// contraction factor.
pub fn default_eta(gamma: f64, beta: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!("gamma {gamma} outside (0, 1]")));
    }
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("beta {beta} must be positive")));
    }
    Ok(gamma / (beta * (8.0 - 4.0 * gamma)))
}

/// Per-learner contraction `1 - eta gamma lambda + beta eta^2 lambda (4 - 2 gamma)`
/// of the stage regret.
pub fn contraction(gamma: f64, lambda: f64, beta: f64, eta: f64) -> f64 {
    1.0 - eta * gamma * lambda + beta * eta * eta * lambda * (4.0 - 2.0 * gamma)
}

/// Asymptotic average-regret bound `2B (1 - gamma^2 lambda / (16 beta))^N`.
pub fn smooth_bound(loss_bound: f64, gamma: f64, lambda: f64, beta: f64, n: usize) -> f64 {
    2.0 * loss_bound * (1.0 - gamma * gamma * lambda / (16.0 * beta)).powi(n as i32)
}

/// Per-learner accumulators used to check the edge-based energy bounds.
#[derive(Clone, Debug)]
pub struct StageStats {
    /// `sum_t ||h_i(x_t)||^2`
    pub pred_sq: f64,
    /// `sum_t ||grad_i^t||^2`
    pub grad_sq: f64,
    /// `sum_t ||residual_i^t||^2` (residual boosting only)
    pub residual_sq: f64,
    /// Edge on learner i's own `(target, prediction)` stream.
    pub edge: EdgeTracker,
}

impl StageStats {
    pub(crate) fn new(window: usize) -> Self {
        StageStats {
            pred_sq: 0.0,
            grad_sq: 0.0,
            residual_sq: 0.0,
            edge: EdgeTracker::new(window),
        }
    }
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaSetting {
    Fixed(f64),
    /// Estimate the edge from learner 1 over `warmup` steps, then freeze
    /// `eta = default_eta(gamma_hat, beta)`.
    Auto { beta: f64, warmup: usize },
}

/// Everything a single step computed, for logging and checks.
#[derive(Clone, Debug)]
pub struct SmoothStep {
    pub prediction: Vec<f64>,
    pub loss: f64,
    /// `y^0 .. y^N`
    pub partial_sums: Vec<Vec<f64>>,
    /// `grad l_t(y^{i-1})` for `i = 1..N`
    pub gradients: Vec<Vec<f64>>,
    /// Pre-update `h_i(x_t)`.
    pub weak_predictions: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct SgbSmooth {
    learners: Vec<WeakLearner>,
    eta: f64,
    eta_setting: EtaSetting,
    gamma_estimate: Option<f64>,
    y0: Vec<f64>,
    averages: Vec<HypothesisAverage>,
    stats: Vec<StageStats>,
    t: u64,
}

impl SgbSmooth {
    pub fn new(learners: Vec<WeakLearner>, eta: EtaSetting, y0: Vec<f64>) -> Result<Self> {
        Self::with_options(learners, eta, y0, DEFAULT_SNAPSHOTS, DEFAULT_EDGE_WINDOW)
    }

    pub fn with_options(
        learners: Vec<WeakLearner>,
        eta_setting: EtaSetting,
        y0: Vec<f64>,
        snapshots: usize,
        edge_window: usize,
    ) -> Result<Self> {
        if learners.is_empty() {
            return Err(Error::invalid("need at least one weak learner"));
        }
        for l in &learners {
            crate::error::check_dim(y0.len(), l.outputs())?;
        }
        let (eta, gamma_estimate) = match eta_setting {
            EtaSetting::Fixed(eta) => {
                if !(eta >= 0.0 && eta.is_finite()) {
                    return Err(Error::invalid(format!("eta {eta} must be >= 0")));
                }
                (eta, None)
            }
            EtaSetting::Auto { beta, warmup } => {
                let provisional = default_eta(PROVISIONAL_GAMMA, beta)?;
                if warmup == 0 {
                    return Err(Error::invalid("gamma warmup must be positive"));
                }
                (provisional, None)
            }
        };
        let averages = learners.iter().map(|l| l.new_average(snapshots)).collect();
        let stats = learners.iter().map(|_| StageStats::new(edge_window)).collect();
        Ok(SgbSmooth {
            learners,
            eta,
            eta_setting,
            gamma_estimate,
            y0,
            averages,
            stats,
            t: 0,
        })
    }

    pub fn n_learners(&self) -> usize {
        self.learners.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Edge measured during warmup (auto step size only).
    pub fn gamma_estimate(&self) -> Option<f64> {
        self.gamma_estimate
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn learners(&self) -> &[WeakLearner] {
        &self.learners
    }

    pub fn stats(&self) -> &[StageStats] {
        &self.stats
    }

    pub fn costs(&self) -> CostCounter {
        self.learners.iter().map(WeakLearner::costs).sum()
    }

    /// One predict-then-update round on `(x_t, l_t)`.
    pub fn step(&mut self, x: &[f64], loss: &impl Objective) -> Result<SmoothStep> {
        let m = self.y0.len();
        crate::error::check_dim(m, loss.outputs())?;
        let n = self.learners.len();
        let t = self.t + 1;

        let mut partial_sums = Vec::with_capacity(n + 1);
        let mut weak_predictions = Vec::with_capacity(n);
        partial_sums.push(self.y0.clone());
        for (i, learner) in self.learners.iter_mut().enumerate() {
            let h = learner.predict(x)?;
            let prev = &partial_sums[i];
            let next: Vec<f64> = prev.iter().zip(&h).map(|(y, h)| y - self.eta * h).collect();
            let norm = norm_sq(&next).sqrt();
            if !(norm <= DIVERGENCE_LIMIT) {
                return Err(Error::numeric(format!(
                    "partial sum {} diverged at step {t}: ||y|| = {norm:e} (eta = {})",
                    i + 1,
                    self.eta
                )));
            }
            weak_predictions.push(h);
            partial_sums.push(next);
        }
        let prediction = partial_sums[n].clone();
        let value = loss.value(&prediction)?;

        let mut gradients = Vec::with_capacity(n);
        for i in 0..n {
            let mut g = vec![0.0; m];
            loss.gradient_into(&partial_sums[i], &mut g)?;
            if !g.iter().all(|v| v.is_finite()) {
                return Err(Error::numeric(format!(
                    "non-finite gradient for learner {} at step {t}",
                    i + 1
                )));
            }
            gradients.push(g);
        }

        for i in 0..n {
            self.learners[i].accumulate(&mut self.averages[i]);
            let s = &mut self.stats[i];
            s.pred_sq += norm_sq(&weak_predictions[i]);
            s.grad_sq += norm_sq(&gradients[i]);
            s.edge.push(&gradients[i], &weak_predictions[i]);
            self.learners[i].update(x, &gradients[i])?;
        }
        self.t = t;

        if let EtaSetting::Auto { beta, warmup } = self.eta_setting {
            if self.gamma_estimate.is_none() && self.t >= warmup as u64 {
                let gamma = match self.stats[0].edge.report() {
                    Ok(r) => r.gamma_hat.clamp(MIN_GAMMA, 1.0),
                    Err(_) => 1.0,
                };
                self.gamma_estimate = Some(gamma);
                self.eta = default_eta(gamma, beta)?;
            }
        }

        Ok(SmoothStep {
            prediction,
            loss: value,
            partial_sums,
            gradients,
            weak_predictions,
        })
    }

    /// `y0 - eta * sum_i h_i(x)` with the current hypotheses.
    pub fn predict_online(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.y0.clone();
        let mut h = vec![0.0; y.len()];
        for l in &self.learners {
            l.peek_into(x, &mut h)?;
            y.iter_mut().zip(&h).for_each(|(a, b)| *a -= self.eta * b);
        }
        Ok(y)
    }

    /// The time-averaged hypotheses `h_bar_i`.
    pub fn averaged_hypotheses(&self) -> Result<Vec<Hypothesis>> {
        self.averages
            .iter()
            .map(|a| a.mean().ok_or_else(|| Error::invalid("no steps taken yet")))
            .collect()
    }

    pub fn final_hypotheses(&self) -> Vec<Hypothesis> {
        self.learners.iter().map(WeakLearner::hypothesis).collect()
    }

    /// `y0 - eta * sum_i h_bar_i(x)`.
    pub fn predict_average(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.t == 0 {
            return Err(Error::invalid("predict_average before any step"));
        }
        crate::error::check_dim(self.learners[0].inputs(), x.len())?;
        let hyps = self.averaged_hypotheses()?;
        Ok(additive_predict(&self.y0, self.eta, &hyps, x))
    }
}

/// `y0 - eta * sum_i h_i(x)` over frozen hypotheses.
pub fn additive_predict(y0: &[f64], eta: f64, hyps: &[Hypothesis], x: &[f64]) -> Vec<f64> {
    let mut y = y0.to_vec();
    let mut h = vec![0.0; y.len()];
    for hyp in hyps {
        hyp.predict_into(x, &mut h);
        y.iter_mut().zip(&h).for_each(|(a, b)| *a -= eta * b);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Supervision;
    use crate::learners::{LearnerConfig, LearnerModel, AxisRestricted};
    use crate::losses::{LossKind, LossSpec};

    fn ogd(n: usize, d: usize, step: f64) -> Vec<WeakLearner> {
        (0..n).map(|_| LearnerConfig::linear_ogd(step).build(d, 1).unwrap()).collect()
    }

    #[test]
    fn default_eta_values() {
        assert_eq!(default_eta(1.0, 1.0).unwrap(), 0.25);
        assert!((default_eta(0.5, 1.0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!((default_eta(0.5, 0.25).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(default_eta(0.0, 1.0).is_err());
        assert!(default_eta(1.5, 1.0).is_err());
    }

    #[test]
    fn smooth_bound_values() {
        assert_eq!(smooth_bound(3.0, 0.5, 1.0, 2.0, 0), 6.0);
        assert!((smooth_bound(1.0, 1.0, 1.0, 1.0, 1) - 1.875).abs() < 1e-15);
    }

    #[test]
    fn contraction_at_default_eta_is_at_least_seven_eighths() {
        for &g in &[0.05, 0.3, 0.5, 0.9, 1.0] {
            for &(l, b) in &[(1.0, 1.0), (0.1, 0.25), (2.0, 2.0), (0.5, 3.0)] {
                let eta = default_eta(g, b).unwrap();
                let c = contraction(g, l, b, eta);
                let closed = 1.0 - g * g * l / (b * (16.0 - 8.0 * g));
                assert!((c - closed).abs() < 1e-12);
                assert!(c >= 7.0 / 8.0 - 1e-12);
                assert!(c <= 1.0 - g * g * l / (16.0 * b) + 1e-12);
            }
        }
    }

    #[test]
    fn first_step_targets_gradient_at_y0() {
        let mut model = SgbSmooth::new(ogd(1, 1, 0.1), EtaSetting::Fixed(0.5), vec![0.0]).unwrap();
        let spec = LossSpec::new(LossKind::Square, 1).unwrap();
        let z = Supervision::Target(vec![1.0]);
        let out = model.step(&[1.0], &spec.at(&z).unwrap()).unwrap();
        assert_eq!(out.prediction, vec![0.0]);
        assert_eq!(out.gradients, vec![vec![-2.0]]);
        // the learner moved towards -2
        assert!(model.learners()[0].peek(&[1.0]).unwrap()[0] < 0.0);
    }

    #[test]
    fn zero_eta_keeps_y0() {
        let mut model = SgbSmooth::new(ogd(3, 1, 0.1), EtaSetting::Fixed(0.0), vec![0.25]).unwrap();
        let spec = LossSpec::new(LossKind::Square, 1).unwrap();
        for t in 0..20 {
            let z = Supervision::Target(vec![t as f64 * 0.1]);
            let out = model.step(&[1.0], &spec.at(&z).unwrap()).unwrap();
            assert_eq!(out.prediction, vec![0.25]);
            for g in &out.gradients {
                assert!((g[0] - 2.0 * (0.25 - t as f64 * 0.1)).abs() < 1e-15);
            }
        }
        assert!(model.learners()[2].peek(&[1.0]).unwrap()[0] != 0.0);
    }

    #[test]
    fn predict_online_linear_combination() {
        let learners = vec![
            WeakLearner::from_model(LearnerModel::Axis(AxisRestricted::with_hypothesis(1, 5.0, 0, 1.0)), 2),
            WeakLearner::from_model(LearnerModel::Axis(AxisRestricted::with_hypothesis(1, 5.0, 0, 2.0)), 2),
        ];
        let model = SgbSmooth::new(learners, EtaSetting::Fixed(0.1), vec![0.0, 0.0]).unwrap();
        let y = model.predict_online(&[0.0]).unwrap();
        assert!((y[0] + 0.3).abs() < 1e-15);
        assert_eq!(y[1], 0.0);
        assert!(model.predict_average(&[0.0]).is_err());
    }

    #[test]
    fn average_of_one_step_equals_online_before_update() {
        let mut model = SgbSmooth::new(ogd(2, 2, 0.1), EtaSetting::Fixed(0.3), vec![0.0]).unwrap();
        let spec = LossSpec::new(LossKind::Square, 1).unwrap();
        let z = Supervision::Target(vec![1.0]);
        let out = model.step(&[1.0, 2.0], &spec.at(&z).unwrap()).unwrap();
        // h^1 is the zero hypothesis, so the average after T = 1 is zero
        let avg = model.predict_average(&[1.0, 2.0]).unwrap();
        assert_eq!(avg, out.prediction);
    }

    #[test]
    fn divergence_aborts() {
        let mut model = SgbSmooth::new(ogd(1, 1, 100.0), EtaSetting::Fixed(1e3), vec![0.0]).unwrap();
        let spec = LossSpec::new(LossKind::Square, 1).unwrap();
        let mut failed = false;
        for t in 0..50 {
            let z = Supervision::Target(vec![1.0 + t as f64]);
            match model.step(&[10.0], &spec.at(&z).unwrap()) {
                Ok(_) => {}
                Err(e) => {
                    assert_eq!(e.exit_code(), 3);
                    failed = true;
                    break;
                }
            }
        }
        assert!(failed);
    }

    #[test]
    fn auto_eta_freezes_after_warmup() {
        let beta = 2.0;
        let mut model = SgbSmooth::new(
            ogd(2, 1, 0.1),
            EtaSetting::Auto { beta, warmup: 10 },
            vec![0.0],
        )
        .unwrap();
        assert_eq!(model.eta(), default_eta(PROVISIONAL_GAMMA, beta).unwrap());
        let spec = LossSpec::new(LossKind::Square, 1).unwrap();
        for t in 0..30 {
            let z = Supervision::Target(vec![(t % 3) as f64]);
            model.step(&[1.0], &spec.at(&z).unwrap()).unwrap();
        }
        let g = model.gamma_estimate().unwrap();
        assert!((MIN_GAMMA..=1.0).contains(&g));
        assert_eq!(model.eta(), default_eta(g, beta).unwrap());
    }
}

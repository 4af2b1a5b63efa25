//! Residual-projection boosting for strongly convex, possibly non-smooth
//! losses, with its test-time procedures.
//!
//! Learner `i` uses step `eta_i = 1 / (lambda i)` and the partial sums are
//! projected onto the ball `||y|| <= D`. Each learner is trained on the
//! subgradient at the previous partial sum plus the residual the earlier
//! learners failed to fit: `Delta_i = Delta_{i-1} + grad_i - h_i(x)`.

use crate::error::{check_dim, Error, Result};
use crate::learners::edge::DEFAULT_EDGE_WINDOW;
use crate::learners::{Hypothesis, Thinned, WeakLearner, DEFAULT_SNAPSHOTS};
use crate::losses::Objective;
use crate::metrics::CostCounter;
use crate::sgb_smooth::{norm_sq, StageStats, DIVERGENCE_LIMIT};

/// Euclidean projection onto `{ y : ||y|| <= radius }`, in place.
pub fn project_in_place(y: &mut [f64], radius: f64) {
    let norm = norm_sq(y).sqrt();
    if norm > radius {
        let s = radius / norm;
        y.iter_mut().for_each(|v| *v *= s);
    }
}

pub fn project(y: &[f64], radius: f64) -> Vec<f64> {
    let mut out = y.to_vec();
    project_in_place(&mut out, radius);
    out
}

/// Divisor applied to the sum of the `N + 1` partial sums `y^0 .. y^N`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AvgDenominator {
    /// `1/N`, as the algorithm is written.
    #[default]
    N,
    /// `1/(N + 1)`, a proper mean.
    NPlus1,
}

impl std::str::FromStr for AvgDenominator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(AvgDenominator::N),
            "n_plus_1" => Ok(AvgDenominator::NPlus1),
            other => Err(Error::Config(format!("unknown avg_denominator `{other}`"))),
        }
    }
}

impl AvgDenominator {
    pub fn name(self) -> &'static str {
        match self {
            AvgDenominator::N => "n",
            AvgDenominator::NPlus1 => "n_plus_1",
        }
    }

    fn divisor(self, n: usize) -> f64 {
        match self {
            AvgDenominator::N => n as f64,
            AvgDenominator::NPlus1 => (n + 1) as f64,
        }
    }
}

/// Step size of learner `i` (1-based).
pub fn eta_at(lambda: f64, i: usize) -> f64 {
    1.0 / (lambda * i as f64)
}

/// Combination rule shared by training, final-predictor and full tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualCombiner {
    pub lambda: f64,
    pub radius: f64,
    pub denominator: AvgDenominator,
}

impl ResidualCombiner {
    /// Runs the projected forward pass, where `h(i, out)` writes learner
    /// `i`'s prediction; returns the partial sums `y^0 .. y^N`.
    pub fn forward(
        &self,
        y0: &[f64],
        n: usize,
        mut h: impl FnMut(usize, &mut [f64]) -> Result<()>,
    ) -> Result<Vec<Vec<f64>>> {
        let mut sums = Vec::with_capacity(n + 1);
        sums.push(project(y0, self.radius));
        let mut buf = vec![0.0; y0.len()];
        for i in 0..n {
            h(i, &mut buf)?;
            let eta = eta_at(self.lambda, i + 1);
            let mut next: Vec<f64> = sums[i].iter().zip(&buf).map(|(y, h)| y - eta * h).collect();
            project_in_place(&mut next, self.radius);
            if !next.iter().all(|v| v.is_finite()) {
                return Err(Error::numeric(format!("non-finite partial sum {}", i + 1)));
            }
            sums.push(next);
        }
        Ok(sums)
    }

    /// `(1/divisor) sum_{i=0}^N y^i`.
    pub fn combine(&self, sums: &[Vec<f64>]) -> Vec<f64> {
        let n = sums.len() - 1;
        let d = self.denominator.divisor(n);
        let mut y = vec![0.0; sums[0].len()];
        for s in sums {
            y.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
        y.iter_mut().for_each(|a| *a /= d);
        y
    }

    pub fn predict(&self, y0: &[f64], hyps: &[Hypothesis], x: &[f64]) -> Result<Vec<f64>> {
        let sums = self.forward(y0, hyps.len(), |i, out| {
            hyps[i].predict_into(x, out);
            Ok(())
        })?;
        Ok(self.combine(&sums))
    }
}

/// Everything a single residual step computed.
#[derive(Clone, Debug)]
pub struct ResidualStep {
    pub prediction: Vec<f64>,
    pub loss: f64,
    /// Projected `y^0 .. y^N`.
    pub partial_sums: Vec<Vec<f64>>,
    /// Subgradient at `y^{i-1}` for `i = 1..N`.
    pub gradients: Vec<Vec<f64>>,
    /// Pre-update `h_i(x_t)`.
    pub weak_predictions: Vec<Vec<f64>>,
    /// `Delta_{i-1} + grad_i`, the square-loss target of learner i.
    pub targets: Vec<Vec<f64>>,
    /// `Delta_1 .. Delta_N`.
    pub residuals: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct SgbResidual {
    learners: Vec<WeakLearner>,
    combiner: ResidualCombiner,
    y0: Vec<f64>,
    snapshots: Option<Thinned<Vec<Hypothesis>>>,
    stats: Vec<StageStats>,
    t: u64,
}

impl SgbResidual {
    pub fn new(learners: Vec<WeakLearner>, lambda: f64, radius: f64, y0: Vec<f64>) -> Result<Self> {
        Self::with_options(
            learners,
            lambda,
            radius,
            y0,
            AvgDenominator::N,
            DEFAULT_SNAPSHOTS,
            DEFAULT_EDGE_WINDOW,
        )
    }

    /// `snapshots = 0` disables storing epoch hypotheses for the full test
    /// procedure.
    pub fn with_options(
        learners: Vec<WeakLearner>,
        lambda: f64,
        radius: f64,
        y0: Vec<f64>,
        denominator: AvgDenominator,
        snapshots: usize,
        edge_window: usize,
    ) -> Result<Self> {
        if learners.is_empty() {
            return Err(Error::invalid("need at least one weak learner"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "strong convexity {lambda} must be positive for residual boosting"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("projection radius {radius} must be positive")));
        }
        for l in &learners {
            check_dim(y0.len(), l.outputs())?;
        }
        let stats = learners.iter().map(|_| StageStats::new(edge_window)).collect();
        Ok(SgbResidual {
            learners,
            combiner: ResidualCombiner {
                lambda,
                radius,
                denominator,
            },
            y0,
            snapshots: (snapshots > 0).then(|| Thinned::new(snapshots)),
            stats,
            t: 0,
        })
    }

    pub fn n_learners(&self) -> usize {
        self.learners.len()
    }

    pub fn combiner(&self) -> ResidualCombiner {
        self.combiner
    }

    pub fn lambda(&self) -> f64 {
        self.combiner.lambda
    }

    pub fn radius(&self) -> f64 {
        self.combiner.radius
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

    /// Stored epoch hypotheses (thinned), oldest first.
    pub fn snapshots(&self) -> &[Vec<Hypothesis>] {
        self.snapshots.as_ref().map_or(&[], |s| s.items())
    }

    pub fn step(&mut self, x: &[f64], loss: &impl Objective) -> Result<ResidualStep> {
        let m = self.y0.len();
        check_dim(m, loss.outputs())?;
        let n = self.learners.len();
        let t = self.t + 1;

        if let Some(s) = &mut self.snapshots {
            let learners = &self.learners;
            s.offer(|| learners.iter().map(WeakLearner::hypothesis).collect());
        }

        let mut weak_predictions = Vec::with_capacity(n);
        let learners = &mut self.learners;
        let partial_sums = self.combiner.forward(&self.y0, n, |i, out| {
            learners[i].predict_into(x, out)?;
            weak_predictions.push(out.to_vec());
            Ok(())
        })?;
        let prediction = self.combiner.combine(&partial_sums);
        if !(norm_sq(&prediction).sqrt() <= DIVERGENCE_LIMIT) {
            return Err(Error::numeric(format!("prediction diverged at step {t}")));
        }
        let value = loss.value(&prediction)?;

        let mut gradients = Vec::with_capacity(n);
        let mut targets = Vec::with_capacity(n);
        let mut residuals = Vec::with_capacity(n);
        let mut delta = vec![0.0; m];
        for i in 0..n {
            let mut g = vec![0.0; m];
            loss.gradient_into(&partial_sums[i], &mut g)?;
            let target: Vec<f64> = delta.iter().zip(&g).map(|(d, g)| d + g).collect();
            if !target.iter().all(|v| v.is_finite()) {
                return Err(Error::numeric(format!(
                    "non-finite target for learner {} at step {t}",
                    i + 1
                )));
            }
            delta = target.iter().zip(&weak_predictions[i]).map(|(a, h)| a - h).collect();
            let s = &mut self.stats[i];
            s.pred_sq += norm_sq(&weak_predictions[i]);
            s.grad_sq += norm_sq(&g);
            s.residual_sq += norm_sq(&delta);
            s.edge.push(&target, &weak_predictions[i]);
            gradients.push(g);
            targets.push(target);
            residuals.push(delta.clone());
        }
        for (i, target) in targets.iter().enumerate() {
            self.learners[i].update(x, target)?;
        }
        self.t = t;

        Ok(ResidualStep {
            prediction,
            loss: value,
            partial_sums,
            gradients,
            weak_predictions,
            targets,
            residuals,
        })
    }

    pub fn final_hypotheses(&self) -> Vec<Hypothesis> {
        self.learners.iter().map(WeakLearner::hypothesis).collect()
    }

    /// One projected forward pass with the current hypotheses.
    pub fn predict_test_final(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.learners[0].inputs(), x.len())?;
        let sums = self
            .combiner
            .forward(&self.y0, self.learners.len(), |i, out| self.learners[i].peek_into(x, out))?;
        Ok(self.combiner.combine(&sums))
    }

    /// Mean over stored epochs of the forward-pass prediction made with
    /// that epoch's hypotheses.
    pub fn predict_test_full(&self, x: &[f64]) -> Result<Vec<f64>> {
        predict_epoch_average(&self.combiner, &self.y0, self.snapshots(), x)
    }
}

/// Average over epochs of `combiner.predict(y0, epoch, x)`.
pub fn predict_epoch_average(
    combiner: &ResidualCombiner,
    y0: &[f64],
    epochs: &[Vec<Hypothesis>],
    x: &[f64],
) -> Result<Vec<f64>> {
    if epochs.is_empty() {
        return Err(Error::invalid("no stored snapshots"));
    }
    let mut y = vec![0.0; y0.len()];
    for hyps in epochs {
        let p = combiner.predict(y0, hyps, x)?;
        y.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
    }
    let k = epochs.len() as f64;
    y.iter_mut().for_each(|a| *a /= k);
    Ok(y)
}

/// Residual growth constant `c = (1 - gamma + sqrt(1 - gamma (1 - R/(T G^2)))) / gamma`
/// together with its cap `2/gamma - 1`.
pub fn c_constant(gamma: f64, excess: f64, t: f64, grad_bound: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!("gamma {gamma} outside (0, 1]")));
    }
    if !(grad_bound > 0.0 && t >= 1.0 && excess >= 0.0) {
        return Err(Error::invalid("c_constant needs G > 0, T >= 1, R >= 0"));
    }
    let ratio = excess / (t * grad_bound * grad_bound);
    if ratio > 1.0 {
        return Err(Error::invalid(format!("R / (T G^2) = {ratio} exceeds 1")));
    }
    let arg = 1.0 - gamma * (1.0 - ratio);
    if arg < 0.0 {
        return Err(Error::numeric(format!("negative square-root argument {arg}")));
    }
    Ok(((1.0 - gamma + arg.sqrt()) / gamma, 2.0 / gamma - 1.0))
}

/// Average-regret bound `4 c^2 G^2 / (lambda N) (1 + ln N + 1/(8N))`.
pub fn nonsmooth_bound(c: f64, grad_bound: f64, lambda: f64, n: usize) -> f64 {
    let nf = n as f64;
    4.0 * c * c * grad_bound * grad_bound / (lambda * nf) * (1.0 + nf.ln() + 1.0 / (8.0 * nf))
}

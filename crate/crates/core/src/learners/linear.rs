//! Linear weak learners on the square loss: projected online gradient
//! descent and follow-the-regularized-leader (online ridge).

use super::hypothesis::Hypothesis;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepSchedule {
    /// `c / sqrt(t)`
    InvSqrt,
    /// `c / t`, for strongly convex square losses.
    Inv,
}

/// `h(x) = W x + b`, updated by one projected gradient step on
/// `||h(x) - target||^2` per sample.
#[derive(Clone, Debug)]
pub struct LinearOgd {
    weights: Vec<f64>,
    bias: Vec<f64>,
    inputs: usize,
    step: f64,
    schedule: StepSchedule,
    radius: Option<f64>,
    intercept: bool,
    t: u64,
}

impl LinearOgd {
    pub fn new(
        inputs: usize,
        outputs: usize,
        step: f64,
        schedule: StepSchedule,
        radius: Option<f64>,
        intercept: bool,
    ) -> Self {
        LinearOgd {
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            inputs,
            step,
            schedule,
            radius,
            intercept,
            t: 0,
        }
    }

    /// Starts from the given parameters instead of zero.
    pub fn with_initial(mut self, weights: Vec<f64>, bias: Vec<f64>) -> Self {
        assert_eq!(weights.len(), self.weights.len(), "weight shape");
        assert_eq!(bias.len(), self.bias.len(), "bias shape");
        self.weights = weights;
        self.bias = bias;
        self
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.inputs;
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.weights[k * d..(k + 1) * d];
            *o = self.bias[k] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    pub fn learn(&mut self, x: &[f64], target: &[f64]) {
        self.t += 1;
        let eta = match self.schedule {
            StepSchedule::InvSqrt => self.step / (self.t as f64).sqrt(),
            StepSchedule::Inv => self.step / self.t as f64,
        };
        let mut pred = vec![0.0; self.bias.len()];
        self.predict_into(x, &mut pred);
        let d = self.inputs;
        for (k, (p, z)) in pred.iter().zip(target).enumerate() {
            let g = 2.0 * (p - z);
            for (w, v) in self.weights[k * d..(k + 1) * d].iter_mut().zip(x) {
                *w -= eta * g * v;
            }
            if self.intercept {
                self.bias[k] -= eta * g;
            }
        }
        if let Some(r) = self.radius {
            let norm = self
                .weights
                .iter()
                .chain(&self.bias)
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            if norm > r {
                let s = r / norm;
                self.weights.iter_mut().chain(self.bias.iter_mut()).for_each(|v| *v *= s);
            }
        }
    }

    pub fn hypothesis(&self) -> Hypothesis {
        Hypothesis::Linear {
            weights: self.weights.clone(),
            bias: self.bias.clone(),
            inputs: self.inputs,
        }
    }
}

/// Follow-the-regularized-leader with an L2 regularizer on the square
/// loss: the leader is the ridge solution on all samples seen so far,
/// maintained by rank-one (Sherman-Morrison) updates.
#[derive(Clone, Debug)]
pub struct LinearFtrl {
    /// `(p x p)` inverse of `reg I + sum x~ x~^T`, `p = d (+1 with intercept)`.
    inverse: Vec<f64>,
    /// `(p x m)` leader coefficients.
    coef: Vec<f64>,
    inputs: usize,
    outputs: usize,
    intercept: bool,
}

impl LinearFtrl {
    pub fn new(inputs: usize, outputs: usize, reg: f64, intercept: bool) -> Self {
        let p = inputs + usize::from(intercept);
        let mut inverse = vec![0.0; p * p];
        for i in 0..p {
            inverse[i * p + i] = 1.0 / reg;
        }
        LinearFtrl {
            inverse,
            coef: vec![0.0; p * outputs],
            inputs,
            outputs,
            intercept,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    fn dim(&self) -> usize {
        self.inputs + usize::from(self.intercept)
    }

    fn augmented(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        if self.intercept {
            a.push(1.0);
        }
        a
    }

    pub fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        let p = self.dim();
        let m = self.outputs;
        out.iter_mut().for_each(|o| *o = 0.0);
        for j in 0..p {
            let v = if j < self.inputs { x[j] } else { 1.0 };
            if v == 0.0 {
                continue;
            }
            for (k, o) in out.iter_mut().enumerate() {
                *o += self.coef[j * m + k] * v;
            }
        }
    }

    pub fn learn(&mut self, x: &[f64], target: &[f64]) {
        let p = self.dim();
        let m = self.outputs;
        let a = self.augmented(x);
        // u = P a, P symmetric
        let u: Vec<f64> = (0..p)
            .map(|i| (0..p).map(|j| self.inverse[i * p + j] * a[j]).sum())
            .collect();
        let denom = 1.0 + a.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>();
        for i in 0..p {
            for j in 0..p {
                self.inverse[i * p + j] -= u[i] * u[j] / denom;
            }
        }
        // gain k = P_new a = u / denom
        let mut pred = vec![0.0; m];
        self.predict_into(x, &mut pred);
        for i in 0..p {
            let gain = u[i] / denom;
            for k in 0..m {
                self.coef[i * m + k] += gain * (target[k] - pred[k]);
            }
        }
    }

    pub fn hypothesis(&self) -> Hypothesis {
        let m = self.outputs;
        let d = self.inputs;
        let mut weights = vec![0.0; m * d];
        for j in 0..d {
            for k in 0..m {
                weights[k * d + j] = self.coef[j * m + k];
            }
        }
        let bias = if self.intercept {
            self.coef[d * m..(d + 1) * m].to_vec()
        } else {
            vec![0.0; m]
        };
        Hypothesis::Linear {
            weights,
            bias,
            inputs: d,
        }
    }
}

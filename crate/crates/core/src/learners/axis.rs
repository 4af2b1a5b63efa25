//! Follow-the-leader over the two-type axis class
//! `{ x -> [a, 0] } ∪ { x -> [0, a] }` with `a` clipped to `[-cap, cap]`.

use super::hypothesis::Hypothesis;

#[derive(Clone, Debug)]
pub struct AxisRestricted {
    inputs: usize,
    cap: f64,
    sum: [f64; 2],
    sum_sq: [f64; 2],
    count: u64,
    axis: usize,
    alpha: f64,
}

impl AxisRestricted {
    pub fn new(inputs: usize, cap: f64) -> Self {
        Self::with_hypothesis(inputs, cap, 0, 0.0)
    }

    /// Starts from a fixed hypothesis `alpha * e_axis`.
    pub fn with_hypothesis(inputs: usize, cap: f64, axis: usize, alpha: f64) -> Self {
        assert!(axis < 2, "axis must be 0 or 1");
        AxisRestricted {
            inputs,
            cap,
            sum: [0.0; 2],
            sum_sq: [0.0; 2],
            count: 0,
            axis,
            alpha: alpha.clamp(-cap, cap),
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Current `(axis, alpha)`; axis 0 is `[a, 0]`, axis 1 is `[0, a]`.
    pub fn choice(&self) -> (usize, f64) {
        (self.axis, self.alpha)
    }

    pub fn predict_into(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = 0.0;
        out[self.axis] = self.alpha;
    }

    /// Accumulated square loss of `alpha * e_axis` over everything seen.
    pub fn accumulated_loss(&self, axis: usize, alpha: f64) -> f64 {
        let other = 1 - axis;
        self.sum_sq[axis] - 2.0 * alpha * self.sum[axis]
            + self.count as f64 * alpha * alpha
            + self.sum_sq[other]
    }

    pub fn learn(&mut self, _x: &[f64], target: &[f64]) {
        for k in 0..2 {
            self.sum[k] += target[k];
            self.sum_sq[k] += target[k] * target[k];
        }
        self.count += 1;
        let n = self.count as f64;
        let mut best = (f64::INFINITY, 0usize, 0.0);
        for axis in 0..2 {
            let alpha = (self.sum[axis] / n).clamp(-self.cap, self.cap);
            let loss = self.accumulated_loss(axis, alpha);
            // strict comparison: ties keep the first axis
            if loss < best.0 {
                best = (loss, axis, alpha);
            }
        }
        self.axis = best.1;
        self.alpha = best.2;
    }

    pub fn hypothesis(&self) -> Hypothesis {
        let mut v = vec![0.0; 2];
        v[self.axis] = self.alpha;
        Hypothesis::Constant(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_hypothesis_prediction() {
        let a = AxisRestricted::with_hypothesis(3, 2.0, 0, 1.5);
        let mut out = [9.0, 9.0];
        a.predict_into(&[4.0, 5.0, 6.0], &mut out);
        assert_eq!(out, [1.5, 0.0]);
    }

    #[test]
    fn ftl_prefers_larger_axis() {
        let mut a = AxisRestricted::new(1, 2.0);
        for _ in 0..5 {
            a.learn(&[0.0], &[2.0, 1.0]);
        }
        assert_eq!(a.choice(), (0, 2.0));
    }

    #[test]
    fn alpha_is_clipped() {
        let mut a = AxisRestricted::new(1, 2.0);
        a.learn(&[0.0], &[0.0, -7.0]);
        assert_eq!(a.choice(), (1, -2.0));
    }
}

//! Frozen predictors and their time averages.

use super::tree::RegressionTree;

/// A frozen hypothesis `h: R^d -> R^m`.
#[derive(Clone, Debug, PartialEq)]
pub enum Hypothesis {
    /// `W x + b` with `W` stored row-major as `m x d`.
    Linear {
        weights: Vec<f64>,
        bias: Vec<f64>,
        inputs: usize,
    },
    Constant(Vec<f64>),
    Tree(RegressionTree),
    /// Pointwise mean of the member predictions.
    Mean(Vec<Hypothesis>),
}

impl Hypothesis {
    pub fn outputs(&self) -> usize {
        match self {
            Hypothesis::Linear { bias, .. } => bias.len(),
            Hypothesis::Constant(v) => v.len(),
            Hypothesis::Tree(t) => t.outputs(),
            Hypothesis::Mean(hs) => hs.first().map_or(0, Hypothesis::outputs),
        }
    }

    /// Writes `h(x)` into `out` (overwriting it).
    pub fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Hypothesis::Linear {
                weights,
                bias,
                inputs,
            } => {
                for (k, o) in out.iter_mut().enumerate() {
                    let row = &weights[k * inputs..(k + 1) * inputs];
                    *o = bias[k] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                }
            }
            Hypothesis::Constant(v) => out.copy_from_slice(v),
            Hypothesis::Tree(t) => out.copy_from_slice(t.leaf_value(x)),
            Hypothesis::Mean(hs) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut buf = vec![0.0; out.len()];
                for h in hs {
                    h.predict_into(x, &mut buf);
                    for (o, b) in out.iter_mut().zip(&buf) {
                        *o += b;
                    }
                }
                if !hs.is_empty() {
                    let n = hs.len() as f64;
                    out.iter_mut().for_each(|o| *o /= n);
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs()];
        self.predict_into(x, &mut out);
        out
    }
}

/// Keeps at most `capacity` items offered at uniformly spaced times,
/// doubling the spacing whenever the buffer fills up.
#[derive(Clone, Debug)]
pub struct Thinned<T> {
    items: Vec<T>,
    stride: u64,
    offered: u64,
    capacity: usize,
}

impl<T> Thinned<T> {
    pub fn new(capacity: usize) -> Self {
        Thinned {
            items: Vec::new(),
            stride: 1,
            offered: 0,
            capacity: capacity.max(1),
        }
    }

    /// Offers the item for the next time step; `make` runs only when the
    /// item is retained.
    pub fn offer(&mut self, make: impl FnOnce() -> T) {
        let t = self.offered;
        self.offered += 1;
        if t % self.stride != 0 {
            return;
        }
        if self.items.len() == self.capacity {
            let mut keep = 0usize;
            self.items.retain(|_| {
                keep += 1;
                keep % 2 == 1
            });
            self.stride *= 2;
            if t % self.stride != 0 {
                return;
            }
        }
        self.items.push(make());
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn offered(&self) -> u64 {
        self.offered
    }
}

/// Running average of a learner's hypotheses over time.
///
/// Parameter-linear hypotheses are averaged exactly through their
/// parameters; trees keep thinned snapshots whose predictions are averaged.
#[derive(Clone, Debug)]
pub enum HypothesisAverage {
    Linear {
        sum_weights: Vec<f64>,
        sum_bias: Vec<f64>,
        inputs: usize,
        count: u64,
    },
    Constant {
        sum: Vec<f64>,
        count: u64,
    },
    Snapshots(Thinned<Hypothesis>),
}

impl HypothesisAverage {
    pub fn count(&self) -> u64 {
        match self {
            HypothesisAverage::Linear { count, .. } | HypothesisAverage::Constant { count, .. } => *count,
            HypothesisAverage::Snapshots(s) => s.offered(),
        }
    }

    /// The averaged hypothesis; `None` before anything was accumulated.
    pub fn mean(&self) -> Option<Hypothesis> {
        if self.count() == 0 {
            return None;
        }
        Some(match self {
            HypothesisAverage::Linear {
                sum_weights,
                sum_bias,
                inputs,
                count,
            } => {
                let n = *count as f64;
                Hypothesis::Linear {
                    weights: sum_weights.iter().map(|w| w / n).collect(),
                    bias: sum_bias.iter().map(|b| b / n).collect(),
                    inputs: *inputs,
                }
            }
            HypothesisAverage::Constant { sum, count } => {
                Hypothesis::Constant(sum.iter().map(|s| s / *count as f64).collect())
            }
            HypothesisAverage::Snapshots(s) => Hypothesis::Mean(s.items().to_vec()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinned_keeps_uniform_spacing() {
        let mut t = Thinned::new(4);
        for i in 0..20u64 {
            t.offer(|| i);
        }
        assert!(t.items().len() <= 4);
        let items = t.items();
        let gaps: Vec<u64> = items.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.iter().all(|g| *g == gaps[0]), "{items:?}");
        assert_eq!(items[0], 0);
    }

    #[test]
    fn thinned_small_stream_keeps_all() {
        let mut t = Thinned::new(8);
        for i in 0..5u64 {
            t.offer(|| i);
        }
        assert_eq!(t.items(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn mean_hypothesis_averages_predictions() {
        let h = Hypothesis::Mean(vec![
            Hypothesis::Constant(vec![1.0, 2.0]),
            Hypothesis::Constant(vec![3.0, 6.0]),
        ]);
        assert_eq!(h.predict(&[0.0]), vec![2.0, 4.0]);
    }
}

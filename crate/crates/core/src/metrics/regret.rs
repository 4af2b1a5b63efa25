/// One step of a regret trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegretRecord {
    pub t: u64,
    pub learner_loss: f64,
    pub comparator_loss: f64,
    pub cum_learner: f64,
    pub cum_comparator: f64,
    pub avg_regret: f64,
}

/// Running sums of learner and comparator losses.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RegretTracker {
    t: u64,
    cum_learner: f64,
    cum_comparator: f64,
}

impl RegretTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, learner_loss: f64, comparator_loss: f64) -> RegretRecord {
        self.t += 1;
        self.cum_learner += learner_loss;
        self.cum_comparator += comparator_loss;
        RegretRecord {
            t: self.t,
            learner_loss,
            comparator_loss,
            cum_learner: self.cum_learner,
            cum_comparator: self.cum_comparator,
            avg_regret: self.avg_regret(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn total_regret(&self) -> f64 {
        self.cum_learner - self.cum_comparator
    }

    /// `(sum l_t(y_t) - sum l_t(f*(x_t))) / T`; zero before any step.
    pub fn avg_regret(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.total_regret() / self.t as f64
        }
    }

    pub fn cum_learner(&self) -> f64 {
        self.cum_learner
    }

    pub fn cum_comparator(&self) -> f64 {
        self.cum_comparator
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_against_recomputation() {
        let mut r = RegretTracker::new();
        let pairs: Vec<(f64, f64)> = (0..1000)
            .map(|i| ((i as f64 * 0.37).sin().abs() + 0.1, (i as f64 * 0.11).cos().abs() * 0.2))
            .collect();
        let mut last = None;
        for &(a, b) in &pairs {
            last = Some(r.push(a, b));
        }
        let expect: f64 = pairs.iter().map(|(a, b)| a - b).sum::<f64>() / pairs.len() as f64;
        assert!((r.avg_regret() - expect).abs() < 1e-9);
        assert_eq!(last.unwrap().avg_regret, r.avg_regret());
        assert_eq!(r.steps(), 1000);
    }
}

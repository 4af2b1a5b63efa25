/// Unit-cost accounting: one weak-learner prediction is one unit, one
/// weak-learner update is two units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CostCounter {
    pub predictions: u64,
    pub update_units: u64,
}

impl CostCounter {
    pub const UPDATE_UNITS: u64 = 2;

    pub fn record_prediction(&mut self) {
        self.predictions += 1;
    }

    pub fn record_predictions(&mut self, n: u64) {
        self.predictions += n;
    }

    pub fn record_update(&mut self) {
        self.update_units += Self::UPDATE_UNITS;
    }

    pub fn total(&self) -> u64 {
        self.predictions + self.update_units
    }

    pub fn merge(&mut self, other: &CostCounter) {
        self.predictions += other.predictions;
        self.update_units += other.update_units;
    }
}

impl std::iter::Sum for CostCounter {
    fn sum<I: Iterator<Item = CostCounter>>(iter: I) -> Self {
        iter.fold(CostCounter::default(), |mut acc, c| {
            acc.merge(&c);
            acc
        })
    }
}

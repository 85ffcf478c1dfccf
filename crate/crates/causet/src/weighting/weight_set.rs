//! Per-dataset collection of weight trajectories as consumed by estimators,
//! with optional symmetric quantile truncation (default off).

use super::weights::WeightTrajectory;
use std::sync::atomic::{AtomicUsize, Ordering};

pub struct WeightSet {
    trajectories: Vec<WeightTrajectory>,
    clamp: Option<(f64, f64)>,
    clamped_lookups: AtomicUsize,
}

impl WeightSet {
    /// Unit weights for `n` subjects.
    pub fn unit(n: usize) -> Self {
        WeightSet {
            trajectories: (0..n).map(|_| WeightTrajectory::constant_one()).collect(),
            clamp: None,
            clamped_lookups: AtomicUsize::new(0),
        }
    }

    pub fn new(trajectories: Vec<WeightTrajectory>) -> Self {
        WeightSet { trajectories, clamp: None, clamped_lookups: AtomicUsize::new(0) }
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn trajectories(&self) -> &[WeightTrajectory] {
        &self.trajectories
    }

    /// Symmetric quantile truncation: clamp every lookup into the
    /// [q, 1−q] quantile range of all stored anchor values.
    pub fn with_truncation(mut self, quantile: f64) -> Self {
        assert!((0.0..0.5).contains(&quantile), "truncation quantile must be in [0, 0.5)");
        if quantile == 0.0 {
            self.clamp = None;
            return self;
        }
        let mut values: Vec<f64> = self
            .trajectories
            .iter()
            .flat_map(|t| t.anchors().iter().map(|&a| t.value_at(a)))
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if values.is_empty() {
            return self;
        }
        let pick = |p: f64| {
            let idx = ((values.len() - 1) as f64 * p).round() as usize;
            values[idx]
        };
        self.clamp = Some((pick(quantile), pick(1.0 - quantile)));
        self
    }

    fn apply(&self, w: f64) -> f64 {
        match self.clamp {
            Some((lo, hi)) if w < lo || w > hi => {
                self.clamped_lookups.fetch_add(1, Ordering::Relaxed);
                w.clamp(lo, hi)
            }
            _ => w,
        }
    }

    /// W^i_{t−}, the left limit entering product-limit estimators.
    pub fn left_limit(&self, subject: usize, t: f64) -> f64 {
        self.apply(self.trajectories[subject].left_limit_at(t))
    }

    /// W^i_t.
    pub fn value(&self, subject: usize, t: f64) -> f64 {
        self.apply(self.trajectories[subject].value_at(t))
    }

    pub fn clamped_lookup_count(&self) -> usize {
        self.clamped_lookups.load(Ordering::Relaxed)
    }

    pub fn flagged_count(&self) -> usize {
        self.trajectories.iter().filter(|t| t.flagged).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_weights_are_one_everywhere() {
        let w = WeightSet::unit(3);
        assert_eq!(w.left_limit(0, 0.5), 1.0);
        assert_eq!(w.value(2, 100.0), 1.0);
        assert_eq!(w.clamped_lookup_count(), 0);
    }
}

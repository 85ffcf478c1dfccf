//! Right-continuous step functions over time.

use serde::{Deserialize, Serialize};

/// A step function: jumps at `times` (strictly increasing) to `values`;
/// before the first jump its value is `initial`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCurve {
    initial: f64,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl StepCurve {
    pub fn new(initial: f64, times: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(times.len(), values.len());
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        StepCurve { initial, times, values }
    }

    pub fn constant(value: f64) -> Self {
        StepCurve { initial: value, times: vec![], values: vec![] }
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            self.initial
        } else {
            self.values[k - 1]
        }
    }

    pub fn left_limit_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            self.initial
        } else {
            self.values[k - 1]
        }
    }

    /// Apply `f` to every level (initial and jump values).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> StepCurve {
        StepCurve {
            initial: f(self.initial),
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination on the union of jump times.
    pub fn combine(&self, other: &StepCurve, f: impl Fn(f64, f64) -> f64) -> StepCurve {
        let mut times: Vec<f64> =
            self.times.iter().chain(other.times.iter()).copied().collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let values = times.iter().map(|&t| f(self.value_at(t), other.value_at(t))).collect();
        StepCurve { initial: f(self.initial, other.initial), times, values }
    }

    /// Largest pointwise absolute difference, evaluated on the union of jump
    /// times and at 0.
    pub fn sup_distance(&self, other: &StepCurve) -> f64 {
        let mut sup: f64 = (self.initial - other.initial).abs();
        for &t in self.times.iter().chain(other.times.iter()) {
            sup = sup.max((self.value_at(t) - other.value_at(t)).abs());
        }
        sup
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_and_left_limits() {
        let c = StepCurve::new(1.0, vec![1.0, 2.0], vec![0.5, 0.25]);
        assert_eq!(c.value_at(0.0), 1.0);
        assert_eq!(c.value_at(1.0), 0.5);
        assert_eq!(c.left_limit_at(1.0), 1.0);
        assert_eq!(c.value_at(1.5), 0.5);
        assert_eq!(c.value_at(3.0), 0.25);
    }

    #[test]
    fn combine_on_union() {
        let a = StepCurve::new(0.0, vec![1.0], vec![0.3]);
        let b = StepCurve::new(0.1, vec![2.0], vec![0.2]);
        let d = a.combine(&b, |x, y| x - y);
        assert_eq!(d.times(), &[1.0, 2.0]);
        assert!((d.value_at(0.5) - (-0.1)).abs() < 1e-15);
        assert!((d.value_at(1.5) - 0.2).abs() < 1e-15);
        assert!((d.value_at(2.5) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn sup_distance_sees_all_jumps() {
        let a = StepCurve::new(1.0, vec![1.0], vec![0.0]);
        let b = StepCurve::new(1.0, vec![1.5], vec![0.0]);
        assert_eq!(a.sup_distance(&b), 1.0);
    }
}

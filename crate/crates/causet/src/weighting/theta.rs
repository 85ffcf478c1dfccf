//! Windowed hazard-increment ratio θ.
//!
//! θ_s = (Ã_s − Ã_{s−b}) / (Â_s − Â_{s−b}) for Nelson–Aalen estimators Ã
//! (the regime to impose, from the reference group) and Â (the group being
//! re-weighted), with smoothing window b. An empty denominator window forces
//! the policy value θ = 1 and flags the evaluation; this biases towards the
//! null rather than producing an undefined weight.

use super::nelson_aalen::CumulativeHazard;

pub struct ThetaRatio<'a> {
    reference: &'a CumulativeHazard,
    target: &'a CumulativeHazard,
    bandwidth: f64,
}

impl<'a> ThetaRatio<'a> {
    pub fn new(reference: &'a CumulativeHazard, target: &'a CumulativeHazard, bandwidth: f64) -> Self {
        debug_assert!(bandwidth > 0.0);
        ThetaRatio { reference, target, bandwidth }
    }

    /// θ_s; the boolean marks the empty-denominator policy case.
    pub fn value_at(&self, s: f64) -> (f64, bool) {
        let lo = s - self.bandwidth;
        let num = self.reference.value_at(s) - self.reference.value_at(lo);
        let den = self.target.value_at(s) - self.target.value_at(lo);
        Self::ratio(num, den)
    }

    /// lim_{u↑s} θ_u: window increments with left limits at both ends.
    pub fn left_value_at(&self, s: f64) -> (f64, bool) {
        let lo = s - self.bandwidth;
        let num = self.reference.left_limit_at(s) - self.reference.left_limit_at(lo);
        let den = self.target.left_limit_at(s) - self.target.left_limit_at(lo);
        Self::ratio(num, den)
    }

    fn ratio(num: f64, den: f64) -> (f64, bool) {
        if den <= 0.0 {
            (1.0, true)
        } else {
            (num / den, false)
        }
    }
}

/// Default smoothing bandwidth: n^{-1/4} on the scale of the horizon.
pub fn default_bandwidth(n: usize, horizon: f64) -> f64 {
    horizon * (n as f64).powf(-0.25)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_hazards_give_one() {
        let a = CumulativeHazard::new(vec![0.2, 0.5, 0.8], vec![0.1, 0.2, 0.1]);
        let theta = ThetaRatio::new(&a, &a, 0.3);
        for s in [0.25, 0.5, 0.9] {
            let (v, flagged) = theta.value_at(s);
            assert_eq!(v, 1.0);
            assert!(!flagged);
        }
    }

    #[test]
    fn doubled_increments_give_two() {
        let reference = CumulativeHazard::new(vec![0.2, 0.5], vec![0.2, 0.4]);
        let target = CumulativeHazard::new(vec![0.2, 0.5], vec![0.1, 0.2]);
        let theta = ThetaRatio::new(&reference, &target, 1.0);
        let (v, flagged) = theta.value_at(0.6);
        assert_eq!(v, 2.0);
        assert!(!flagged);
    }

    #[test]
    fn empty_denominator_window_flags_and_returns_one() {
        let reference = CumulativeHazard::new(vec![0.5], vec![0.3]);
        let target = CumulativeHazard::new(vec![2.0], vec![0.3]);
        let theta = ThetaRatio::new(&reference, &target, 0.4);
        let (v, flagged) = theta.value_at(0.6);
        assert_eq!(v, 1.0);
        assert!(flagged);
    }

    #[test]
    fn left_value_excludes_the_jump_at_s() {
        let reference = CumulativeHazard::new(vec![0.5], vec![0.3]);
        let target = CumulativeHazard::new(vec![0.5], vec![0.1]);
        let theta = ThetaRatio::new(&reference, &target, 0.4);
        let (v, flagged) = theta.value_at(0.5);
        assert!((v - 3.0).abs() < 1e-12 && !flagged);
        assert_eq!(theta.left_value_at(0.5), (1.0, true));
    }
}

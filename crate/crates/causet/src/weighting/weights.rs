//! Exact likelihood-ratio weight trajectories.
//!
//! For an intervention that multiplies a base intensity λ* by a predictable
//! ratio ρ, the weight is
//!
//! W_t = Π_{s ≤ t} ρ_s^{ΔN*_s} · exp(−∫₀^t (ρ_s − 1) λ*_s ds),
//!
//! computed along one subject path. A trajectory stores left limits and
//! right-continuous values at anchor times (grid plus the subject's jumps);
//! between anchors values interpolate linearly in log scale, which is exact
//! when λ* and ρ are constant there.

use super::likelihood::{integration_anchors, LikelihoodError, QUAD_TOL};
use crate::numeric::integrate;
use crate::simulation::{History, Intensity, SubjectPath};

/// Predictable nonnegative ratio process ρ.
pub trait RatioProcess: Send + Sync {
    fn value(&self, t: f64, h: &History) -> f64;

    /// Finite upper bound (positivity analogue); informational.
    fn bound(&self) -> f64 {
        f64::INFINITY
    }
}

/// Constant ρ.
pub struct ConstantRho(pub f64);

impl RatioProcess for ConstantRho {
    fn value(&self, _t: f64, _h: &History) -> f64 {
        self.0
    }

    fn bound(&self) -> f64 {
        self.0
    }
}

/// Arbitrary predictable ρ from a closure.
pub struct FnRho<F> {
    pub f: F,
    pub bound: f64,
}

impl<F: Fn(f64, &History) -> f64 + Send + Sync> RatioProcess for FnRho<F> {
    fn value(&self, t: f64, h: &History) -> f64 {
        (self.f)(t, h)
    }

    fn bound(&self) -> f64 {
        self.bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Linear in log W between anchors (continuous part of an exact weight).
    LogLinear,
    /// Piecewise constant between anchors (pure-jump estimated weights).
    Step,
}

/// Piecewise weight path W_t for one subject. W_0 = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTrajectory {
    anchors: Vec<f64>,
    /// W(a_k −).
    left: Vec<f64>,
    /// W(a_k), right-continuous; differs from `left` by the jump factor.
    values: Vec<f64>,
    interpolation: Interpolation,
    /// Trajectory frozen from this time on (censoring stop).
    stop: f64,
    /// True when a degenerate estimation window forced a policy value.
    pub flagged: bool,
}

impl WeightTrajectory {
    pub fn constant_one() -> Self {
        WeightTrajectory {
            anchors: vec![0.0],
            left: vec![1.0],
            values: vec![1.0],
            interpolation: Interpolation::Step,
            stop: f64::INFINITY,
            flagged: false,
        }
    }

    pub(crate) fn from_parts(
        anchors: Vec<f64>,
        left: Vec<f64>,
        values: Vec<f64>,
        interpolation: Interpolation,
        stop: f64,
        flagged: bool,
    ) -> Self {
        debug_assert_eq!(anchors.len(), values.len());
        debug_assert_eq!(anchors.len(), left.len());
        debug_assert!(anchors.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(anchors.first(), Some(&0.0));
        WeightTrajectory { anchors, left, values, interpolation, stop, flagged }
    }

    pub fn anchors(&self) -> &[f64] {
        &self.anchors
    }

    /// W_t, right-continuous.
    pub fn value_at(&self, t: f64) -> f64 {
        let t = t.min(self.stop);
        let k = self.anchors.partition_point(|&s| s <= t);
        if k == 0 {
            return 1.0;
        }
        if t == self.anchors[k - 1] || k == self.anchors.len() {
            return self.values[k - 1];
        }
        self.interpolate(k - 1, t)
    }

    /// W_{t−}.
    pub fn left_limit_at(&self, t: f64) -> f64 {
        if t > self.stop {
            return self.value_at(self.stop);
        }
        match self.anchors.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(k) => self.left[k],
            Err(0) => 1.0,
            Err(k) if k == self.anchors.len() => self.values[k - 1],
            Err(k) => self.interpolate(k - 1, t),
        }
    }

    fn interpolate(&self, i: usize, t: f64) -> f64 {
        match self.interpolation {
            Interpolation::Step => self.values[i],
            Interpolation::LogLinear => {
                let w0 = self.values[i];
                let w1 = self.left[i + 1];
                if w0 <= 0.0 || w1 <= 0.0 {
                    return if w0 == 0.0 { 0.0 } else { w0 };
                }
                let frac = (t - self.anchors[i]) / (self.anchors[i + 1] - self.anchors[i]);
                w0 * (w1 / w0).powf(frac)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error("rho was negative ({rho}) at t={time}")]
    NegativeRho { time: f64, rho: f64 },
    #[error("rho was non-finite at t={time} (intervened and base intensity incompatible)")]
    NonFiniteRho { time: f64 },
    #[error(transparent)]
    Likelihood(#[from] LikelihoodError),
}

struct Factor<'a> {
    intensity: &'a dyn Intensity,
    rho: &'a dyn RatioProcess,
}

/// Exact weights for a single intervened process.
///
/// Anchors are the union of `grid`, the subject's jump times and 0; the
/// trajectory is evaluated through `horizon`.
pub fn exact_weights(
    path: &SubjectPath,
    base_intensity: &dyn Intensity,
    rho: &dyn RatioProcess,
    grid: &[f64],
    horizon: f64,
) -> Result<WeightTrajectory, WeightError> {
    build_trajectory(
        path,
        &[Factor { intensity: base_intensity, rho }],
        grid,
        horizon,
        f64::INFINITY,
    )
}

/// Combined censoring × treatment weights of the identification theorem,
/// stopped at the subject's censoring time.
#[allow(clippy::too_many_arguments)]
pub fn combined_weights(
    path: &SubjectPath,
    censoring_intensity: &dyn Intensity,
    rho_censoring: &dyn RatioProcess,
    treatment_intensity: &dyn Intensity,
    rho_treatment: &dyn RatioProcess,
    grid: &[f64],
    horizon: f64,
    censoring_time: f64,
) -> Result<WeightTrajectory, WeightError> {
    build_trajectory(
        path,
        &[
            Factor { intensity: censoring_intensity, rho: rho_censoring },
            Factor { intensity: treatment_intensity, rho: rho_treatment },
        ],
        grid,
        horizon,
        censoring_time,
    )
}

fn build_trajectory(
    path: &SubjectPath,
    factors: &[Factor],
    grid: &[f64],
    horizon: f64,
    stop: f64,
) -> Result<WeightTrajectory, WeightError> {
    let end = horizon.min(stop);
    let mut anchors = integration_anchors(path, end);
    for &g in grid {
        if g > 0.0 && g < end {
            anchors.push(g);
        }
    }
    anchors.push(end);
    anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    anchors.dedup();

    let mut left = Vec::with_capacity(anchors.len());
    let mut values = Vec::with_capacity(anchors.len());
    let mut w = 1.0f64;
    left.push(1.0);
    values.push(w);

    for seg in 0..anchors.len() - 1 {
        let (a, b) = (anchors[seg], anchors[seg + 1]);
        // Continuous part: exp(−∫ (ρ−1) λ*) summed over factors.
        let mut exponent = 0.0;
        let mut bad: Option<WeightError> = None;
        for factor in factors {
            exponent += integrate(
                |s| {
                    let h = History::new(s, &path.baseline, &path.jumps);
                    let rate = factor.intensity.rate(s, &h);
                    let r = factor.rho.value(s, &h);
                    if bad.is_none() {
                        if !rate.is_finite() {
                            bad = Some(LikelihoodError::NonFiniteRate(s).into());
                        } else if r < 0.0 {
                            bad = Some(WeightError::NegativeRho { time: s, rho: r });
                        } else if !r.is_finite() {
                            bad = Some(WeightError::NonFiniteRho { time: s });
                        }
                    }
                    (r - 1.0) * rate
                },
                a,
                b,
                QUAD_TOL,
            );
        }
        if let Some(e) = bad {
            return Err(e);
        }
        let w_left = w * (-exponent).exp();
        // Jump part exactly at b.
        let mut factor_at_b = 1.0;
        for factor in factors {
            let target = factor.intensity.target();
            let jumps_at_b = path
                .jumps
                .get(target)
                .map_or(false, |ts| ts.binary_search_by(|s| s.partial_cmp(&b).unwrap()).is_ok());
            if jumps_at_b {
                let h = History::new(b, &path.baseline, &path.jumps);
                let r = factor.rho.value(b, &h);
                if r < 0.0 {
                    return Err(WeightError::NegativeRho { time: b, rho: r });
                }
                if !r.is_finite() {
                    return Err(WeightError::NonFiniteRho { time: b });
                }
                factor_at_b *= r;
            }
        }
        w = w_left * factor_at_b;
        left.push(w_left);
        values.push(w);
    }

    Ok(WeightTrajectory::from_parts(
        anchors,
        left,
        values,
        Interpolation::LogLinear,
        stop,
        false,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;
    use crate::simulation::{FamilyIntensity, IntensityFamily};

    fn constant_intensity(node: &str, rate: f64, max_jumps: Option<u32>) -> FamilyIntensity {
        FamilyIntensity::new(NodeId::from(node), IntensityFamily::Constant { rate, max_jumps })
            .unwrap()
    }

    fn path_with(node: &str, jumps: &[f64]) -> SubjectPath {
        let mut p = SubjectPath::new("0");
        if !jumps.is_empty() {
            p.jumps.insert(node.into(), jumps.to_vec());
        }
        p
    }

    #[test]
    fn rho_one_is_identically_one() {
        let lam = constant_intensity("N", 1.7, Some(1));
        let path = path_with("N", &[0.6]);
        let w = exact_weights(&path, &lam, &ConstantRho(1.0), &[0.25, 0.5, 0.75], 1.0).unwrap();
        for &t in &[0.0, 0.1, 0.25, 0.6, 0.9, 1.0] {
            assert_eq!(w.value_at(t), 1.0);
            assert_eq!(w.left_limit_at(t), 1.0);
        }
    }

    #[test]
    fn constant_rho_no_jumps_reduces_to_exponential() {
        let lam = constant_intensity("N", 2.0, None);
        let path = path_with("N", &[]);
        let r = 1.5;
        let w = exact_weights(&path, &lam, &ConstantRho(r), &[], 1.0).unwrap();
        // W_t = exp(−(r−1)·λ·t), also between anchors via interpolation.
        for &t in &[0.3, 0.7, 1.0] {
            let want = (-(r - 1.0) * 2.0 * t).exp();
            assert!((w.value_at(t) - want).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn jump_factor_and_left_limit() {
        let lam = constant_intensity("N", 1.0, Some(1));
        let path = path_with("N", &[0.5]);
        let r = 2.0;
        let w = exact_weights(&path, &lam, &ConstantRho(r), &[], 1.0).unwrap();
        // Before the jump: exp(−(r−1)·t); at the jump multiply by r; after
        // the jump the at-risk indicator kills the integrand.
        let before = (-(r - 1.0) * 0.5f64).exp();
        assert!((w.left_limit_at(0.5) - before).abs() < 1e-12);
        assert!((w.value_at(0.5) - r * before).abs() < 1e-12);
        assert!((w.value_at(1.0) - r * before).abs() < 1e-12);
    }

    #[test]
    fn zero_rho_zeroes_jumping_subjects() {
        let lam = constant_intensity("N", 2.0, Some(1));
        let path = path_with("N", &[0.25]);
        let w = exact_weights(&path, &lam, &ConstantRho(0.0), &[], 1.0).unwrap();
        let before = (2.0f64 * 0.25).exp(); // exp(+λ t) while at risk
        assert!((w.left_limit_at(0.25) - before).abs() < 1e-10);
        assert_eq!(w.value_at(0.25), 0.0);
        assert_eq!(w.value_at(0.9), 0.0);
    }

    #[test]
    fn negative_rho_rejected() {
        let lam = constant_intensity("N", 1.0, None);
        let path = path_with("N", &[]);
        let err = exact_weights(&path, &lam, &ConstantRho(-0.5), &[], 1.0).unwrap_err();
        assert!(matches!(err, WeightError::NegativeRho { .. }));
    }

    #[test]
    fn combined_equals_product_of_factors() {
        let lam_c = constant_intensity("C", 0.4, Some(1));
        let lam_x = constant_intensity("X", 1.2, Some(1));
        let mut path = SubjectPath::new("0");
        path.jumps.insert("X".into(), vec![0.3]);
        path.jumps.insert("C".into(), vec![0.8]);
        let grid = [0.1, 0.2, 0.5, 0.7];
        let rho_c = ConstantRho(0.5);
        let rho_x = ConstantRho(2.0);
        let combined =
            combined_weights(&path, &lam_c, &rho_c, &lam_x, &rho_x, &grid, 1.0, 0.8).unwrap();
        let wc = exact_weights(&path, &lam_c, &rho_c, &grid, 1.0).unwrap();
        let wx = exact_weights(&path, &lam_x, &rho_x, &grid, 1.0).unwrap();
        for &t in &[0.05, 0.1, 0.3, 0.5, 0.75, 0.8] {
            let product = wc.value_at(t) * wx.value_at(t);
            let got = combined.value_at(t);
            assert!(
                (got - product).abs() <= 1e-12 * product.abs().max(1.0),
                "t={t}: {got} vs {product}"
            );
        }
        // Stopped at censoring: frozen afterwards.
        assert_eq!(combined.value_at(0.95), combined.value_at(0.8));
    }

    #[test]
    fn rho_x_one_reduces_to_censoring_factor() {
        let lam_c = constant_intensity("C", 0.4, Some(1));
        let lam_x = constant_intensity("X", 1.2, Some(1));
        let path = path_with("X", &[0.3]);
        let grid = [0.2, 0.6];
        let rho_c = ConstantRho(0.0);
        let combined = combined_weights(
            &path,
            &lam_c,
            &rho_c,
            &lam_x,
            &ConstantRho(1.0),
            &grid,
            1.0,
            f64::INFINITY,
        )
        .unwrap();
        let wc = exact_weights(&path, &lam_c, &rho_c, &grid, 1.0).unwrap();
        for &t in &[0.2, 0.3, 0.6, 1.0] {
            assert!((combined.value_at(t) - wc.value_at(t)).abs() < 1e-12);
        }
    }
}

//! Likelihood contribution of one local characteristic along a path:
//! Z = Π_{s_i ≤ t} λ(s_i) · exp(−∫₀^t λ_s ds).

use crate::numeric::integrate;
use crate::simulation::{History, Intensity, SubjectPath};

pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LikelihoodError {
    #[error("intensity returned a non-finite rate at t={0}")]
    NonFiniteRate(f64),
}

/// Anchor times for integrating path functionals: every jump of every
/// process strictly inside `(0, t)`, plus the endpoints. Intensities are
/// smooth between jumps, so quadrature segments never straddle a
/// discontinuity.
pub(crate) fn integration_anchors(path: &SubjectPath, t: f64) -> Vec<f64> {
    let mut anchors = vec![0.0];
    for times in path.jumps.values() {
        for &s in times {
            if s > 0.0 && s < t {
                anchors.push(s);
            }
        }
    }
    anchors.push(t);
    anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    anchors.dedup();
    anchors
}

/// Evaluate Z(λ, t) for the intensity's target process on `path`.
///
/// Jump factors use the predictable rate (strict past at the jump instant);
/// the integral runs segment by segment with adaptive Gauss–Kronrod at
/// 1e-10 relative tolerance.
pub fn likelihood_contribution(
    path: &SubjectPath,
    intensity: &dyn Intensity,
    t: f64,
) -> Result<f64, LikelihoodError> {
    let mut jump_product = 1.0;
    for &s in path.observed_jumps(intensity.target(), t) {
        let rate = intensity.rate(s, &History::new(s, &path.baseline, &path.jumps));
        if !rate.is_finite() {
            return Err(LikelihoodError::NonFiniteRate(s));
        }
        jump_product *= rate;
    }
    let anchors = integration_anchors(path, t);
    let mut total = 0.0;
    for seg in anchors.windows(2) {
        let mut bad: Option<f64> = None;
        total += integrate(
            |s| {
                let rate = intensity.rate(s, &History::new(s, &path.baseline, &path.jumps));
                if !rate.is_finite() && bad.is_none() {
                    bad = Some(s);
                }
                rate
            },
            seg[0],
            seg[1],
            QUAD_TOL,
        );
        if let Some(s) = bad {
            return Err(LikelihoodError::NonFiniteRate(s));
        }
    }
    Ok(jump_product * (-total).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;
    use crate::simulation::{FamilyIntensity, IntensityFamily};

    fn path_with(node: &str, jumps: &[f64]) -> SubjectPath {
        let mut p = SubjectPath::new("0");
        if !jumps.is_empty() {
            p.jumps.insert(node.into(), jumps.to_vec());
        }
        p
    }

    #[test]
    fn constant_rate_no_jumps() {
        let lam = FamilyIntensity::new(
            NodeId::from("N"),
            IntensityFamily::Constant { rate: 0.7, max_jumps: None },
        )
        .unwrap();
        let z = likelihood_contribution(&path_with("N", &[]), &lam, 2.0).unwrap();
        assert!((z - (-1.4f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn one_jump_then_at_risk_ends() {
        // Density of an exponential time: c e^{-cs}.
        let c = 1.3;
        let lam = FamilyIntensity::new(
            NodeId::from("N"),
            IntensityFamily::Constant { rate: c, max_jumps: Some(1) },
        )
        .unwrap();
        let s = 0.4;
        let z = likelihood_contribution(&path_with("N", &[s]), &lam, 1.0).unwrap();
        assert!((z - c * (-c * s).exp()).abs() < 1e-10, "z={z}");
    }
}

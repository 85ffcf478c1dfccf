//! Kernel occurrence/exposure hazard estimate, used to validate simulated
//! systems against closed-form hazards.

use super::dataset::EventDataset;
use crate::graph::NodeId;
use crate::numeric::{epanechnikov, epanechnikov_window_integral};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HazardError {
    #[error("bandwidth must be positive")]
    NonPositiveBandwidth,
    #[error("empty risk set at t={0}")]
    EmptyRiskSet(f64),
}

/// Smoothed hazard of the first jump of one process among at-risk subjects
/// (no own jump yet, not censored).
pub struct KernelHazard {
    /// Observed first-jump times.
    events: Vec<f64>,
    /// Subject index of each event, for per-subject variance residuals.
    event_subject: Vec<usize>,
    /// Per-subject at-risk interval end: min(first jump, censoring, horizon).
    exposure_end: Vec<f64>,
    bandwidth: f64,
}

impl KernelHazard {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Point estimate at `t`.
    pub fn estimate(&self, t: f64) -> Result<f64, HazardError> {
        Ok(self.estimate_with_se(t)?.0)
    }

    /// Point estimate and a ratio-estimator standard error at `t`.
    pub fn estimate_with_se(&self, t: f64) -> Result<(f64, f64), HazardError> {
        let h = self.bandwidth;
        let occurrences: Vec<f64> = self
            .events
            .iter()
            .map(|&s| epanechnikov((t - s) / h) / h)
            .collect();
        let exposures: Vec<f64> = self
            .exposure_end
            .iter()
            .map(|&end| epanechnikov_window_integral(t, h, 0.0, end))
            .collect();
        let num: f64 = occurrences.iter().sum();
        let den: f64 = exposures.iter().sum();
        if den <= 0.0 {
            return Err(HazardError::EmptyRiskSet(t));
        }
        let theta = num / den;
        // Ratio-estimator variance from per-subject residuals o_i − θ e_i.
        let mut kernel_mass = vec![0.0f64; self.exposure_end.len()];
        for (k, &subject) in self.event_subject.iter().enumerate() {
            kernel_mass[subject] += occurrences[k];
        }
        let ssq: f64 = kernel_mass
            .iter()
            .zip(&exposures)
            .map(|(&o, &e)| {
                let r = o - theta * e;
                r * r
            })
            .sum();
        let se = ssq.sqrt() / den;
        Ok((theta, se))
    }
}

/// Build the kernel hazard estimate for `process`.
pub fn estimate_marginal_hazard(
    dataset: &EventDataset,
    process: &NodeId,
    bandwidth: f64,
) -> Result<KernelHazard, HazardError> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(HazardError::NonPositiveBandwidth);
    }
    let censoring = dataset.censoring_node.clone();
    let mut events = Vec::new();
    let mut event_subject = Vec::new();
    let mut exposure_end = Vec::with_capacity(dataset.n());
    for (i, s) in dataset.subjects.iter().enumerate() {
        let c = s.censoring_time(censoring.as_ref()).min(dataset.horizon);
        let first = s.observed_first_jump(process, c);
        if let Some(t) = first {
            events.push(t);
            event_subject.push(i);
        }
        exposure_end.push(first.unwrap_or(c).min(c));
    }
    Ok(KernelHazard { events, event_subject, exposure_end, bandwidth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::dataset::SubjectPath;

    fn ds(first_jumps: &[Option<f64>], horizon: f64) -> EventDataset {
        let subjects = first_jumps
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut s = SubjectPath::new(i.to_string());
                if let Some(t) = t {
                    s.jumps.insert("N".into(), vec![*t]);
                }
                s
            })
            .collect();
        EventDataset::new(subjects, horizon, None)
    }

    #[test]
    fn zero_events_means_zero_curve() {
        let d = ds(&[None, None, None], 1.0);
        let k = estimate_marginal_hazard(&d, &"N".into(), 0.2).unwrap();
        assert_eq!(k.estimate(0.5).unwrap(), 0.0);
    }

    #[test]
    fn empty_risk_set_is_an_error() {
        let d = ds(&[Some(0.1)], 1.0);
        let k = estimate_marginal_hazard(&d, &"N".into(), 0.05).unwrap();
        assert!(matches!(k.estimate(0.9), Err(HazardError::EmptyRiskSet(_))));
    }

    #[test]
    fn bad_bandwidth_rejected() {
        let d = ds(&[Some(0.1)], 1.0);
        assert!(matches!(
            estimate_marginal_hazard(&d, &"N".into(), 0.0),
            Err(HazardError::NonPositiveBandwidth)
        ));
    }
}

//! Data-driven additive-hazard weights.
//!
//! Per-subject weights solve the exact jump recursion
//!
//! Ŵ_t = 1 + ∫₀^t Ŵ_{s−} (θ_{s−} − 1) dN^x_s
//!          − ∫₀^t Ŵ_{s−} I(N^x_{s−} = 0) d(Ã^x − Â^x)_s
//!
//! driven by the pooled jump times of the two Nelson–Aalen estimators and
//! the subject's own treatment jumps. Both integrators are pure-jump, so the
//! recursion is exact: no quadrature enters. Reference-group subjects carry
//! unit weights by construction; every trajectory freezes at its subject's
//! censoring time.

use super::nelson_aalen::{nelson_aalen, CumulativeHazard, NelsonAalenError};
use super::theta::ThetaRatio;
use super::weights::{Interpolation, WeightTrajectory};
use crate::graph::NodeId;
use crate::simulation::EventDataset;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AhwError {
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("{side} group: {source}")]
    Group { side: &'static str, source: NelsonAalenError },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AhwDiagnostics {
    /// Own-jump θ evaluations that hit the empty-window policy.
    pub theta_flagged_jumps: usize,
    pub target_events: usize,
    pub reference_events: usize,
    pub bandwidth: f64,
}

pub struct AhwWeights {
    /// One trajectory per dataset subject (unit weight outside the target
    /// group).
    pub trajectories: Vec<WeightTrajectory>,
    pub reference_na: CumulativeHazard,
    pub target_na: CumulativeHazard,
    pub diagnostics: AhwDiagnostics,
}

/// Estimate re-weighting trajectories that impose the reference group's
/// treatment intensity on the target group.
pub fn estimate_weights_ahw(
    dataset: &EventDataset,
    target_group: &[usize],
    reference_group: &[usize],
    treatment: &NodeId,
    bandwidth: f64,
    _grid: &[f64],
) -> Result<AhwWeights, AhwError> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(AhwError::NonPositiveBandwidth(bandwidth));
    }
    let target_na = nelson_aalen(dataset, treatment, target_group)
        .map_err(|source| AhwError::Group { side: "target", source })?;
    let reference_na = nelson_aalen(dataset, treatment, reference_group)
        .map_err(|source| AhwError::Group { side: "reference", source })?;
    let theta = ThetaRatio::new(&reference_na, &target_na, bandwidth);

    // Pooled anchor times of both estimators.
    let mut pooled: Vec<f64> = reference_na
        .jump_times()
        .iter()
        .chain(target_na.jump_times())
        .copied()
        .collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pooled.dedup();

    let mut in_target = vec![false; dataset.n()];
    for &i in target_group {
        in_target[i] = true;
    }

    let censoring = dataset.censoring_node.clone();
    let results: Vec<(WeightTrajectory, usize)> = (0..dataset.n())
        .into_par_iter()
        .map(|i| {
            if !in_target[i] {
                return (WeightTrajectory::constant_one(), 0);
            }
            let s = &dataset.subjects[i];
            let c = s.censoring_time(censoring.as_ref()).min(dataset.horizon);
            let own_jumps = s.observed_jumps(treatment, c);
            subject_recursion(&pooled, &reference_na, &target_na, &theta, own_jumps, c)
        })
        .collect();

    let mut trajectories = Vec::with_capacity(results.len());
    let mut flagged = 0usize;
    for (t, f) in results {
        flagged += f;
        trajectories.push(t);
    }
    let diagnostics = AhwDiagnostics {
        theta_flagged_jumps: flagged,
        target_events: target_na.jump_times().len(),
        reference_events: reference_na.jump_times().len(),
        bandwidth,
    };
    Ok(AhwWeights { trajectories, reference_na, target_na, diagnostics })
}

fn subject_recursion(
    pooled: &[f64],
    reference_na: &CumulativeHazard,
    target_na: &CumulativeHazard,
    theta: &ThetaRatio,
    own_jumps: &[f64],
    stop: f64,
) -> (WeightTrajectory, usize) {
    // The drift term only acts before the first own jump; later own jumps
    // (recurrent treatments) still contribute θ factors, so anchors are the
    // pooled estimator jump times merged with the subject's own jumps.
    let mut anchors_in: Vec<f64> = pooled.iter().chain(own_jumps).copied().collect();
    anchors_in.sort_by(|a, b| a.partial_cmp(b).unwrap());
    anchors_in.dedup();

    let mut anchors = vec![0.0];
    let mut left = vec![1.0];
    let mut values = vec![1.0];
    let mut w = 1.0f64;
    let mut flagged = 0usize;
    let mut trajectory_flagged = false;
    let first_own = own_jumps.first().copied();

    for &s in &anchors_in {
        if s > stop {
            break;
        }
        let naive = first_own.map_or(true, |tau| s <= tau);
        let is_own = own_jumps.binary_search_by(|t| t.partial_cmp(&s).unwrap()).is_ok();
        let mut factor = 1.0;
        if naive {
            factor -= reference_na.increment_at(s) - target_na.increment_at(s);
        }
        if is_own {
            let (th, fl) = theta.left_value_at(s);
            if fl {
                flagged += 1;
                trajectory_flagged = true;
            }
            factor += th - 1.0;
        }
        if factor != 1.0 {
            let w_new = w * factor;
            anchors.push(s);
            left.push(w);
            values.push(w_new);
            w = w_new;
        }
    }

    (
        WeightTrajectory::from_parts(anchors, left, values, Interpolation::Step, stop, trajectory_flagged),
        flagged,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::SubjectPath;

    fn two_group_dataset(
        target: &[(Option<f64>, Option<f64>)],
        reference: &[(Option<f64>, Option<f64>)],
    ) -> (EventDataset, Vec<usize>, Vec<usize>) {
        // (treatment jump, censor time) per subject
        let mut subjects = Vec::new();
        for (k, (jump, censor)) in target.iter().chain(reference).enumerate() {
            let mut s = SubjectPath::new(k.to_string());
            s.baseline.insert("G".into(), if k < target.len() { 1.0 } else { 0.0 });
            if let Some(t) = jump {
                s.jumps.insert("Nx".into(), vec![*t]);
            }
            if let Some(t) = censor {
                s.jumps.insert("Nc".into(), vec![*t]);
            }
            subjects.push(s);
        }
        let ds = EventDataset::new(subjects, 10.0, Some("Nc".into()));
        let tg = ds.group_indices(&"G".into(), 1.0);
        let rg = ds.group_indices(&"G".into(), 0.0);
        (ds, tg, rg)
    }

    #[test]
    fn identical_groups_give_unit_weights() {
        let rows = [(Some(0.5), None), (Some(1.5), None), (None, None)];
        let (ds, tg, rg) = two_group_dataset(&rows, &rows);
        // Same event times in both groups: Ã = Â, θ = 1 everywhere.
        let w = estimate_weights_ahw(&ds, &tg, &rg, &"Nx".into(), 0.5, &[]).unwrap();
        for traj in &w.trajectories {
            for t in [0.2, 0.5, 1.0, 1.5, 3.0] {
                assert!((traj.value_at(t) - 1.0).abs() < 1e-12);
                assert!((traj.left_limit_at(t) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn no_jump_subject_integrates_na_difference() {
        // Target events at 1.0 (of 2 at risk); reference events at 0.5 (of 2).
        let (ds, tg, rg) =
            two_group_dataset(&[(Some(1.0), None), (None, None)], &[(Some(0.5), None), (None, None)]);
        let w = estimate_weights_ahw(&ds, &tg, &rg, &"Nx".into(), 0.3, &[]).unwrap();
        // Subject "1" (target, never treated): factors (1 − ΔÃ) at 0.5 and
        // (1 + ΔÂ) at 1.0.
        let traj = &w.trajectories[1];
        let expected = (1.0 - 0.5) * (1.0 + 0.5);
        assert!((traj.value_at(2.0) - expected).abs() < 1e-12);
        assert_eq!(traj.value_at(9.0), traj.value_at(2.0));
    }

    #[test]
    fn bad_bandwidth_or_empty_group() {
        let (ds, tg, rg) = two_group_dataset(&[(Some(1.0), None)], &[(Some(0.5), None)]);
        assert!(matches!(
            estimate_weights_ahw(&ds, &tg, &rg, &"Nx".into(), 0.0, &[]),
            Err(AhwError::NonPositiveBandwidth(_))
        ));
        assert!(matches!(
            estimate_weights_ahw(&ds, &[], &rg, &"Nx".into(), 0.5, &[]),
            Err(AhwError::Group { side: "target", .. })
        ));
    }
}

//! Weighted Kaplan–Meier estimation and curve arithmetic.

use super::step_curve::StepCurve;
use crate::graph::NodeId;
use crate::simulation::EventDataset;
use crate::weighting::WeightSet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KmError {
    #[error("weighted risk set is zero at event time {0}")]
    ZeroWeightedRiskSet(f64),
    #[error("group is empty")]
    EmptyGroup,
}

/// Survival curve plus the diagnostics that are part of the output contract.
#[derive(Debug, Clone, PartialEq)]
pub struct KmOutput {
    pub survival: StepCurve,
    /// Product factors that went negative under extreme weights and were
    /// clipped to zero.
    pub clipped_factors: usize,
    /// Event times shared by more than one subject (the continuous-time
    /// model excludes these; they can still arrive in CSV input).
    pub tied_event_times: usize,
}

/// Weighted product-limit estimator over one subject group:
///
/// Ŝ_t = Π_{T_i ≤ t} (1 − Σ_{events at T_i} W_{T_i−} / Σ_{at risk} W_{T_i−}).
///
/// Left-limit weights; at-risk means no outcome yet and not censored. Ties
/// are folded into a single factor with summed weighted events.
pub fn weighted_kaplan_meier(
    dataset: &EventDataset,
    weights: &WeightSet,
    outcome: &NodeId,
    group: &[usize],
) -> Result<KmOutput, KmError> {
    if group.is_empty() {
        return Err(KmError::EmptyGroup);
    }
    let mut group: Vec<usize> = group.to_vec();
    group.sort_unstable();

    let censoring = dataset.censoring_node.as_ref();
    // (event time, subject) for observed outcomes; risk end per subject.
    let mut events: Vec<(f64, usize)> = Vec::new();
    let mut risk_end: Vec<(f64, usize)> = Vec::with_capacity(group.len());
    for &i in &group {
        let s = &dataset.subjects[i];
        let c = s.censoring_time(censoring).min(dataset.horizon);
        let event = s.observed_first_jump(outcome, c);
        if let Some(t) = event {
            events.push((t, i));
        }
        risk_end.push((event.unwrap_or(c), i));
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    // Sorted by end time for an O(log n) at-risk cut; subjects at risk at t
    // are those with end >= t.
    risk_end.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut survival = 1.0f64;
    let mut clipped = 0usize;
    let mut tied = 0usize;

    let mut k = 0;
    while k < events.len() {
        let t = events[k].0;
        let mut weighted_events = 0.0;
        let mut d = 0usize;
        while k < events.len() && events[k].0 == t {
            weighted_events += weights.left_limit(events[k].1, t);
            d += 1;
            k += 1;
        }
        if d > 1 {
            tied += 1;
        }
        // Weighted risk set, summed in canonical subject order.
        let cut = risk_end.partition_point(|&(end, _)| end < t);
        let mut at_risk: Vec<usize> = risk_end[cut..].iter().map(|&(_, i)| i).collect();
        at_risk.sort_unstable();
        let weighted_risk: f64 = at_risk.iter().map(|&i| weights.left_limit(i, t)).sum();
        if weighted_risk == 0.0 {
            return Err(KmError::ZeroWeightedRiskSet(t));
        }
        let mut factor = 1.0 - weighted_events / weighted_risk;
        if factor < 0.0 {
            factor = 0.0;
            clipped += 1;
        }
        survival *= factor;
        times.push(t);
        values.push(survival);
    }

    Ok(KmOutput {
        survival: StepCurve::new(1.0, times, values),
        clipped_factors: clipped,
        tied_event_times: tied,
    })
}

/// 1 − Ŝ_t.
pub fn cumulative_incidence(survival: &StepCurve) -> StepCurve {
    survival.map(|s| 1.0 - s)
}

/// Pointwise difference `a − b` on the union of jump times.
pub fn contrast(a: &StepCurve, b: &StepCurve) -> StepCurve {
    a.combine(b, |x, y| x - y)
}

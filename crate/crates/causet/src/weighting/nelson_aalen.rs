//! Nelson–Aalen cumulative hazard estimation.

use crate::graph::NodeId;
use crate::simulation::EventDataset;
use serde::{Deserialize, Serialize};

/// Nondecreasing step function with `A_0 = 0` and positive increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeHazard {
    times: Vec<f64>,
    increments: Vec<f64>,
    /// Running totals, `cumulative[k] = Σ increments[..=k]`.
    cumulative: Vec<f64>,
}

impl CumulativeHazard {
    pub fn new(times: Vec<f64>, increments: Vec<f64>) -> Self {
        debug_assert_eq!(times.len(), increments.len());
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(increments.iter().all(|&d| d > 0.0));
        let mut cumulative = Vec::with_capacity(increments.len());
        let mut total = 0.0;
        for &d in &increments {
            total += d;
            cumulative.push(total);
        }
        CumulativeHazard { times, increments, cumulative }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.times
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// A_t (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// A_{t−}.
    pub fn left_limit_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Increment exactly at `t` (0 when `t` is not a jump time).
    pub fn increment_at(&self, t: f64) -> f64 {
        match self.times.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(k) => self.increments[k],
            Err(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NelsonAalenError {
    #[error("group is empty")]
    EmptyGroup,
}

/// Nelson–Aalen estimator for the first jump of `process` within a subject
/// group (indices into `dataset.subjects`).
///
/// At-risk at `s` means: no own jump before `s` and not censored before `s`;
/// a subject censored exactly at an event time still counts as at risk there.
pub fn nelson_aalen(
    dataset: &EventDataset,
    process: &NodeId,
    group: &[usize],
) -> Result<CumulativeHazard, NelsonAalenError> {
    if group.is_empty() {
        return Err(NelsonAalenError::EmptyGroup);
    }
    let censoring = dataset.censoring_node.as_ref();
    let mut event_times: Vec<f64> = Vec::new();
    let mut risk_ends: Vec<f64> = Vec::with_capacity(group.len());
    for &i in group {
        let s = &dataset.subjects[i];
        let c = s.censoring_time(censoring).min(dataset.horizon);
        let event = s.observed_first_jump(process, c);
        if let Some(t) = event {
            event_times.push(t);
        }
        risk_ends.push(event.unwrap_or(c));
    }
    event_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    risk_ends.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut times = Vec::new();
    let mut increments = Vec::new();
    let mut k = 0;
    while k < event_times.len() {
        let t = event_times[k];
        let mut d = 0usize;
        while k < event_times.len() && event_times[k] == t {
            d += 1;
            k += 1;
        }
        let at_risk = risk_ends.len() - risk_ends.partition_point(|&e| e < t);
        debug_assert!(at_risk >= d);
        times.push(t);
        increments.push(d as f64 / at_risk as f64);
    }
    Ok(CumulativeHazard::new(times, increments))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::SubjectPath;

    fn ds(events: &[(&str, Option<f64>, Option<f64>)]) -> EventDataset {
        // (id, outcome time, censor time)
        let subjects = events
            .iter()
            .map(|(id, event, censor)| {
                let mut s = SubjectPath::new(*id);
                if let Some(t) = event {
                    s.jumps.insert("N".into(), vec![*t]);
                }
                if let Some(t) = censor {
                    s.jumps.insert("C".into(), vec![*t]);
                }
                s
            })
            .collect();
        EventDataset::new(subjects, 10.0, Some("C".into()))
    }

    #[test]
    fn single_event_step() {
        let d = ds(&[("1", Some(1.0), None)]);
        let na = nelson_aalen(&d, &"N".into(), &[0]).unwrap();
        assert_eq!(na.jump_times(), &[1.0]);
        assert_eq!(na.increments(), &[1.0]);
        assert_eq!(na.value_at(0.99), 0.0);
        assert_eq!(na.value_at(1.0), 1.0);
        assert_eq!(na.left_limit_at(1.0), 0.0);
    }

    #[test]
    fn two_events_hand_computed() {
        let d = ds(&[("1", Some(1.0), None), ("2", Some(2.0), None)]);
        let na = nelson_aalen(&d, &"N".into(), &[0, 1]).unwrap();
        assert_eq!(na.increments(), &[0.5, 1.0]);
    }

    #[test]
    fn censoring_shrinks_risk_set() {
        // Subject 2 censored at 1.5 leaves one subject at risk at t=2.
        let d = ds(&[("1", Some(2.0), None), ("2", None, Some(1.5)), ("3", Some(1.0), None)]);
        let na = nelson_aalen(&d, &"N".into(), &[0, 1, 2]).unwrap();
        assert_eq!(na.jump_times(), &[1.0, 2.0]);
        assert_eq!(na.increments(), &[1.0 / 3.0, 1.0]);
    }

    #[test]
    fn no_events_zero_function() {
        let d = ds(&[("1", None, None)]);
        let na = nelson_aalen(&d, &"N".into(), &[0]).unwrap();
        assert!(na.jump_times().is_empty());
        assert_eq!(na.value_at(5.0), 0.0);
    }

    #[test]
    fn empty_group_is_error() {
        let d = ds(&[("1", None, None)]);
        assert_eq!(nelson_aalen(&d, &"N".into(), &[]).unwrap_err(), NelsonAalenError::EmptyGroup);
    }

    #[test]
    fn post_censoring_event_ignored() {
        let d = ds(&[("1", Some(2.0), Some(1.0))]);
        let na = nelson_aalen(&d, &"N".into(), &[0]).unwrap();
        assert!(na.jump_times().is_empty());
    }
}

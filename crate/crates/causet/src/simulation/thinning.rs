//! Forward simulation by thinning.
//!
//! Each process proposes candidate jump times from a homogeneous Poisson
//! stream at its declared bound; candidates are resolved in global time
//! order, so every intensity evaluation sees the true strict past of the
//! whole subject. Acceptance happens with probability rate/bound. Exact
//! candidate ties (possible in floating point) are broken by nudging the
//! later candidate up by one ulp and counting the event in the metadata.

use super::dataset::{DatasetMeta, EventDataset, SubjectPath};
use super::intensity::History;
use super::rng::stream;
use super::spec::SystemSpec;
use crate::graph::NodeId;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("n must be at least 1")]
    ZeroSubjects,
    #[error("intensity of `{process}` returned {rate} above its bound {bound} at t={time}")]
    BoundViolated { process: NodeId, time: f64, rate: f64, bound: f64 },
    #[error("intensity of `{process}` returned a non-finite rate at t={time}")]
    NonFiniteRate { process: NodeId, time: f64 },
    #[error("intensity of `{process}` returned a negative rate at t={time}")]
    NegativeRate { process: NodeId, time: f64 },
}

struct Candidate {
    time: f64,
    accept_u: f64,
}

struct ProcessState {
    node: NodeId,
    rng: ChaCha8Rng,
    bound: f64,
    max_jumps: Option<u32>,
    jumps_taken: u32,
    /// Internal Poisson clock; candidates advance it by Exp(1)/bound.
    clock: f64,
    next: Option<Candidate>,
}

impl ProcessState {
    fn advance(&mut self, horizon: f64) {
        if self.bound <= 0.0 || self.max_jumps.map_or(false, |m| self.jumps_taken >= m) {
            self.next = None;
            return;
        }
        // gen() is in [0, 1); flip to (0, 1] so the log is finite.
        let u: f64 = 1.0 - self.rng.gen::<f64>();
        self.clock += -u.ln() / self.bound;
        let accept_u: f64 = self.rng.gen();
        self.next =
            if self.clock <= horizon { Some(Candidate { time: self.clock, accept_u }) } else { None };
    }
}

/// Simulate `n` independent subjects. Deterministic in `(spec, seed)` and in
/// the number of worker threads.
pub fn simulate_system(spec: &SystemSpec, n: usize, seed: u64) -> Result<EventDataset, SimError> {
    if n == 0 {
        return Err(SimError::ZeroSubjects);
    }
    let results: Result<Vec<(SubjectPath, u64)>, SimError> = (0..n as u64)
        .into_par_iter()
        .map(|subject| simulate_subject(spec, subject, seed))
        .collect();
    let results = results?;
    let ties: u64 = results.iter().map(|(_, t)| t).sum();
    let subjects = results.into_iter().map(|(s, _)| s).collect();
    let mut ds = EventDataset::new(subjects, spec.horizon, spec.censoring_node());
    ds.meta = DatasetMeta { seed, spec_hash: spec.spec_hash(), n, tie_perturbations: ties };
    Ok(ds)
}

fn simulate_subject(
    spec: &SystemSpec,
    subject: u64,
    seed: u64,
) -> Result<(SubjectPath, u64), SimError> {
    let mut baseline: BTreeMap<NodeId, f64> = BTreeMap::new();
    for (pos, (node, sampler)) in spec.baseline.iter().enumerate() {
        let mut rng = stream(seed, "baseline", subject, pos as u64);
        let value = sampler.sample(&mut rng, subject, &baseline);
        baseline.insert(node.clone(), value);
    }

    let mut jumps: BTreeMap<NodeId, Vec<f64>> = BTreeMap::new();
    let mut states: Vec<ProcessState> = spec
        .process_nodes()
        .into_iter()
        .enumerate()
        .map(|(pos, node)| {
            let intensity = &spec.intensities[&node];
            let mut st = ProcessState {
                node,
                rng: stream(seed, "thinning", subject, pos as u64),
                bound: intensity.bound(),
                max_jumps: intensity.max_jumps(),
                jumps_taken: 0,
                clock: 0.0,
                next: None,
            };
            st.advance(spec.horizon);
            st
        })
        .collect();

    let mut last_time = 0.0f64;
    let mut ties = 0u64;
    loop {
        let chosen = states
            .iter()
            .enumerate()
            .filter_map(|(i, st)| st.next.as_ref().map(|c| (i, c.time)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        let Some((i, raw_time)) = chosen else { break };

        let mut t = raw_time;
        if t <= last_time {
            t = last_time.next_up();
            ties += 1;
        }
        if t <= spec.horizon {
            let st = &states[i];
            let rate = {
                let h = History::new(t, &baseline, &jumps);
                spec.intensities[&st.node].rate(t, &h)
            };
            if rate.is_nan() || rate.is_infinite() {
                return Err(SimError::NonFiniteRate { process: st.node.clone(), time: t });
            }
            if rate < 0.0 {
                return Err(SimError::NegativeRate { process: st.node.clone(), time: t });
            }
            if rate > st.bound * (1.0 + 1e-12) {
                return Err(SimError::BoundViolated {
                    process: st.node.clone(),
                    time: t,
                    rate,
                    bound: st.bound,
                });
            }
            let accept = st.next.as_ref().unwrap().accept_u * st.bound < rate;
            if accept {
                jumps.entry(states[i].node.clone()).or_default().push(t);
                states[i].jumps_taken += 1;
            }
            last_time = t;
        }
        states[i].advance(spec.horizon);
    }

    let mut path = SubjectPath::new(subject.to_string());
    path.baseline = baseline;
    path.jumps = jumps;
    Ok((path, ties))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, NodeKind, Role};
    use crate::simulation::intensity::{
        DynIntensity, FamilyIntensity, FnIntensity, IntensityFamily,
    };
    use crate::simulation::spec::BaselineSampler;
    use std::sync::Arc;

    fn constant_spec(rate: f64, max_jumps: Option<u32>, horizon: f64) -> SystemSpec {
        let nodes = vec![(NodeId::from("N"), NodeKind::Process, vec![])];
        let graph = build_graph(&nodes, &[]).unwrap();
        let mut intensities: BTreeMap<NodeId, DynIntensity> = BTreeMap::new();
        intensities.insert(
            "N".into(),
            Arc::new(
                FamilyIntensity::new("N".into(), IntensityFamily::Constant { rate, max_jumps })
                    .unwrap(),
            ),
        );
        SystemSpec::new(graph, vec![], intensities, horizon).unwrap()
    }

    #[test]
    fn zero_rate_never_jumps() {
        let ds = simulate_system(&constant_spec(0.0, None, 1.0), 50, 3).unwrap();
        assert!(ds.subjects.iter().all(|s| s.jumps.is_empty()));
    }

    #[test]
    fn n_zero_is_an_error() {
        assert_eq!(simulate_system(&constant_spec(1.0, None, 1.0), 0, 3), Err(SimError::ZeroSubjects));
    }

    #[test]
    fn deterministic_across_runs_and_thread_counts() {
        let spec = constant_spec(2.0, Some(1), 1.0);
        let a = simulate_system(&spec, 200, 11).unwrap();
        let b = simulate_system(&spec, 200, 11).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| simulate_system(&spec, 200, 11)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn exponential_survival_matches_closed_form() {
        // P(no jump by 1) = exp(-2) for a unit-max constant-rate process.
        let n = 100_000;
        let ds = simulate_system(&constant_spec(2.0, Some(1), 1.0), n, 42).unwrap();
        let none = ds.subjects.iter().filter(|s| s.jumps.is_empty()).count() as f64;
        let p = none / n as f64;
        let expected = (-2.0f64).exp();
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!(
            (p - expected).abs() <= 3.0 * se,
            "p={p}, expected={expected}, 3se={}",
            3.0 * se
        );
    }

    #[test]
    fn bound_violation_is_reported() {
        let nodes = vec![(NodeId::from("N"), NodeKind::Process, vec![])];
        let graph = build_graph(&nodes, &[]).unwrap();
        let mut intensities: BTreeMap<NodeId, DynIntensity> = BTreeMap::new();
        intensities.insert(
            "N".into(),
            Arc::new(FnIntensity {
                target: NodeId::from("N"),
                deps: vec![],
                bound: 1.0,
                max_jumps: None,
                label: "lying-bound".into(),
                f: |_t: f64, _h: &History| 5.0,
            }),
        );
        let spec = SystemSpec::new(graph, vec![], intensities, 1.0).unwrap();
        match simulate_system(&spec, 10, 1) {
            Err(SimError::BoundViolated { process, rate, bound, .. }) => {
                assert_eq!(process, NodeId::from("N"));
                assert_eq!(rate, 5.0);
                assert_eq!(bound, 1.0);
            }
            other => panic!("expected BoundViolated, got {other:?}"),
        }
    }

    #[test]
    fn jump_times_are_globally_distinct() {
        // Two coupled processes at high rate; all recorded times must be
        // strictly increasing within a subject across processes.
        let nodes = vec![
            (NodeId::from("A"), NodeKind::Process, vec![]),
            (NodeId::from("B"), NodeKind::Process, vec![Role::Censoring]),
        ];
        let graph = build_graph(&nodes, &[("A".into(), "B".into())]).unwrap();
        let mut intensities: BTreeMap<NodeId, DynIntensity> = BTreeMap::new();
        for id in ["A", "B"] {
            intensities.insert(
                id.into(),
                Arc::new(
                    FamilyIntensity::new(
                        id.into(),
                        IntensityFamily::Constant { rate: 20.0, max_jumps: None },
                    )
                    .unwrap(),
                ),
            );
        }
        let spec = SystemSpec::new(graph, vec![], intensities, 1.0).unwrap();
        let ds = simulate_system(&spec, 50, 7).unwrap();
        for s in &ds.subjects {
            let mut all: Vec<f64> = s.jumps.values().flatten().copied().collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for w in all.windows(2) {
                assert!(w[0] < w[1], "tied jump times {w:?}");
            }
        }
    }
}

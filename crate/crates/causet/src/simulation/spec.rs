//! System specifications: a graph, baseline samplers, one intensity per
//! process, and a horizon.

use super::intensity::{DynIntensity, History};
use crate::graph::{LocalIndependenceGraph, NodeId, NodeKind, QueryError, Role};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Distribution of one baseline variable, sampled in declaration order with
/// access to previously sampled baseline values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineSampler {
    Constant { value: f64 },
    Bernoulli { p: f64 },
    /// Bernoulli whose success probability depends on a binary parent value.
    BernoulliGiven { parent: NodeId, p0: f64, p1: f64 },
    /// Deterministic by subject index: the first `first_count` subjects get
    /// `value_first`, the rest `value_rest`. Used for fixed group sizes.
    SplitByIndex { first_count: u64, value_first: f64, value_rest: f64 },
}

impl BaselineSampler {
    pub fn sample(
        &self,
        rng: &mut impl Rng,
        subject: u64,
        sampled: &BTreeMap<NodeId, f64>,
    ) -> f64 {
        match self {
            BaselineSampler::Constant { value } => *value,
            BaselineSampler::Bernoulli { p } => {
                if rng.gen::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            BaselineSampler::BernoulliGiven { parent, p0, p1 } => {
                let parent_val = sampled.get(parent).copied().unwrap_or(0.0);
                let p = if parent_val != 0.0 { *p1 } else { *p0 };
                if rng.gen::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            BaselineSampler::SplitByIndex { first_count, value_first, value_rest } => {
                if subject < *first_count {
                    *value_first
                } else {
                    *value_rest
                }
            }
        }
    }

    fn dependencies(&self) -> Vec<NodeId> {
        match self {
            BaselineSampler::BernoulliGiven { parent, .. } => vec![parent.clone()],
            _ => vec![],
        }
    }
}

/// A complete system: validated on construction.
#[derive(Clone)]
pub struct SystemSpec {
    pub graph: LocalIndependenceGraph,
    /// Baseline samplers in sampling order.
    pub baseline: Vec<(NodeId, BaselineSampler)>,
    pub intensities: BTreeMap<NodeId, DynIntensity>,
    pub horizon: f64,
}

impl std::fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemSpec")
            .field("baseline", &self.baseline)
            .field(
                "intensities",
                &self.intensities.iter().map(|(k, v)| (k, v.describe())).collect::<Vec<_>>(),
            )
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("process `{0}` has no intensity")]
    MissingIntensity(NodeId),
    #[error("intensity attached to `{0}`, which is not a process node")]
    IntensityOnNonProcess(NodeId),
    #[error("baseline node `{0}` has no sampler")]
    MissingSampler(NodeId),
    #[error("sampler attached to `{0}`, which is not a baseline node")]
    SamplerOnNonBaseline(NodeId),
    #[error("duplicate component for `{0}`")]
    DuplicateComponent(NodeId),
    #[error("intensity of `{target}` reads `{dep}` outside its graphical closure")]
    DependencyOutsideClosure { target: NodeId, dep: NodeId },
    #[error("sampler of `{target}` reads `{dep}` which is not an earlier baseline node")]
    SamplerDependencyOrder { target: NodeId, dep: NodeId },
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("intensity of `{0}` declares a non-finite or negative bound")]
    BadBound(NodeId),
}

impl SystemSpec {
    pub fn new(
        graph: LocalIndependenceGraph,
        baseline: Vec<(NodeId, BaselineSampler)>,
        intensities: BTreeMap<NodeId, DynIntensity>,
        horizon: f64,
    ) -> Result<Self, SpecError> {
        let spec = SystemSpec { graph, baseline, intensities, horizon };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), SpecError> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(SpecError::BadHorizon(self.horizon));
        }
        let mut seen_baseline: Vec<&NodeId> = Vec::new();
        for (node, sampler) in &self.baseline {
            let idx = self.graph.index_of(node)?;
            if self.graph.kind(idx) != NodeKind::Baseline {
                return Err(SpecError::SamplerOnNonBaseline(node.clone()));
            }
            if seen_baseline.contains(&node) {
                return Err(SpecError::DuplicateComponent(node.clone()));
            }
            for dep in sampler.dependencies() {
                if !seen_baseline.contains(&&dep) {
                    return Err(SpecError::SamplerDependencyOrder {
                        target: node.clone(),
                        dep,
                    });
                }
            }
            seen_baseline.push(node);
        }
        for node in self.graph.nodes() {
            match node.kind {
                NodeKind::Baseline => {
                    if !seen_baseline.contains(&&node.id) {
                        return Err(SpecError::MissingSampler(node.id.clone()));
                    }
                }
                NodeKind::Process => {
                    if !self.intensities.contains_key(&node.id) {
                        return Err(SpecError::MissingIntensity(node.id.clone()));
                    }
                }
            }
        }
        for (node, intensity) in &self.intensities {
            let idx = self.graph.index_of(node)?;
            if self.graph.kind(idx) != NodeKind::Process {
                return Err(SpecError::IntensityOnNonProcess(node.clone()));
            }
            if !(intensity.bound().is_finite() && intensity.bound() >= 0.0) {
                return Err(SpecError::BadBound(node.clone()));
            }
            // Closure = the process itself plus its graphical parents.
            let closure: Vec<usize> = {
                let mut c = self.graph.parent_indices(idx);
                c.push(idx);
                c
            };
            for dep in intensity.dependencies() {
                let dep_idx = self.graph.index_of(&dep)?;
                if !closure.contains(&dep_idx) {
                    return Err(SpecError::DependencyOutsideClosure {
                        target: node.clone(),
                        dep,
                    });
                }
            }
        }
        Ok(())
    }

    /// Process node ids in canonical (sorted) order.
    pub fn process_nodes(&self) -> Vec<NodeId> {
        self.graph.process_indices().into_iter().map(|i| self.graph.id(i).clone()).collect()
    }

    pub fn censoring_node(&self) -> Option<NodeId> {
        self.graph.with_role(Role::Censoring).first().map(|&i| self.graph.id(i).clone())
    }

    /// Stable per-component description hashes; interventions must leave all
    /// but the targeted entry unchanged.
    pub fn component_hashes(&self) -> BTreeMap<NodeId, String> {
        let mut out = BTreeMap::new();
        for (node, sampler) in &self.baseline {
            out.insert(node.clone(), hash_str(&format!("{sampler:?}")));
        }
        for (node, intensity) in &self.intensities {
            out.insert(node.clone(), hash_str(&intensity.describe()));
        }
        out
    }

    /// Hash of the whole specification, recorded in dataset metadata.
    pub fn spec_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.graph.to_text());
        for (node, sampler) in &self.baseline {
            hasher.update(format!("baseline:{node}:{sampler:?}\n"));
        }
        for (node, intensity) in &self.intensities {
            hasher.update(format!("intensity:{node}:{}\n", intensity.describe()));
        }
        hasher.update(format!("horizon:{}", self.horizon));
        hex(&hasher.finalize())
    }

    /// Evaluate the intensity of `process` at `t` along a subject path.
    pub fn rate_along(
        &self,
        process: &NodeId,
        t: f64,
        baseline: &BTreeMap<NodeId, f64>,
        jumps: &BTreeMap<NodeId, Vec<f64>>,
    ) -> f64 {
        let h = History::new(t, baseline, jumps);
        self.intensities[process].rate(t, &h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InterveneError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("`{0}` is not a process node")]
    NotProcess(NodeId),
    #[error("replacement intensity for `{target}` reads latent node `{dep}`")]
    IllegalDependency { target: NodeId, dep: NodeId },
}

/// Replace the local characteristic of `target`, leaving every other
/// component untouched.
///
/// An enforceable intervention is driven by observable information, so the
/// replacement may not read latent-tagged nodes beyond those the current
/// intensity already reads (a predictable multiplier on the existing rate is
/// always admissible).
pub fn intervene(
    spec: &SystemSpec,
    target: &NodeId,
    new_intensity: DynIntensity,
) -> Result<SystemSpec, InterveneError> {
    let idx = spec.graph.index_of(target)?;
    if spec.graph.kind(idx) != NodeKind::Process {
        return Err(InterveneError::NotProcess(target.clone()));
    }
    let existing_deps =
        spec.intensities.get(target).map(|i| i.dependencies()).unwrap_or_default();
    for dep in new_intensity.dependencies() {
        let dep_idx = spec.graph.index_of(&dep)?;
        if spec.graph.node(dep_idx).roles.contains(&Role::Latent) && !existing_deps.contains(&dep)
        {
            return Err(InterveneError::IllegalDependency { target: target.clone(), dep });
        }
    }
    let mut out = spec.clone();
    out.intensities.insert(target.clone(), new_intensity);
    Ok(out)
}

/// Scale the current intensity of `target` by a predictable factor; `rho`
/// receives the same strict-past view as the intensity itself.
pub fn scaled_intensity(
    spec: &SystemSpec,
    target: &NodeId,
    rho: f64,
) -> DynIntensity {
    let base = Arc::clone(&spec.intensities[target]);
    let label = format!("scaled:{rho}:{}", base.describe());
    Arc::new(super::intensity::FnIntensity {
        target: target.clone(),
        deps: base.dependencies(),
        bound: base.bound() * rho,
        max_jumps: base.max_jumps(),
        label,
        f: move |t: f64, h: &History| rho * base.rate(t, h),
    })
}

fn hash_str(s: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(s.as_bytes());
    hex(&hasher.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::simulation::intensity::{FamilyIntensity, IntensityFamily, ZeroIntensity};

    fn one_process_spec() -> SystemSpec {
        let nodes = vec![
            (NodeId::from("U"), NodeKind::Baseline, vec![Role::Latent]),
            (NodeId::from("N"), NodeKind::Process, vec![]),
        ];
        let graph = build_graph(&nodes, &[("U".into(), "N".into())]).unwrap();
        let mut intensities: BTreeMap<NodeId, DynIntensity> = BTreeMap::new();
        intensities.insert(
            "N".into(),
            Arc::new(
                FamilyIntensity::new(
                    "N".into(),
                    IntensityFamily::Constant { rate: 1.0, max_jumps: Some(1) },
                )
                .unwrap(),
            ),
        );
        SystemSpec::new(
            graph,
            vec![("U".into(), BaselineSampler::Bernoulli { p: 0.5 })],
            intensities,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn intervention_replaces_only_the_target() {
        let spec = one_process_spec();
        let before = spec.component_hashes();
        let new = intervene(&spec, &"N".into(), Arc::new(ZeroIntensity { target: "N".into() }))
            .unwrap();
        let after = new.component_hashes();
        assert_ne!(before[&NodeId::from("N")], after[&NodeId::from("N")]);
        assert_eq!(before[&NodeId::from("U")], after[&NodeId::from("U")]);
    }

    #[test]
    fn intervention_may_not_add_latent_reads() {
        let spec = one_process_spec();
        let bad: DynIntensity = Arc::new(super::super::intensity::FnIntensity {
            target: NodeId::from("N"),
            deps: vec!["U".into()],
            bound: 1.0,
            max_jumps: None,
            label: "reads-latent".into(),
            f: |_t: f64, h: &History| h.baseline(&"U".into()),
        });
        // The constant-rate intensity of N never read U, so adding it is out.
        assert_eq!(
            intervene(&spec, &"N".into(), bad).unwrap_err(),
            InterveneError::IllegalDependency { target: "N".into(), dep: "U".into() }
        );
        // A predictable multiplier on the existing rate is always fine.
        let scaled = scaled_intensity(&spec, &"N".into(), 0.5);
        assert!(intervene(&spec, &"N".into(), scaled).is_ok());
    }

    #[test]
    fn missing_intensity_is_rejected() {
        let nodes = vec![(NodeId::from("N"), NodeKind::Process, vec![])];
        let graph = build_graph(&nodes, &[]).unwrap();
        let err = SystemSpec::new(graph, vec![], BTreeMap::new(), 1.0).unwrap_err();
        assert_eq!(err, SpecError::MissingIntensity("N".into()));
    }
}

//! The combined identifiability verdict.
//!
//! Given role assignments — one treatment process, outcome processes, one
//! censoring process, covariates that are kept (`BaselineKeep`) or
//! marginalised out (`Marginalize`), and everything else latent — the checker
//! evaluates, in order:
//!
//! 1. the censoring node is childless (independent censoring in the full
//!    model);
//! 2. the censoring node is δ-separated from the retained and marginalised
//!    processes given the retained nodes and covariates;
//! 3. the latent set is eliminable with respect to the treatment.
//!
//! Identification holds iff all three do, in which case the effect of a
//! bounded intensity intervention on the treatment, combined with preventing
//! censoring, is estimable from stopped observable data via the combined
//! weights computed in [`crate::weighting`].

use super::eliminable::{eliminable, EliminabilityWitness, EliminableError};
use super::{delta_separated, SeparationError, TrailJson};
use crate::graph::{LocalIndependenceGraph, NodeId, NodeKind, QueryError, Role};
use serde::{Deserialize, Serialize};

/// Resolved role assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub treatment: NodeId,
    pub outcomes: Vec<NodeId>,
    pub censoring: NodeId,
    pub baseline_keep: Vec<NodeId>,
    pub marginalize: Vec<NodeId>,
    pub latent: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RoleError {
    #[error("no node tagged {0}")]
    Missing(&'static str),
    #[error("node `{0}` tagged {1} must be a process")]
    NotProcess(NodeId, &'static str),
    #[error("node `{0}` tagged baseline_keep must be a baseline variable")]
    KeepNotBaseline(NodeId),
    #[error("node `{0}` carries conflicting roles")]
    Conflicting(NodeId),
    #[error(transparent)]
    Query(#[from] QueryError),
}

impl Roles {
    /// Read roles off a tagged graph. Untagged nodes default to latent.
    pub fn from_graph(g: &LocalIndependenceGraph) -> Result<Self, RoleError> {
        let mut treatment = None;
        let mut censoring = None;
        let mut outcomes = Vec::new();
        let mut baseline_keep = Vec::new();
        let mut marginalize = Vec::new();
        let mut latent = Vec::new();
        for node in g.nodes() {
            let primary: Vec<Role> = node
                .roles
                .iter()
                .copied()
                .filter(|r| *r != Role::Latent || node.roles.len() == 1)
                .collect();
            if primary.len() > 1 {
                return Err(RoleError::Conflicting(node.id.clone()));
            }
            match primary.first() {
                Some(Role::Treatment) => {
                    if node.kind != NodeKind::Process {
                        return Err(RoleError::NotProcess(node.id.clone(), "treatment"));
                    }
                    treatment = Some(node.id.clone());
                }
                Some(Role::Outcome) => {
                    if node.kind != NodeKind::Process {
                        return Err(RoleError::NotProcess(node.id.clone(), "outcome"));
                    }
                    outcomes.push(node.id.clone());
                }
                Some(Role::Censoring) => censoring = Some(node.id.clone()),
                Some(Role::BaselineKeep) => {
                    if node.kind != NodeKind::Baseline {
                        return Err(RoleError::KeepNotBaseline(node.id.clone()));
                    }
                    baseline_keep.push(node.id.clone());
                }
                Some(Role::Marginalize) => marginalize.push(node.id.clone()),
                Some(Role::Latent) | None => latent.push(node.id.clone()),
            }
        }
        let treatment = treatment.ok_or(RoleError::Missing("treatment"))?;
        let censoring = censoring.ok_or(RoleError::Missing("censoring"))?;
        if outcomes.is_empty() {
            return Err(RoleError::Missing("outcome"));
        }
        Ok(Roles { treatment, outcomes, censoring, baseline_keep, marginalize, latent })
    }

    /// Retained nodes: treatment, outcomes and kept baseline covariates.
    pub fn v0(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = vec![self.treatment.clone()];
        v.extend(self.outcomes.iter().cloned());
        v.extend(self.baseline_keep.iter().cloned());
        v.sort();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Theorem1Error {
    #[error(transparent)]
    Role(#[from] RoleError),
    #[error(transparent)]
    Separation(#[from] SeparationError),
    #[error(transparent)]
    Eliminable(#[from] EliminableError),
}

/// Full identifiability verdict with witnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub roles: Roles,
    /// Censoring node is childless.
    pub censoring_independent_full_model: bool,
    /// Censoring δ-separated from retained and marginalised processes.
    pub condition_i: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_i_witness: Option<TrailJson>,
    /// Latent set eliminable with respect to the treatment.
    pub condition_ii: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_ii_witness: Option<EliminabilityWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_ii_note: Option<String>,
    pub overall: bool,
    /// Node sets generating the filtrations of the censoring and treatment
    /// intensities entering the combined weights.
    pub required_weight_filtrations: WeightFiltrations,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightFiltrations {
    pub censoring_intensity: Vec<NodeId>,
    pub treatment_intensity: Vec<NodeId>,
}

/// Evaluate the three identifiability conditions on a role-tagged graph.
pub fn check_theorem1(g: &LocalIndependenceGraph) -> Result<IdentifiabilityReport, Theorem1Error> {
    let roles = Roles::from_graph(g)?;
    check_theorem1_with_roles(g, roles)
}

pub fn check_theorem1_with_roles(
    g: &LocalIndependenceGraph,
    roles: Roles,
) -> Result<IdentifiabilityReport, Theorem1Error> {
    let censoring_idx = g.index_of(&roles.censoring).map_err(SeparationError::from)?;
    let censoring_independent_full_model = g.child_indices(censoring_idx).is_empty();

    // Condition (i): N^c ↛ processes(N0 ∪ L) | (V0 ∪ L).
    let v0 = roles.v0();
    let mut targets: Vec<NodeId> = vec![roles.treatment.clone()];
    targets.extend(roles.outcomes.iter().cloned());
    for id in &roles.marginalize {
        if g.kind(g.index_of(id).map_err(SeparationError::from)?) == NodeKind::Process {
            targets.push(id.clone());
        }
    }
    targets.sort();
    targets.dedup();
    let mut extra: Vec<NodeId> = v0.iter().chain(&roles.marginalize).cloned().collect();
    extra.sort();
    extra.dedup();
    extra.retain(|id| !targets.contains(id));
    let cond_i = delta_separated(g, std::slice::from_ref(&roles.censoring), &targets, &extra)?;

    // Condition (ii): latent set eliminable w.r.t. (treatment, L ∪ V0 \ {x}).
    let mut v0_rest: Vec<NodeId> =
        v0.iter().filter(|id| **id != roles.treatment).cloned().collect();
    v0_rest.extend(roles.marginalize.iter().cloned());
    v0_rest.sort();
    v0_rest.dedup();
    let (condition_ii, condition_ii_witness, condition_ii_note) =
        match eliminable(g, &roles.latent, &roles.treatment, &v0_rest) {
            Ok(Some(w)) => (true, Some(w), None),
            Ok(None) => (false, None, Some("no ordered partition satisfies either block condition".to_owned())),
            Err(EliminableError::HeuristicInconclusive { size }) => (
                false,
                None,
                Some(format!(
                    "singleton-block search failed for {size} latent nodes; inconclusive"
                )),
            ),
            Err(e) => return Err(e.into()),
        };

    let overall = censoring_independent_full_model && cond_i.separated && condition_ii;
    let mut filtration: Vec<NodeId> = v0.iter().chain(&roles.marginalize).cloned().collect();
    filtration.push(roles.censoring.clone());
    filtration.sort();
    filtration.dedup();

    Ok(IdentifiabilityReport {
        censoring_independent_full_model,
        condition_i: cond_i.separated,
        condition_i_witness: cond_i.witness.as_ref().map(|t| TrailJson::new(t, g)),
        condition_ii,
        condition_ii_witness,
        condition_ii_note,
        overall,
        required_weight_filtrations: WeightFiltrations {
            censoring_intensity: filtration.clone(),
            treatment_intensity: filtration,
        },
        roles,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MarginalSearchError {
    #[error("subset search supports at most {max} candidate nodes, got {got}")]
    TooManyCandidates { max: usize, got: usize },
    #[error(transparent)]
    Theorem1(#[from] Theorem1Error),
    #[error(transparent)]
    Query(#[from] QueryError),
}

const MARGINAL_SEARCH_LIMIT: usize = 12;

/// Experimental: brute-force search for a subset `L` of `candidates` such
/// that tagging `L` as marginalised covariates and the rest of `candidates`
/// as latent makes the identifiability check pass. Returns the first passing
/// subset in (size, lexicographic) order.
pub fn find_sufficient_marginal_set(
    g: &LocalIndependenceGraph,
    mut roles: Roles,
    candidates: &[NodeId],
) -> Result<Option<Vec<NodeId>>, MarginalSearchError> {
    let cand = g.resolve(candidates)?;
    if cand.len() > MARGINAL_SEARCH_LIMIT {
        return Err(MarginalSearchError::TooManyCandidates {
            max: MARGINAL_SEARCH_LIMIT,
            got: cand.len(),
        });
    }
    let base_latent: Vec<NodeId> = roles
        .latent
        .iter()
        .filter(|id| !candidates.contains(id))
        .cloned()
        .collect();
    let mut masks: Vec<u32> = (0..(1u32 << cand.len())).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        let chosen: Vec<NodeId> = cand
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &v)| g.id(v).clone())
            .collect();
        let mut latent = base_latent.clone();
        latent.extend(
            cand.iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) == 0)
                .map(|(_, &v)| g.id(v).clone()),
        );
        roles.marginalize = chosen.clone();
        roles.latent = latent;
        let report = check_theorem1_with_roles(g, roles.clone())?;
        if report.overall {
            return Ok(Some(chosen));
        }
    }
    Ok(None)
}

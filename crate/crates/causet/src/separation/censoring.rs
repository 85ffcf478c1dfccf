//! Graphical independent-censoring checks.

use super::{delta_separated, SeparationError, SeparationVerdict, Trail};
use crate::graph::{LocalIndependenceGraph, NodeId, NodeKind, Role};
use serde::{Deserialize, Serialize};

/// Which reading of independent censoring to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensoringScope {
    /// The whole model: the censoring node has no children.
    WholeModel,
    /// The submodel induced by `A ∪ B ∪ {censoring}`: the censoring node is
    /// δ-separated from the processes of `A ∪ B` by `A ∪ B` alone.
    Submodel,
    /// Censoring independent for `A` given `A ∪ B`.
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CensoringError {
    #[error("graph has no node tagged censoring")]
    NoCensoringNode,
    #[error(transparent)]
    Separation(#[from] SeparationError),
}

/// Verdict plus an open trail when the check fails for a separation reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensoringVerdict {
    pub independent: bool,
    pub witness: Option<Trail>,
}

pub fn check_independent_censoring(
    g: &LocalIndependenceGraph,
    a: &[NodeId],
    b: &[NodeId],
    scope: CensoringScope,
) -> Result<CensoringVerdict, CensoringError> {
    let censoring = *g.with_role(Role::Censoring).first().ok_or(CensoringError::NoCensoringNode)?;
    let c_id = g.id(censoring).clone();
    match scope {
        CensoringScope::WholeModel => {
            let independent = g.child_indices(censoring).is_empty();
            Ok(CensoringVerdict { independent, witness: None })
        }
        CensoringScope::Submodel => {
            // N^c ↛ processes(A ∪ B) | (A ∪ B), checked in the full graph.
            let mut scope_ids: Vec<NodeId> = a.to_vec();
            scope_ids.extend_from_slice(b);
            scope_ids.sort();
            scope_ids.dedup();
            let mut targets = Vec::new();
            let mut extra = Vec::new();
            for id in scope_ids {
                match g.kind(g.index_of(&id).map_err(SeparationError::from)?) {
                    NodeKind::Process => targets.push(id),
                    NodeKind::Baseline => extra.push(id),
                }
            }
            let v = delta_separated(g, std::slice::from_ref(&c_id), &targets, &extra)?;
            Ok(verdict(v))
        }
        CensoringScope::Conditional => {
            let v = delta_separated(g, std::slice::from_ref(&c_id), a, b)?;
            Ok(verdict(v))
        }
    }
}

fn verdict(v: SeparationVerdict) -> CensoringVerdict {
    CensoringVerdict { independent: v.separated, witness: v.witness }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    #[test]
    fn whole_model_checks_childlessness() {
        let nodes = vec![
            (NodeId::from("Nc"), NodeKind::Process, vec![Role::Censoring]),
            (NodeId::from("Ny"), NodeKind::Process, vec![]),
        ];
        let ok = build_graph(&nodes, &[("Ny".into(), "Nc".into())]).unwrap();
        assert!(check_independent_censoring(&ok, &[], &[], CensoringScope::WholeModel)
            .unwrap()
            .independent);
        let bad = build_graph(&nodes, &[("Nc".into(), "Ny".into())]).unwrap();
        assert!(!check_independent_censoring(&bad, &[], &[], CensoringScope::WholeModel)
            .unwrap()
            .independent);
    }

    #[test]
    fn missing_censoring_role_is_an_error() {
        let nodes = vec![(NodeId::from("Ny"), NodeKind::Process, vec![])];
        let g = build_graph(&nodes, &[]).unwrap();
        assert_eq!(
            check_independent_censoring(&g, &[], &[], CensoringScope::WholeModel).unwrap_err(),
            CensoringError::NoCensoringNode
        );
    }
}

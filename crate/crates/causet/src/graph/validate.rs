//! Structural validation of local independence graphs.

use super::{Edge, LocalIndependenceGraph, Node, NodeId, NodeKind, Role};
use std::collections::BTreeSet;

/// A single violated structural rule.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, serde::Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    #[error("duplicate node id `{id}`")]
    DuplicateNode { id: NodeId },
    #[error("empty node id")]
    EmptyNodeId,
    #[error("edge endpoint `{id}` is not a declared node")]
    UnknownEndpoint { id: NodeId },
    #[error("self-edge on `{id}`")]
    SelfEdge { id: NodeId },
    #[error("duplicate edge `{from}` -> `{to}`")]
    DuplicateEdge { from: NodeId, to: NodeId },
    #[error("edge from process `{from}` to baseline `{to}`")]
    ProcessToBaselineEdge { from: NodeId, to: NodeId },
    #[error("cycle among baseline nodes through `{id}`")]
    BaselineCycle { id: NodeId },
    #[error("more than one node tagged censoring (`{first}`, `{second}`)")]
    MultipleCensoringNodes { first: NodeId, second: NodeId },
    #[error("more than one node tagged treatment (`{first}`, `{second}`)")]
    MultipleTreatmentNodes { first: NodeId, second: NodeId },
    #[error("censoring node `{id}` is not a process")]
    CensoringNotProcess { id: NodeId },
}

/// All violations found in one input; building reports every broken rule,
/// not just the first.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid local independence graph: {}", self.describe())]
pub struct GraphError {
    pub violations: Vec<Violation>,
}

impl GraphError {
    fn describe(&self) -> String {
        self.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
    }
}

/// Validate node and edge lists and assemble a graph.
///
/// Nodes are `(id, kind, roles)` triples; edges are `(from, to)` pairs.
pub fn build_graph(
    nodes: &[(NodeId, NodeKind, Vec<Role>)],
    edges: &[(NodeId, NodeId)],
) -> Result<LocalIndependenceGraph, GraphError> {
    let mut violations = Vec::new();

    let mut sorted: Vec<Node> = nodes
        .iter()
        .map(|(id, kind, roles)| Node {
            id: id.clone(),
            kind: *kind,
            roles: roles.iter().copied().collect::<BTreeSet<Role>>(),
        })
        .collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for w in sorted.windows(2) {
        if w[0].id == w[1].id {
            violations.push(Violation::DuplicateNode { id: w[0].id.clone() });
        }
    }
    sorted.dedup_by(|a, b| a.id == b.id);
    for n in &sorted {
        if n.id.as_str().is_empty() {
            violations.push(Violation::EmptyNodeId);
        }
    }

    let index_of = |id: &NodeId| sorted.binary_search_by(|n| n.id.cmp(id)).ok();

    // Role invariants: at most one censoring node, at most one treatment
    // node, and the censoring node must be a process.
    let mut censoring: Option<&NodeId> = None;
    let mut treatment: Option<&NodeId> = None;
    for n in &sorted {
        if n.roles.contains(&Role::Censoring) {
            if n.kind != NodeKind::Process {
                violations.push(Violation::CensoringNotProcess { id: n.id.clone() });
            }
            match censoring {
                None => censoring = Some(&n.id),
                Some(first) => violations.push(Violation::MultipleCensoringNodes {
                    first: first.clone(),
                    second: n.id.clone(),
                }),
            }
        }
        if n.roles.contains(&Role::Treatment) {
            match treatment {
                None => treatment = Some(&n.id),
                Some(first) => violations.push(Violation::MultipleTreatmentNodes {
                    first: first.clone(),
                    second: n.id.clone(),
                }),
            }
        }
    }

    let mut resolved: Vec<Edge> = Vec::new();
    for (from, to) in edges {
        let (fi, ti) = match (index_of(from), index_of(to)) {
            (Some(f), Some(t)) => (f, t),
            (f, t) => {
                if f.is_none() {
                    violations.push(Violation::UnknownEndpoint { id: from.clone() });
                }
                if t.is_none() {
                    violations.push(Violation::UnknownEndpoint { id: to.clone() });
                }
                continue;
            }
        };
        if fi == ti {
            violations.push(Violation::SelfEdge { id: from.clone() });
            continue;
        }
        if sorted[fi].kind == NodeKind::Process && sorted[ti].kind == NodeKind::Baseline {
            violations.push(Violation::ProcessToBaselineEdge { from: from.clone(), to: to.clone() });
            continue;
        }
        resolved.push(Edge { from: fi, to: ti });
    }
    resolved.sort_unstable();
    let before = resolved.len();
    resolved.dedup();
    if resolved.len() != before {
        // Re-scan to report each duplicated pair once.
        let mut seen = BTreeSet::new();
        let mut reported = BTreeSet::new();
        for (from, to) in edges {
            if let (Some(fi), Some(ti)) = (index_of(from), index_of(to)) {
                if fi != ti && !seen.insert((fi, ti)) && reported.insert((fi, ti)) {
                    violations.push(Violation::DuplicateEdge {
                        from: sorted[fi].id.clone(),
                        to: sorted[ti].id.clone(),
                    });
                }
            }
        }
    }

    // The baseline part must be acyclic; a pair of opposite edges between two
    // baseline nodes is a 2-cycle and is caught here.
    for id in baseline_cycle_members(&sorted, &resolved) {
        violations.push(Violation::BaselineCycle { id });
    }

    if violations.is_empty() {
        Ok(LocalIndependenceGraph::from_validated(sorted, resolved))
    } else {
        Err(GraphError { violations })
    }
}

/// Baseline nodes that sit on a directed cycle of baseline-baseline edges.
fn baseline_cycle_members(nodes: &[Node], edges: &[Edge]) -> Vec<NodeId> {
    let n = nodes.len();
    let mut adj = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for e in edges {
        if nodes[e.from].kind == NodeKind::Baseline && nodes[e.to].kind == NodeKind::Baseline {
            adj[e.from].push(e.to);
            indeg[e.to] += 1;
        }
    }
    // Kahn's algorithm; whatever cannot be peeled lies on a cycle.
    let mut queue: Vec<usize> =
        (0..n).filter(|&i| nodes[i].kind == NodeKind::Baseline && indeg[i] == 0).collect();
    let mut removed = vec![false; n];
    while let Some(u) = queue.pop() {
        removed[u] = true;
        for &w in &adj[u] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push(w);
            }
        }
    }
    (0..n)
        .filter(|&i| nodes[i].kind == NodeKind::Baseline && !removed[i] && indeg[i] > 0)
        .map(|i| nodes[i].id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, kind: NodeKind) -> (NodeId, NodeKind, Vec<Role>) {
        (NodeId::from(id), kind, vec![])
    }

    fn edge(a: &str, b: &str) -> (NodeId, NodeId) {
        (NodeId::from(a), NodeId::from(b))
    }

    #[test]
    fn baseline_two_cycle_rejected() {
        let err = build_graph(
            &[node("X", NodeKind::Baseline), node("Z", NodeKind::Baseline)],
            &[edge("X", "Z"), edge("Z", "X")],
        )
        .unwrap_err();
        assert!(err
            .violations
            .iter()
            .all(|v| matches!(v, Violation::BaselineCycle { .. })));
        assert_eq!(err.violations.len(), 2);
    }

    #[test]
    fn process_to_baseline_rejected() {
        let err = build_graph(
            &[node("N", NodeKind::Process), node("X", NodeKind::Baseline)],
            &[edge("N", "X")],
        )
        .unwrap_err();
        assert_eq!(
            err.violations,
            vec![Violation::ProcessToBaselineEdge { from: "N".into(), to: "X".into() }]
        );
    }

    #[test]
    fn process_two_cycle_allowed() {
        let g = build_graph(
            &[node("A", NodeKind::Process), node("B", NodeKind::Process)],
            &[edge("A", "B"), edge("B", "A")],
        )
        .unwrap();
        assert_eq!(g.edges().len(), 2);
    }

    #[test]
    fn all_violations_reported_together() {
        let err = build_graph(
            &[
                node("A", NodeKind::Process),
                node("A", NodeKind::Process),
                node("X", NodeKind::Baseline),
            ],
            &[edge("A", "A"), edge("A", "X"), edge("A", "B"), edge("A", "X")],
        )
        .unwrap_err();
        assert!(err.violations.contains(&Violation::DuplicateNode { id: "A".into() }));
        assert!(err.violations.contains(&Violation::SelfEdge { id: "A".into() }));
        assert!(err
            .violations
            .contains(&Violation::ProcessToBaselineEdge { from: "A".into(), to: "X".into() }));
        assert!(err.violations.contains(&Violation::UnknownEndpoint { id: "B".into() }));
    }

    #[test]
    fn duplicate_identical_edge_rejected() {
        let err = build_graph(
            &[node("A", NodeKind::Process), node("B", NodeKind::Process)],
            &[edge("A", "B"), edge("A", "B")],
        )
        .unwrap_err();
        assert_eq!(
            err.violations,
            vec![Violation::DuplicateEdge { from: "A".into(), to: "B".into() }]
        );
    }

    #[test]
    fn censoring_role_invariants() {
        let err = build_graph(
            &[
                ("C1".into(), NodeKind::Process, vec![Role::Censoring]),
                ("C2".into(), NodeKind::Process, vec![Role::Censoring]),
                ("X".into(), NodeKind::Baseline, vec![]),
            ],
            &[],
        )
        .unwrap_err();
        assert_eq!(
            err.violations,
            vec![Violation::MultipleCensoringNodes { first: "C1".into(), second: "C2".into() }]
        );

        let err = build_graph(&[("X".into(), NodeKind::Baseline, vec![Role::Censoring])], &[])
            .unwrap_err();
        assert_eq!(err.violations, vec![Violation::CensoringNotProcess { id: "X".into() }]);
    }
}

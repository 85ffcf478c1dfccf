//! Local independence graphs.
//!
//! Nodes are either baseline variables or counting processes; all edges are
//! directed. Between two process nodes up to one edge per direction is
//! allowed, between two baseline nodes at most one edge, no edge may point
//! from a process to a baseline variable, and the baseline part must be a
//! DAG. [`build_graph`] validates all of these rules at once and reports
//! every violation rather than the first.

mod io;
mod validate;

pub use io::{GraphJson, ParseError};
pub use validate::{build_graph, GraphError, Violation};

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Short unique label identifying a node within a graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

/// Baseline variable or counting process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Baseline,
    Process,
}

/// Optional role markers used by the identifiability checker.
///
/// Roles are metadata only: the separation engine takes explicit node-set
/// arguments and never reads them. `BaselineKeep` marks baseline covariates
/// that stay in the conditioning set of interest, `Marginalize` marks
/// covariates (baseline or process) that are observed but marginalised out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Treatment,
    Outcome,
    Censoring,
    Latent,
    BaselineKeep,
    Marginalize,
}

/// Directed edge, stored as node indices into the owning graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub roles: BTreeSet<Role>,
}

/// A validated local independence graph.
///
/// Immutable after construction; node indices are stable and nodes are held
/// sorted by id, so identical inputs produce identical graphs regardless of
/// the order nodes and edges were listed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalIndependenceGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

/// Errors from node-set queries.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
}

impl LocalIndependenceGraph {
    pub(crate) fn from_validated(nodes: Vec<Node>, edges: Vec<Edge>) -> Self {
        let n = nodes.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            out_edges[e.from].push(k);
            in_edges[e.to].push(k);
        }
        LocalIndependenceGraph { nodes, edges, out_edges, in_edges }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn id(&self, idx: usize) -> &NodeId {
        &self.nodes[idx].id
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.nodes[idx].kind
    }

    /// Index of the node with the given id.
    pub fn index_of(&self, id: &NodeId) -> Result<usize, QueryError> {
        self.nodes
            .binary_search_by(|n| n.id.cmp(id))
            .map_err(|_| QueryError::UnknownNode(id.clone()))
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.index_of(id).is_ok()
    }

    /// Resolve a list of ids to a sorted, deduplicated index set.
    pub fn resolve(&self, ids: &[NodeId]) -> Result<Vec<usize>, QueryError> {
        let mut out: Vec<usize> = ids.iter().map(|id| self.index_of(id)).collect::<Result<_, _>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.out_edges[from].iter().any(|&k| self.edges[k].to == to)
    }

    /// Parent indices of `v`, sorted.
    pub fn parent_indices(&self, v: usize) -> Vec<usize> {
        let mut p: Vec<usize> = self.in_edges[v].iter().map(|&k| self.edges[k].from).collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    /// Child indices of `v`, sorted.
    pub fn child_indices(&self, v: usize) -> Vec<usize> {
        let mut c: Vec<usize> = self.out_edges[v].iter().map(|&k| self.edges[k].to).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn parents(&self, v: &NodeId) -> Result<BTreeSet<NodeId>, QueryError> {
        let idx = self.index_of(v)?;
        Ok(self.parent_indices(idx).into_iter().map(|i| self.nodes[i].id.clone()).collect())
    }

    pub fn children(&self, v: &NodeId) -> Result<BTreeSet<NodeId>, QueryError> {
        let idx = self.index_of(v)?;
        Ok(self.child_indices(idx).into_iter().map(|i| self.nodes[i].id.clone()).collect())
    }

    /// All nodes reachable from `v` by directed edges of any kind, excluding
    /// `v` itself unless a cycle through process edges returns to it.
    pub fn descendant_indices(&self, v: usize) -> Vec<usize> {
        self.reach(v, |g, u| g.child_indices(u))
    }

    pub fn ancestor_indices(&self, v: usize) -> Vec<usize> {
        self.reach(v, |g, u| g.parent_indices(u))
    }

    fn reach(&self, v: usize, step: impl Fn(&Self, usize) -> Vec<usize>) -> Vec<usize> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = step(self, v);
        let mut out = Vec::new();
        while let Some(u) = stack.pop() {
            if seen[u] {
                continue;
            }
            seen[u] = true;
            out.push(u);
            stack.extend(step(self, u));
        }
        out.sort_unstable();
        out
    }

    pub fn descendants(&self, v: &NodeId) -> Result<BTreeSet<NodeId>, QueryError> {
        let idx = self.index_of(v)?;
        Ok(self.descendant_indices(idx).into_iter().map(|i| self.nodes[i].id.clone()).collect())
    }

    pub fn ancestors(&self, v: &NodeId) -> Result<BTreeSet<NodeId>, QueryError> {
        let idx = self.index_of(v)?;
        Ok(self.ancestor_indices(idx).into_iter().map(|i| self.nodes[i].id.clone()).collect())
    }

    /// Sorted descendant-or-self masks for every node, used by the blocking
    /// rule for colliders.
    pub(crate) fn descendant_or_self_masks(&self) -> Vec<Vec<bool>> {
        let n = self.nodes.len();
        (0..n)
            .map(|v| {
                let mut mask = vec![false; n];
                mask[v] = true;
                for d in self.descendant_indices(v) {
                    mask[d] = true;
                }
                mask
            })
            .collect()
    }

    /// The induced subgraph on `keep`: nodes in `keep`, edges with both
    /// endpoints in `keep`. The result is re-validated.
    pub fn induced_subgraph(&self, keep: &[NodeId]) -> Result<LocalIndependenceGraph, QueryError> {
        let keep_idx = self.resolve(keep)?;
        let mut in_keep = vec![false; self.nodes.len()];
        for &i in &keep_idx {
            in_keep[i] = true;
        }
        let nodes: Vec<(NodeId, NodeKind, Vec<Role>)> = keep_idx
            .iter()
            .map(|&i| {
                let n = &self.nodes[i];
                (n.id.clone(), n.kind, n.roles.iter().copied().collect())
            })
            .collect();
        let edges: Vec<(NodeId, NodeId)> = self
            .edges
            .iter()
            .filter(|e| in_keep[e.from] && in_keep[e.to])
            .map(|e| (self.nodes[e.from].id.clone(), self.nodes[e.to].id.clone()))
            .collect();
        Ok(build_graph(&nodes, &edges).expect("induced subgraph of a valid graph is valid"))
    }

    /// Node indices carrying the given role.
    pub fn with_role(&self, role: Role) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].roles.contains(&role)).collect()
    }

    pub fn process_indices(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].kind == NodeKind::Process).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(nodes: &[(&str, NodeKind)], edges: &[(&str, &str)]) -> LocalIndependenceGraph {
        let nodes: Vec<(NodeId, NodeKind, Vec<Role>)> =
            nodes.iter().map(|(id, k)| (NodeId::from(*id), *k, vec![])).collect();
        let edges: Vec<(NodeId, NodeId)> =
            edges.iter().map(|(a, b)| (NodeId::from(*a), NodeId::from(*b))).collect();
        build_graph(&nodes, &edges).unwrap()
    }

    fn ids(set: &BTreeSet<NodeId>) -> Vec<&str> {
        set.iter().map(|n| n.as_str()).collect()
    }

    #[test]
    fn parents_of_display_2_graph() {
        // N1 -> N2, N1 -> N3, N2 -> N3, N3 -> N2, N3 -> N1
        let g = g(
            &[("N1", NodeKind::Process), ("N2", NodeKind::Process), ("N3", NodeKind::Process)],
            &[("N1", "N2"), ("N1", "N3"), ("N2", "N3"), ("N3", "N2"), ("N3", "N1")],
        );
        assert_eq!(ids(&g.parents(&"N2".into()).unwrap()), vec!["N1", "N3"]);
        assert_eq!(ids(&g.children(&"N3".into()).unwrap()), vec!["N1", "N2"]);
    }

    #[test]
    fn isolated_node_has_empty_sets() {
        let g = g(&[("A", NodeKind::Process), ("B", NodeKind::Process)], &[]);
        let a = NodeId::from("A");
        assert!(g.parents(&a).unwrap().is_empty());
        assert!(g.children(&a).unwrap().is_empty());
        assert!(g.ancestors(&a).unwrap().is_empty());
        assert!(g.descendants(&a).unwrap().is_empty());
    }

    #[test]
    fn descendants_through_process_cycle_include_self() {
        let g = g(
            &[("A", NodeKind::Process), ("B", NodeKind::Process)],
            &[("A", "B"), ("B", "A")],
        );
        assert_eq!(ids(&g.descendants(&"A".into()).unwrap()), vec!["A", "B"]);
    }

    #[test]
    fn unknown_node_is_an_error() {
        let g = g(&[("A", NodeKind::Process)], &[]);
        assert_eq!(
            g.parents(&"Z".into()).unwrap_err(),
            QueryError::UnknownNode(NodeId::from("Z"))
        );
    }

    #[test]
    fn induced_subgraph_identity_and_empty() {
        let g = g(
            &[("A", NodeKind::Process), ("B", NodeKind::Process)],
            &[("A", "B"), ("B", "A")],
        );
        let all = g.induced_subgraph(&["A".into(), "B".into()]).unwrap();
        assert_eq!(all, g);
        let none = g.induced_subgraph(&[]).unwrap();
        assert_eq!(none.node_count(), 0);
        assert!(none.edges().is_empty());
    }
}

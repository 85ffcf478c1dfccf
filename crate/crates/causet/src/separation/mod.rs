//! δ-separation and the graphical identifiability checks built on it.
//!
//! δ-separation asks whether every *allowed trail* — a trail whose final edge
//! points into the target process — from a source to a target is blocked by
//! a conditioning set. Blocking follows the familiar collider/non-collider
//! rules, with the quirk that separation is asymmetric: only trails ending in
//! an edge *into* the target matter, and the conditioning set for target `a`
//! is `(A ∪ C) \ {a}`.
//!
//! Two independent deciders are provided: trail enumeration
//! ([`delta_separated`], the reference, which also produces witness trails)
//! and a reachability search over (node, arrival-direction) states
//! ([`reach::delta_separated_fast`]). They are required to agree and are
//! cross-checked exhaustively in the acceptance suite.

mod censoring;
mod eliminable;
pub mod query;
mod reach;
mod theorem1;

pub use censoring::{check_independent_censoring, CensoringError, CensoringScope, CensoringVerdict};
pub use eliminable::{
    eliminable, verify_witness, BlockCondition, EliminabilityWitness, EliminableError,
};
pub use reach::delta_separated_fast;
pub use theorem1::{
    check_theorem1, check_theorem1_with_roles, find_sufficient_marginal_set,
    IdentifiabilityReport, MarginalSearchError, RoleError, Roles, Theorem1Error,
    WeightFiltrations,
};

use crate::graph::{LocalIndependenceGraph, NodeId, NodeKind, QueryError};
use serde::{Deserialize, Serialize};
use std::ops::ControlFlow;

/// Orientation of one trail step relative to walking order.
///
/// Step `j` connects trail vertices `v_j` and `v_{j+1}`; `Forward` means the
/// graph edge is `v_j -> v_{j+1}`, `Backward` means it is `v_{j+1} -> v_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepDir {
    Forward,
    Backward,
}

/// A trail: pairwise-distinct vertices joined by edges traversed in either
/// orientation. Between two process nodes both orientations may exist, so
/// trails on the same vertex sequence can differ in their steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trail {
    vertices: Vec<usize>,
    steps: Vec<StepDir>,
}

impl Trail {
    pub fn vertex_indices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn steps(&self) -> &[StepDir] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn vertex_ids(&self, g: &LocalIndependenceGraph) -> Vec<NodeId> {
        self.vertices.iter().map(|&v| g.id(v).clone()).collect()
    }

    /// `true` if interior vertex position `j` (1-based into vertices) is a
    /// collider: both adjacent edges point into it.
    fn is_collider_at(&self, j: usize) -> bool {
        self.steps[j - 1] == StepDir::Forward && self.steps[j] == StepDir::Backward
    }

    /// Render like `Nc <- Ny -> Nx`.
    pub fn render(&self, g: &LocalIndependenceGraph) -> String {
        let mut s = g.id(self.vertices[0]).to_string();
        for (k, step) in self.steps.iter().enumerate() {
            let arrow = match step {
                StepDir::Forward => "->",
                StepDir::Backward => "<-",
            };
            s.push_str(&format!(" {arrow} {}", g.id(self.vertices[k + 1])));
        }
        s
    }

    /// Check that the trail's steps correspond to actual edges of `g` and
    /// that vertices are pairwise distinct.
    pub fn is_valid_in(&self, g: &LocalIndependenceGraph) -> bool {
        if self.vertices.len() != self.steps.len() + 1 || self.steps.is_empty() {
            return false;
        }
        let mut seen = vec![false; g.node_count()];
        for &v in &self.vertices {
            if v >= g.node_count() || seen[v] {
                return false;
            }
            seen[v] = true;
        }
        self.steps.iter().enumerate().all(|(j, step)| match step {
            StepDir::Forward => g.has_edge(self.vertices[j], self.vertices[j + 1]),
            StepDir::Backward => g.has_edge(self.vertices[j + 1], self.vertices[j]),
        })
    }
}

/// Serialisable form of a witness trail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrailJson {
    pub vertices: Vec<NodeId>,
    pub steps: Vec<StepDir>,
    pub rendered: String,
}

impl TrailJson {
    pub fn new(trail: &Trail, g: &LocalIndependenceGraph) -> Self {
        TrailJson {
            vertices: trail.vertex_ids(g),
            steps: trail.steps().to_vec(),
            rendered: trail.render(g),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeparationError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("trail enumeration exceeded the cap of {cap} trails")]
    LimitExceeded { cap: usize },
    #[error("target `{0}` is not a process node")]
    TargetNotProcess(NodeId),
    #[error("target set must be nonempty")]
    EmptyTargets,
    #[error("node sets must be pairwise disjoint (`{0}` appears twice)")]
    NotDisjoint(NodeId),
}

/// Default cap on enumerated trails.
pub const DEFAULT_TRAIL_CAP: usize = 1_000_000;

/// Verdict of a separation query, with one open trail as witness on failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationVerdict {
    pub separated: bool,
    pub witness: Option<Trail>,
}

/// Enumerate every allowed trail from `b` to `a` in deterministic order
/// (lexicographic by vertex sequence, forward steps before backward).
///
/// `max_len` bounds the number of edges per trail; enumeration stops with
/// [`SeparationError::LimitExceeded`] once more than `DEFAULT_TRAIL_CAP`
/// trails have been produced.
pub fn enumerate_allowed_trails(
    g: &LocalIndependenceGraph,
    b: &NodeId,
    a: &NodeId,
    max_len: Option<usize>,
) -> Result<Vec<Trail>, SeparationError> {
    enumerate_allowed_trails_with_cap(g, b, a, max_len, DEFAULT_TRAIL_CAP)
}

pub fn enumerate_allowed_trails_with_cap(
    g: &LocalIndependenceGraph,
    b: &NodeId,
    a: &NodeId,
    max_len: Option<usize>,
    cap: usize,
) -> Result<Vec<Trail>, SeparationError> {
    let b = g.index_of(b)?;
    let a_idx = g.index_of(a)?;
    if g.kind(a_idx) != NodeKind::Process {
        return Err(SeparationError::TargetNotProcess(g.id(a_idx).clone()));
    }
    let mut out = Vec::new();
    let mut count = 0usize;
    let flow = visit_allowed_trails(g, b, a_idx, max_len, |t| {
        count += 1;
        if count > cap {
            return ControlFlow::Break(true);
        }
        out.push(t.clone());
        ControlFlow::Continue(())
    });
    match flow {
        ControlFlow::Break(true) => Err(SeparationError::LimitExceeded { cap }),
        _ => Ok(out),
    }
}

/// Depth-first enumeration of allowed trails from `b` to `a`, visiting trails
/// in canonical order. The visitor breaks with `true` to signal an error-like
/// abort and `false` for an ordinary early exit.
fn visit_allowed_trails(
    g: &LocalIndependenceGraph,
    b: usize,
    a: usize,
    max_len: Option<usize>,
    mut visit: impl FnMut(&Trail) -> ControlFlow<bool>,
) -> ControlFlow<bool> {
    if b == a {
        return ControlFlow::Continue(());
    }
    let mut trail = Trail { vertices: vec![b], steps: Vec::new() };
    let mut on_trail = vec![false; g.node_count()];
    on_trail[b] = true;
    let limit = max_len.unwrap_or(usize::MAX);
    dfs(g, a, limit, &mut trail, &mut on_trail, &mut visit)
}

fn dfs(
    g: &LocalIndependenceGraph,
    a: usize,
    limit: usize,
    trail: &mut Trail,
    on_trail: &mut [bool],
    visit: &mut impl FnMut(&Trail) -> ControlFlow<bool>,
) -> ControlFlow<bool> {
    if trail.steps.len() >= limit {
        return ControlFlow::Continue(());
    }
    let u = *trail.vertices.last().unwrap();
    for next in 0..g.node_count() {
        if on_trail[next] {
            continue;
        }
        for dir in [StepDir::Forward, StepDir::Backward] {
            let exists = match dir {
                StepDir::Forward => g.has_edge(u, next),
                StepDir::Backward => g.has_edge(next, u),
            };
            if !exists {
                continue;
            }
            if next == a {
                // Only a forward final edge completes an allowed trail, and
                // the target never serves as an interior vertex.
                if dir == StepDir::Forward {
                    trail.vertices.push(next);
                    trail.steps.push(dir);
                    let flow = visit(trail);
                    trail.vertices.pop();
                    trail.steps.pop();
                    flow?;
                }
                continue;
            }
            trail.vertices.push(next);
            trail.steps.push(dir);
            on_trail[next] = true;
            let flow = dfs(g, a, limit, trail, on_trail, visit);
            on_trail[next] = false;
            trail.vertices.pop();
            trail.steps.pop();
            flow?;
        }
    }
    ControlFlow::Continue(())
}

/// Is `trail` blocked by the conditioning set `cond` (a node-index mask)?
///
/// Blocked iff some interior non-collider lies in `cond`, or some interior
/// collider `v` has `({v} ∪ descendants(v)) ∩ cond = ∅`.
pub(crate) fn trail_blocked(
    trail: &Trail,
    cond: &[bool],
    desc_or_self: &[Vec<bool>],
) -> bool {
    for j in 1..trail.vertices.len() - 1 {
        let v = trail.vertices[j];
        if trail.is_collider_at(j) {
            let opens = desc_or_self[v].iter().zip(cond).any(|(&d, &c)| d && c);
            if !opens {
                return true;
            }
        } else if cond[v] {
            return true;
        }
    }
    false
}

/// Public blocking check against an explicit conditioning set.
pub fn is_blocked(
    g: &LocalIndependenceGraph,
    trail: &Trail,
    cond: &[NodeId],
) -> Result<bool, SeparationError> {
    let cond_idx = g.resolve(cond)?;
    let mut mask = vec![false; g.node_count()];
    for i in cond_idx {
        mask[i] = true;
    }
    let desc = g.descendant_or_self_masks();
    Ok(trail_blocked(trail, &mask, &desc))
}

pub(crate) struct ResolvedQuery {
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    pub extra: Vec<usize>,
}

pub(crate) fn resolve_query(
    g: &LocalIndependenceGraph,
    sources: &[NodeId],
    targets: &[NodeId],
    extra: &[NodeId],
) -> Result<ResolvedQuery, SeparationError> {
    let sources_idx = g.resolve(sources)?;
    let targets_idx = g.resolve(targets)?;
    let extra_idx = g.resolve(extra)?;
    if targets_idx.is_empty() {
        return Err(SeparationError::EmptyTargets);
    }
    for &t in &targets_idx {
        if g.kind(t) != NodeKind::Process {
            return Err(SeparationError::TargetNotProcess(g.id(t).clone()));
        }
    }
    let mut all: Vec<usize> =
        sources_idx.iter().chain(&targets_idx).chain(&extra_idx).copied().collect();
    all.sort_unstable();
    for w in all.windows(2) {
        if w[0] == w[1] {
            return Err(SeparationError::NotDisjoint(g.id(w[0]).clone()));
        }
    }
    Ok(ResolvedQuery { sources: sources_idx, targets: targets_idx, extra: extra_idx })
}

/// Reference δ-separation by trail enumeration.
///
/// `B` is δ-separated from `A` given `A ∪ C` iff for every `a ∈ A` and
/// `b ∈ B` every allowed trail from `b` to `a` is blocked by `(A ∪ C) \ {a}`.
/// On failure the first open trail in canonical (b, a, trail) order is
/// returned as witness.
pub fn delta_separated(
    g: &LocalIndependenceGraph,
    sources: &[NodeId],
    targets: &[NodeId],
    extra: &[NodeId],
) -> Result<SeparationVerdict, SeparationError> {
    let q = resolve_query(g, sources, targets, extra)?;
    delta_separated_resolved(g, &q, DEFAULT_TRAIL_CAP)
}

pub(crate) fn delta_separated_resolved(
    g: &LocalIndependenceGraph,
    q: &ResolvedQuery,
    cap: usize,
) -> Result<SeparationVerdict, SeparationError> {
    let desc = g.descendant_or_self_masks();
    let n = g.node_count();
    let mut count = 0usize;
    for &a in &q.targets {
        let mut cond = vec![false; n];
        for &t in &q.targets {
            cond[t] = true;
        }
        for &c in &q.extra {
            cond[c] = true;
        }
        cond[a] = false;
        for &b in &q.sources {
            let mut open: Option<Trail> = None;
            let flow = visit_allowed_trails(g, b, a, None, |t| {
                count += 1;
                if count > cap {
                    return ControlFlow::Break(true);
                }
                if !trail_blocked(t, &cond, &desc) {
                    open = Some(t.clone());
                    return ControlFlow::Break(false);
                }
                ControlFlow::Continue(())
            });
            if flow == ControlFlow::Break(true) {
                return Err(SeparationError::LimitExceeded { cap });
            }
            if let Some(w) = open {
                return Ok(SeparationVerdict { separated: false, witness: Some(w) });
            }
        }
    }
    Ok(SeparationVerdict { separated: true, witness: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, NodeKind, Role};

    pub(crate) fn pgraph(ids: &[&str], edges: &[(&str, &str)]) -> LocalIndependenceGraph {
        let nodes: Vec<(NodeId, NodeKind, Vec<Role>)> =
            ids.iter().map(|id| (NodeId::from(*id), NodeKind::Process, vec![])).collect();
        let edges: Vec<(NodeId, NodeId)> =
            edges.iter().map(|(a, b)| (NodeId::from(*a), NodeId::from(*b))).collect();
        build_graph(&nodes, &edges).unwrap()
    }

    /// Intensity-graph of the three-process example: N1 -> N2, N1 -> N3,
    /// N2 -> N3, N3 -> N2, N3 -> N1.
    fn display2() -> LocalIndependenceGraph {
        pgraph(
            &["N1", "N2", "N3"],
            &[("N1", "N2"), ("N1", "N3"), ("N2", "N3"), ("N3", "N2"), ("N3", "N1")],
        )
    }

    #[test]
    fn display2_trails_from_n2_to_n1() {
        // Hand enumeration: both N2 -> N3 and N2 <- N3 reach N3, and the only
        // edge into N1 is N3 -> N1, so exactly two allowed trails exist.
        let g = display2();
        let trails = enumerate_allowed_trails(&g, &"N2".into(), &"N1".into(), None).unwrap();
        let rendered: Vec<String> = trails.iter().map(|t| t.render(&g)).collect();
        assert_eq!(rendered, vec!["N2 -> N3 -> N1", "N2 <- N3 -> N1"]);
    }

    #[test]
    fn isolated_nodes_have_no_trails() {
        let g = pgraph(&["A", "B"], &[]);
        assert!(enumerate_allowed_trails(&g, &"A".into(), &"B".into(), None).unwrap().is_empty());
    }

    #[test]
    fn display2_separation_given_n3() {
        let g = display2();
        let v = delta_separated(&g, &["N2".into()], &["N1".into()], &["N3".into()]).unwrap();
        assert!(v.separated);
        // Without conditioning on N3 the trail N2 -> N3 -> N1 is open.
        let v = delta_separated(&g, &["N2".into()], &["N1".into()], &[]).unwrap();
        assert!(!v.separated);
        assert_eq!(v.witness.unwrap().render(&g), "N2 -> N3 -> N1");
    }

    #[test]
    fn collider_blocking_rules() {
        // b -> m <- c -> a with childless m.
        let g = pgraph(&["a", "b", "c", "m"], &[("b", "m"), ("c", "m"), ("c", "a")]);
        let trail = {
            let trails = enumerate_allowed_trails(&g, &"b".into(), &"a".into(), None).unwrap();
            assert_eq!(trails.len(), 1);
            trails[0].clone()
        };
        assert_eq!(trail.render(&g), "b -> m <- c -> a");
        assert!(is_blocked(&g, &trail, &[]).unwrap());
        assert!(!is_blocked(&g, &trail, &["m".into()]).unwrap());
        // Conditioning on a descendant of the collider opens it too.
        let g2 = pgraph(
            &["a", "b", "c", "m", "d"],
            &[("b", "m"), ("c", "m"), ("c", "a"), ("m", "d")],
        );
        let trails = enumerate_allowed_trails(&g2, &"b".into(), &"a".into(), None).unwrap();
        assert!(!is_blocked(&g2, &trails[0], &["d".into()]).unwrap());
        // And a non-collider in the conditioning set blocks.
        assert!(is_blocked(&g2, &trails[0], &["c".into(), "m".into()]).unwrap());
    }

    #[test]
    fn adjacent_source_is_never_separated() {
        let g = pgraph(&["a", "b", "z"], &[("b", "a"), ("z", "a")]);
        let v = delta_separated(&g, &["b".into()], &["a".into()], &["z".into()]).unwrap();
        assert!(!v.separated);
        assert_eq!(v.witness.unwrap().len(), 1);
    }

    #[test]
    fn per_target_decomposition() {
        let g = display2();
        let b = [NodeId::from("N1")];
        let targets = [NodeId::from("N2"), NodeId::from("N3")];
        let joint = delta_separated(&g, &b, &targets, &[]).unwrap().separated;
        let each = targets.iter().all(|a| {
            let rest: Vec<NodeId> = targets.iter().filter(|t| *t != a).cloned().collect();
            delta_separated(&g, &b, &[a.clone()], &rest).unwrap().separated
        });
        assert_eq!(joint, each);
    }

    #[test]
    fn query_validation_errors() {
        let g = pgraph(&["a", "b"], &[]);
        assert!(matches!(
            delta_separated(&g, &["b".into()], &[], &[]),
            Err(SeparationError::EmptyTargets)
        ));
        assert!(matches!(
            delta_separated(&g, &["b".into()], &["a".into()], &["b".into()]),
            Err(SeparationError::NotDisjoint(_))
        ));
        let g2 = {
            let nodes = vec![
                (NodeId::from("x"), NodeKind::Baseline, vec![]),
                (NodeId::from("n"), NodeKind::Process, vec![]),
            ];
            build_graph(&nodes, &[]).unwrap()
        };
        assert!(matches!(
            delta_separated(&g2, &["n".into()], &["x".into()], &[]),
            Err(SeparationError::TargetNotProcess(_))
        ));
    }

    #[test]
    fn trail_cap_is_enforced() {
        // Dense bidirectional clique on 6 process nodes has plenty of trails.
        let ids = ["a", "b", "c", "d", "e", "f"];
        let mut edges = Vec::new();
        for x in ids {
            for y in ids {
                if x != y {
                    edges.push((x, y));
                }
            }
        }
        let g = pgraph(&ids, &edges);
        let err =
            enumerate_allowed_trails_with_cap(&g, &"a".into(), &"f".into(), None, 10).unwrap_err();
        assert_eq!(err, SeparationError::LimitExceeded { cap: 10 });
    }
}

//! JSON query files and their reports.

use super::censoring::{check_independent_censoring, CensoringError, CensoringScope};
use super::eliminable::{eliminable, EliminabilityWitness, EliminableError};
use super::theorem1::{check_theorem1, IdentifiabilityReport, Theorem1Error};
use super::{delta_separated, SeparationError, TrailJson};
use crate::graph::{LocalIndependenceGraph, NodeId};
use serde::{Deserialize, Serialize};

/// A separation-layer query as read from a query file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Query {
    DeltaSep {
        #[serde(rename = "B")]
        sources: Vec<NodeId>,
        #[serde(rename = "A")]
        targets: Vec<NodeId>,
        #[serde(rename = "C", default)]
        extra: Vec<NodeId>,
    },
    Eliminable {
        #[serde(rename = "U")]
        latent: Vec<NodeId>,
        x: NodeId,
        v0_rest: Vec<NodeId>,
    },
    IndependentCensoring {
        #[serde(rename = "A", default)]
        a: Vec<NodeId>,
        #[serde(rename = "B", default)]
        b: Vec<NodeId>,
        scope: CensoringScope,
    },
    Theorem1,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum QueryReport {
    DeltaSep {
        separated: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        witness: Option<TrailJson>,
    },
    Eliminable {
        eliminable: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        witness: Option<EliminabilityWitness>,
        #[serde(skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    IndependentCensoring {
        independent: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        witness: Option<TrailJson>,
    },
    Theorem1(Box<IdentifiabilityReport>),
}

impl QueryReport {
    /// Positive verdicts map to CLI exit code 0, negative ones to 1.
    pub fn verdict(&self) -> bool {
        match self {
            QueryReport::DeltaSep { separated, .. } => *separated,
            QueryReport::Eliminable { eliminable, .. } => *eliminable,
            QueryReport::IndependentCensoring { independent, .. } => *independent,
            QueryReport::Theorem1(r) => r.overall,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunQueryError {
    #[error(transparent)]
    Separation(#[from] SeparationError),
    #[error(transparent)]
    Eliminable(#[from] EliminableError),
    #[error(transparent)]
    Censoring(#[from] CensoringError),
    #[error(transparent)]
    Theorem1(#[from] Theorem1Error),
}

pub fn run_query(g: &LocalIndependenceGraph, query: &Query) -> Result<QueryReport, RunQueryError> {
    match query {
        Query::DeltaSep { sources, targets, extra } => {
            let v = delta_separated(g, sources, targets, extra)?;
            Ok(QueryReport::DeltaSep {
                separated: v.separated,
                witness: v.witness.as_ref().map(|t| TrailJson::new(t, g)),
            })
        }
        Query::Eliminable { latent, x, v0_rest } => match eliminable(g, latent, x, v0_rest) {
            Ok(w) => Ok(QueryReport::Eliminable {
                eliminable: w.is_some(),
                witness: w,
                note: None,
            }),
            Err(EliminableError::HeuristicInconclusive { size }) => Ok(QueryReport::Eliminable {
                eliminable: false,
                witness: None,
                note: Some(format!(
                    "singleton-block search failed for {size} latent nodes; inconclusive"
                )),
            }),
            Err(e) => Err(e.into()),
        },
        Query::IndependentCensoring { a, b, scope } => {
            let v = check_independent_censoring(g, a, b, *scope)?;
            Ok(QueryReport::IndependentCensoring {
                independent: v.independent,
                witness: v.witness.as_ref().map(|t| TrailJson::new(t, g)),
            })
        }
        Query::Theorem1 => Ok(QueryReport::Theorem1(Box::new(check_theorem1(g)?))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, NodeKind, Role};

    #[test]
    fn query_file_round_trip() {
        let q: Query =
            serde_json::from_str(r#"{"type":"delta_sep","B":["N2"],"A":["N1"],"C":["N3"]}"#)
                .unwrap();
        let nodes: Vec<(NodeId, NodeKind, Vec<Role>)> = ["N1", "N2", "N3"]
            .iter()
            .map(|id| (NodeId::from(*id), NodeKind::Process, vec![]))
            .collect();
        let edges: Vec<(NodeId, NodeId)> =
            [("N1", "N2"), ("N1", "N3"), ("N2", "N3"), ("N3", "N2"), ("N3", "N1")]
                .iter()
                .map(|(a, b)| (NodeId::from(*a), NodeId::from(*b)))
                .collect();
        let g = build_graph(&nodes, &edges).unwrap();
        let report = run_query(&g, &q).unwrap();
        assert!(report.verdict());
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"separated\":true"));
    }
}

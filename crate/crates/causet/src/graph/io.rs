//! JSON and text serialisation of graphs.
//!
//! The JSON schema is strict (unknown keys rejected):
//!
//! ```json
//! {"nodes":[{"id":"Nx","kind":"process","roles":["treatment"]}],
//!  "edges":[{"from":"Nx","to":"Ny"}]}
//! ```
//!
//! The text form is line-oriented and emitted fully sorted so that two equal
//! graphs always serialise to identical bytes.

use super::{build_graph, GraphError, LocalIndependenceGraph, NodeId, NodeKind, Role};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub nodes: Vec<NodeJson>,
    pub edges: Vec<EdgeJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeJson {
    pub id: NodeId,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub roles: Vec<Role>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    pub from: NodeId,
    pub to: NodeId,
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("malformed graph file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed graph text at line {line}: {msg}")]
    Text { line: usize, msg: String },
    #[error(transparent)]
    Invalid(#[from] GraphError),
}

impl GraphJson {
    pub fn into_graph(self) -> Result<LocalIndependenceGraph, GraphError> {
        let nodes: Vec<(NodeId, NodeKind, Vec<Role>)> =
            self.nodes.into_iter().map(|n| (n.id, n.kind, n.roles)).collect();
        let edges: Vec<(NodeId, NodeId)> =
            self.edges.into_iter().map(|e| (e.from, e.to)).collect();
        build_graph(&nodes, &edges)
    }

    pub fn from_graph(g: &LocalIndependenceGraph) -> Self {
        GraphJson {
            nodes: g
                .nodes()
                .iter()
                .map(|n| NodeJson {
                    id: n.id.clone(),
                    kind: n.kind,
                    roles: n.roles.iter().copied().collect(),
                })
                .collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeJson { from: g.id(e.from).clone(), to: g.id(e.to).clone() })
                .collect(),
        }
    }
}

impl LocalIndependenceGraph {
    pub fn from_json(text: &str) -> Result<Self, ParseError> {
        let parsed: GraphJson = serde_json::from_str(text)?;
        Ok(parsed.into_graph()?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GraphJson::from_graph(self)).expect("graph serialises")
    }

    /// Deterministic sorted text form.
    pub fn to_text(&self) -> String {
        let mut out = String::from("graph\n");
        for n in self.nodes() {
            let kind = match n.kind {
                NodeKind::Baseline => "baseline",
                NodeKind::Process => "process",
            };
            let roles: Vec<String> = n
                .roles
                .iter()
                .map(|r| serde_json::to_string(r).unwrap().trim_matches('"').to_owned())
                .collect();
            if roles.is_empty() {
                out.push_str(&format!("node {} {}\n", n.id, kind));
            } else {
                out.push_str(&format!("node {} {} {}\n", n.id, kind, roles.join(",")));
            }
        }
        for e in self.edges() {
            out.push_str(&format!("edge {} {}\n", self.id(e.from), self.id(e.to)));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ParseError> {
        let mut nodes: Vec<(NodeId, NodeKind, Vec<Role>)> = Vec::new();
        let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() || line.starts_with('#') || line == "graph" {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("node") => {
                    let id = parts.next().ok_or_else(|| ParseError::Text {
                        line: lineno,
                        msg: "node requires an id".into(),
                    })?;
                    let kind = match parts.next() {
                        Some("baseline") => NodeKind::Baseline,
                        Some("process") => NodeKind::Process,
                        other => {
                            return Err(ParseError::Text {
                                line: lineno,
                                msg: format!("unknown node kind {other:?}"),
                            })
                        }
                    };
                    let roles = match parts.next() {
                        None => vec![],
                        Some(spec) => spec
                            .split(',')
                            .map(|r| {
                                serde_json::from_str::<Role>(&format!("\"{r}\"")).map_err(|_| {
                                    ParseError::Text {
                                        line: lineno,
                                        msg: format!("unknown role `{r}`"),
                                    }
                                })
                            })
                            .collect::<Result<Vec<_>, _>>()?,
                    };
                    nodes.push((NodeId::from(id), kind, roles));
                }
                Some("edge") => {
                    let from = parts.next().ok_or_else(|| ParseError::Text {
                        line: lineno,
                        msg: "edge requires two endpoints".into(),
                    })?;
                    let to = parts.next().ok_or_else(|| ParseError::Text {
                        line: lineno,
                        msg: "edge requires two endpoints".into(),
                    })?;
                    edges.push((NodeId::from(from), NodeId::from(to)));
                }
                other => {
                    return Err(ParseError::Text {
                        line: lineno,
                        msg: format!("unknown directive {other:?}"),
                    })
                }
            }
        }
        Ok(build_graph(&nodes, &edges)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let text = r#"{"nodes":[{"id":"Nx","kind":"process","roles":["treatment"]},
                                 {"id":"X","kind":"baseline"}],
                       "edges":[{"from":"X","to":"Nx"}]}"#;
        let g = LocalIndependenceGraph::from_json(text).unwrap();
        let again = LocalIndependenceGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"nodes":[{"id":"A","kind":"process","color":"red"}],"edges":[]}"#;
        assert!(matches!(LocalIndependenceGraph::from_json(text), Err(ParseError::Json(_))));
    }

    #[test]
    fn text_round_trip_is_sorted_and_stable() {
        let text = r#"{"nodes":[{"id":"B","kind":"process"},{"id":"A","kind":"baseline","roles":["latent"]}],
                       "edges":[{"from":"A","to":"B"}]}"#;
        let g = LocalIndependenceGraph::from_json(text).unwrap();
        let t = g.to_text();
        assert_eq!(t, "graph\nnode A baseline latent\nnode B process\nedge A B\n");
        assert_eq!(LocalIndependenceGraph::from_text(&t).unwrap(), g);
    }
}

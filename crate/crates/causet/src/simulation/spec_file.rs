//! JSON specification files for the simulator.
//!
//! Three shapes: the two built-in systems with their parameters, and fully
//! custom specs limited to the declarative intensity families. Arbitrary
//! history functionals stay library-only.

use super::builtin::{example_4_3, hpv_scenario, BuiltinError, HpvParams};
use super::intensity::{DynIntensity, FamilyError, FamilyIntensity, IntensityFamily};
use super::spec::{BaselineSampler, SpecError, SystemSpec};
use crate::graph::{GraphError, GraphJson, NodeId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpecFile {
    Builtin43 {
        gamma: f64,
        horizon: f64,
    },
    BuiltinHpv {
        #[serde(default)]
        params: HpvParams,
    },
    Custom {
        graph: GraphJson,
        horizon: f64,
        #[serde(default)]
        baseline: Vec<BaselineEntry>,
        intensities: Vec<IntensityEntry>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineEntry {
    pub node: NodeId,
    pub sampler: BaselineSampler,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensityEntry {
    pub node: NodeId,
    pub family: IntensityFamily,
}

#[derive(Debug, thiserror::Error)]
pub enum SpecFileError {
    #[error("malformed spec file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Builtin(#[from] BuiltinError),
    #[error("intensity for `{node}`: {source}")]
    Family { node: NodeId, source: FamilyError },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self, SpecFileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(self) -> Result<SystemSpec, SpecFileError> {
        match self {
            SpecFile::Builtin43 { gamma, horizon } => Ok(example_4_3(gamma, horizon)?),
            SpecFile::BuiltinHpv { params } => Ok(hpv_scenario(&params)?),
            SpecFile::Custom { graph, horizon, baseline, intensities } => {
                let graph = graph.into_graph()?;
                let baseline =
                    baseline.into_iter().map(|b| (b.node, b.sampler)).collect::<Vec<_>>();
                let mut map: BTreeMap<NodeId, DynIntensity> = BTreeMap::new();
                for entry in intensities {
                    let node = entry.node.clone();
                    let fam = FamilyIntensity::new(entry.node, entry.family)
                        .map_err(|source| SpecFileError::Family { node: node.clone(), source })?;
                    map.insert(node, Arc::new(fam));
                }
                Ok(SystemSpec::new(graph, baseline, map, horizon)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_43_spec_file() {
        let spec = SpecFile::parse(r#"{"type":"builtin43","gamma":1.0,"horizon":1.0}"#)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(spec.horizon, 1.0);
        assert_eq!(spec.process_nodes().len(), 2);
    }

    #[test]
    fn custom_spec_file() {
        let text = r#"{
            "type": "custom",
            "graph": {"nodes": [{"id": "X", "kind": "baseline"},
                                {"id": "N", "kind": "process"}],
                      "edges": [{"from": "X", "to": "N"}]},
            "horizon": 2.0,
            "baseline": [{"node": "X", "sampler": {"type": "bernoulli", "p": 0.25}}],
            "intensities": [{"node": "N",
                             "family": {"type": "log_linear", "intercept": -1.0,
                                        "terms": [{"node": "X", "coef": 0.5, "feature": "baseline"}],
                                        "max_jumps": 1}}]
        }"#;
        let spec = SpecFile::parse(text).unwrap().build().unwrap();
        assert_eq!(spec.horizon, 2.0);
        let ds = crate::simulation::simulate_system(&spec, 10, 1).unwrap();
        assert_eq!(ds.n(), 10);
    }

    #[test]
    fn unknown_spec_keys_rejected() {
        assert!(SpecFile::parse(r#"{"type":"builtin43","gamma":1.0,"horizon":1.0,"x":2}"#)
            .is_err());
    }
}

//! Intensity evaluators.
//!
//! An intensity maps (time, strict-past history) to a nonnegative rate and
//! declares a finite bound valid over the whole horizon. Evaluators are
//! predictable by construction: the [`History`] view only ever exposes jumps
//! strictly before the evaluation time.

use crate::graph::NodeId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Strict-past view of one subject at evaluation time `t`.
///
/// All jump accessors filter to times `< t`; an evaluator can never observe
/// a jump at its own evaluation instant.
pub struct History<'a> {
    t: f64,
    baseline: &'a BTreeMap<NodeId, f64>,
    jumps: &'a BTreeMap<NodeId, Vec<f64>>,
}

impl<'a> History<'a> {
    pub fn new(
        t: f64,
        baseline: &'a BTreeMap<NodeId, f64>,
        jumps: &'a BTreeMap<NodeId, Vec<f64>>,
    ) -> Self {
        History { t, baseline, jumps }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn baseline(&self, node: &NodeId) -> f64 {
        self.baseline.get(node).copied().unwrap_or(0.0)
    }

    /// Number of jumps of `node` strictly before `t`.
    pub fn jump_count(&self, node: &NodeId) -> usize {
        match self.jumps.get(node) {
            Some(times) => times.partition_point(|&s| s < self.t),
            None => 0,
        }
    }

    pub fn has_jumped(&self, node: &NodeId) -> bool {
        self.jump_count(node) > 0
    }

    /// First jump strictly before `t`.
    pub fn first_jump(&self, node: &NodeId) -> Option<f64> {
        self.jumps.get(node).and_then(|times| times.first()).copied().filter(|&s| s < self.t)
    }

    /// At-risk indicator for a one-jump process: 1 while no jump yet.
    pub fn at_risk(&self, node: &NodeId) -> f64 {
        if self.has_jumped(node) {
            0.0
        } else {
            1.0
        }
    }

    pub fn baseline_map(&self) -> &BTreeMap<NodeId, f64> {
        self.baseline
    }

    pub fn jumps_map(&self) -> &BTreeMap<NodeId, Vec<f64>> {
        self.jumps
    }
}

pub trait Intensity: Send + Sync {
    /// The process this intensity drives.
    fn target(&self) -> &NodeId;

    /// Rate at time `t` given the strict past.
    fn rate(&self, t: f64, h: &History) -> f64;

    /// Finite upper bound on the rate over the horizon; checked at runtime.
    fn bound(&self) -> f64;

    /// Nodes whose past the evaluator may read (beyond the process itself).
    fn dependencies(&self) -> Vec<NodeId>;

    /// Processes that stop after a fixed jump count can declare it so the
    /// simulator stops proposing candidates once absorbed.
    fn max_jumps(&self) -> Option<u32> {
        None
    }

    /// Stable description entering the spec hash; two components with equal
    /// descriptions are interchangeable.
    fn describe(&self) -> String;
}

pub type DynIntensity = Arc<dyn Intensity>;

/// Declarative intensity families available in spec files. Arbitrary history
/// functionals are only reachable through the library API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntensityFamily {
    /// Constant rate, optionally stopping after `max_jumps` own jumps.
    Constant {
        rate: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_jumps: Option<u32>,
    },
    /// Right-continuous piecewise-constant rate: `rates[i]` applies on
    /// `[times[i], times[i+1])`, with `rates[0]` before `times[0]`... the
    /// first segment starts at 0, so `rates` has one more entry than `times`.
    PiecewiseConstant {
        times: Vec<f64>,
        rates: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_jumps: Option<u32>,
    },
    /// exp(intercept + Σ coef · feature), with `jumped` (0/1 indicator of a
    /// past jump) and `baseline` (baseline value) features.
    LogLinear {
        intercept: f64,
        #[serde(default)]
        terms: Vec<LogLinearTerm>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_jumps: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogLinearTerm {
    pub node: NodeId,
    pub coef: f64,
    pub feature: Feature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Jumped,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FamilyError {
    #[error("rate must be finite and nonnegative")]
    BadRate,
    #[error("piecewise_constant needs len(rates) = len(times) + 1 and increasing times")]
    BadPiecewise,
    #[error("log_linear bound could not be derived; supply `bound` explicitly")]
    MissingBound,
}

/// Evaluator for a family attached to its own process node.
pub struct FamilyIntensity {
    pub target: NodeId,
    pub family: IntensityFamily,
    bound: f64,
}

impl FamilyIntensity {
    pub fn new(target: NodeId, family: IntensityFamily) -> Result<Self, FamilyError> {
        let bound = match &family {
            IntensityFamily::Constant { rate, .. } => {
                if !rate.is_finite() || *rate < 0.0 {
                    return Err(FamilyError::BadRate);
                }
                *rate
            }
            IntensityFamily::PiecewiseConstant { times, rates, .. } => {
                if rates.len() != times.len() + 1
                    || times.windows(2).any(|w| w[0] >= w[1])
                    || rates.iter().any(|r| !r.is_finite() || *r < 0.0)
                {
                    return Err(FamilyError::BadPiecewise);
                }
                rates.iter().cloned().fold(0.0, f64::max)
            }
            IntensityFamily::LogLinear { intercept, terms, bound, .. } => match bound {
                Some(b) if b.is_finite() && *b >= 0.0 => *b,
                Some(_) => return Err(FamilyError::BadRate),
                None => {
                    // Worst case assuming features in [0, 1].
                    let worst: f64 =
                        intercept + terms.iter().map(|t| t.coef.max(0.0)).sum::<f64>();
                    let b = worst.exp();
                    if !b.is_finite() {
                        return Err(FamilyError::MissingBound);
                    }
                    b
                }
            },
        };
        Ok(FamilyIntensity { target, family, bound })
    }
}

impl Intensity for FamilyIntensity {
    fn target(&self) -> &NodeId {
        &self.target
    }

    fn rate(&self, t: f64, h: &History) -> f64 {
        let own_jumps = h.jump_count(&self.target) as u32;
        let absorbed = |max: &Option<u32>| max.map_or(false, |m| own_jumps >= m);
        match &self.family {
            IntensityFamily::Constant { rate, max_jumps } => {
                if absorbed(max_jumps) {
                    0.0
                } else {
                    *rate
                }
            }
            IntensityFamily::PiecewiseConstant { times, rates, max_jumps } => {
                if absorbed(max_jumps) {
                    0.0
                } else {
                    let seg = times.partition_point(|&s| s <= t);
                    rates[seg]
                }
            }
            IntensityFamily::LogLinear { intercept, terms, max_jumps, .. } => {
                if absorbed(max_jumps) {
                    return 0.0;
                }
                let mut lin = *intercept;
                for term in terms {
                    let x = match term.feature {
                        Feature::Jumped => {
                            if h.has_jumped(&term.node) {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        Feature::Baseline => h.baseline(&term.node),
                    };
                    lin += term.coef * x;
                }
                lin.exp()
            }
        }
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn dependencies(&self) -> Vec<NodeId> {
        match &self.family {
            IntensityFamily::Constant { .. } | IntensityFamily::PiecewiseConstant { .. } => vec![],
            IntensityFamily::LogLinear { terms, .. } => {
                let mut deps: Vec<NodeId> = terms.iter().map(|t| t.node.clone()).collect();
                deps.sort();
                deps.dedup();
                deps
            }
        }
    }

    fn max_jumps(&self) -> Option<u32> {
        match &self.family {
            IntensityFamily::Constant { max_jumps, .. }
            | IntensityFamily::PiecewiseConstant { max_jumps, .. }
            | IntensityFamily::LogLinear { max_jumps, .. } => *max_jumps,
        }
    }

    fn describe(&self) -> String {
        format!("family:{}:{}", self.target, serde_json::to_string(&self.family).unwrap())
    }
}

/// Identically-zero intensity; the canonical "prevent this process" choice.
pub struct ZeroIntensity {
    pub target: NodeId,
}

impl Intensity for ZeroIntensity {
    fn target(&self) -> &NodeId {
        &self.target
    }

    fn rate(&self, _t: f64, _h: &History) -> f64 {
        0.0
    }

    fn bound(&self) -> f64 {
        0.0
    }

    fn dependencies(&self) -> Vec<NodeId> {
        vec![]
    }

    fn max_jumps(&self) -> Option<u32> {
        Some(0)
    }

    fn describe(&self) -> String {
        format!("zero:{}", self.target)
    }
}

/// Library-side escape hatch: an arbitrary closure plus explicit metadata.
pub struct FnIntensity<F> {
    pub target: NodeId,
    pub deps: Vec<NodeId>,
    pub bound: f64,
    pub max_jumps: Option<u32>,
    pub label: String,
    pub f: F,
}

impl<F: Fn(f64, &History) -> f64 + Send + Sync> Intensity for FnIntensity<F> {
    fn target(&self) -> &NodeId {
        &self.target
    }

    fn rate(&self, t: f64, h: &History) -> f64 {
        (self.f)(t, h)
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn dependencies(&self) -> Vec<NodeId> {
        self.deps.clone()
    }

    fn max_jumps(&self) -> Option<u32> {
        self.max_jumps
    }

    fn describe(&self) -> String {
        format!("fn:{}:{}", self.target, self.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_is_strictly_past() {
        let baseline = BTreeMap::new();
        let mut jumps = BTreeMap::new();
        jumps.insert(NodeId::from("N"), vec![0.5, 0.8]);
        let h = History::new(0.5, &baseline, &jumps);
        assert_eq!(h.jump_count(&"N".into()), 0);
        assert_eq!(h.first_jump(&"N".into()), None);
        let h = History::new(0.8, &baseline, &jumps);
        assert_eq!(h.jump_count(&"N".into()), 1);
        assert_eq!(h.first_jump(&"N".into()), Some(0.5));
    }

    #[test]
    fn piecewise_segments() {
        let fam = FamilyIntensity::new(
            "N".into(),
            IntensityFamily::PiecewiseConstant {
                times: vec![1.0, 2.0],
                rates: vec![0.5, 1.5, 0.25],
                max_jumps: None,
            },
        )
        .unwrap();
        let baseline = BTreeMap::new();
        let jumps = BTreeMap::new();
        let at = |t| fam.rate(t, &History::new(t, &baseline, &jumps));
        assert_eq!(at(0.0), 0.5);
        assert_eq!(at(1.0), 1.5);
        assert_eq!(at(1.99), 1.5);
        assert_eq!(at(2.0), 0.25);
        assert_eq!(fam.bound(), 1.5);
    }

    #[test]
    fn max_jumps_absorbs() {
        let fam = FamilyIntensity::new(
            "N".into(),
            IntensityFamily::Constant { rate: 2.0, max_jumps: Some(1) },
        )
        .unwrap();
        let baseline = BTreeMap::new();
        let mut jumps = BTreeMap::new();
        jumps.insert(NodeId::from("N"), vec![0.3]);
        assert_eq!(fam.rate(0.2, &History::new(0.2, &baseline, &jumps)), 2.0);
        assert_eq!(fam.rate(0.4, &History::new(0.4, &baseline, &jumps)), 0.0);
    }
}

//! Built-in benchmark systems.
//!
//! `example_4_3` is a three-node system (binary latent `U`, one-jump
//! processes `N1`, `N2`) whose marginal `N2` hazard has closed form both
//! observationally and under prevention of `N1`, which makes it the
//! workhorse oracle for the simulator and the exact-weight machinery.
//!
//! `hpv_scenario` mirrors a two-arm screening study: a latent disease feeds
//! a latent progression process, detection requires progression and is
//! boosted by a subsequent test whose rate differs by test-type group, and
//! censoring is independent. Group membership is a fixed split so the arms
//! have exact sizes.

use super::intensity::{DynIntensity, FnIntensity, History};
use super::spec::{BaselineSampler, SystemSpec};
use crate::graph::{build_graph, LocalIndependenceGraph, NodeId, NodeKind, Role};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuiltinError {
    #[error("gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("invalid parameter {name}={value}")]
    InvalidParams { name: &'static str, value: f64 },
}

/// `g(t, x)` from the marginal-hazard construction of the three-node system.
fn g_term(gamma: f64, t: f64, x: f64) -> f64 {
    gamma * (1.0 - 2.0 * (-(x - t)).exp())
        / ((1.0 + 2.0 * gamma * (-(x + t)).exp()) * (gamma + (2.0 * t).exp()))
}

/// Marginal hazard of `N2` among at-risk subjects, observational world:
/// (2γ + e^{2t}) / (γ + e^{2t}).
pub fn example_4_3_marginal_hazard(gamma: f64, t: f64) -> f64 {
    (2.0 * gamma + (2.0 * t).exp()) / (gamma + (2.0 * t).exp())
}

/// Marginal hazard of `N2` among at-risk subjects when `N1` is prevented:
/// (2γ + e^t) / (γ + e^t).
pub fn example_4_3_intervened_hazard(gamma: f64, t: f64) -> f64 {
    (2.0 * gamma + t.exp()) / (gamma + t.exp())
}

pub const EXAMPLE_4_3_U: &str = "U";
pub const EXAMPLE_4_3_N1: &str = "N1";
pub const EXAMPLE_4_3_N2: &str = "N2";

pub fn example_4_3_graph() -> LocalIndependenceGraph {
    let nodes = vec![
        (NodeId::from(EXAMPLE_4_3_U), NodeKind::Baseline, vec![Role::Latent]),
        (NodeId::from(EXAMPLE_4_3_N1), NodeKind::Process, vec![Role::Treatment]),
        (NodeId::from(EXAMPLE_4_3_N2), NodeKind::Process, vec![Role::Outcome]),
    ];
    let edges = vec![
        (EXAMPLE_4_3_U.into(), EXAMPLE_4_3_N1.into()),
        (EXAMPLE_4_3_U.into(), EXAMPLE_4_3_N2.into()),
        (EXAMPLE_4_3_N1.into(), EXAMPLE_4_3_N2.into()),
    ];
    build_graph(&nodes, &edges).expect("builtin graph is valid")
}

/// The three-node system with `P(U=1)/P(U=0) = γ` and horizon `T`.
///
/// λ¹ = Y¹ (U + 1), λ² = Y² {U + g(s, x)(1 − Y¹) + 1} with x the first jump
/// time of `N1`; both processes jump at most once.
pub fn example_4_3(gamma: f64, horizon: f64) -> Result<SystemSpec, BuiltinError> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(BuiltinError::InvalidGamma(gamma));
    }
    let graph = example_4_3_graph();
    let u: NodeId = EXAMPLE_4_3_U.into();
    let n1: NodeId = EXAMPLE_4_3_N1.into();
    let n2: NodeId = EXAMPLE_4_3_N2.into();

    let baseline =
        vec![(u.clone(), BaselineSampler::Bernoulli { p: gamma / (1.0 + gamma) })];

    let mut intensities: BTreeMap<NodeId, DynIntensity> = BTreeMap::new();
    intensities.insert(n1.clone(), example_4_3_lambda1());
    intensities.insert(n2.clone(), example_4_3_lambda2(gamma));
    SystemSpec::new(graph, baseline, intensities, horizon)
        .map_err(|e| unreachable!("builtin spec is valid: {e}"))
}

/// λ¹ = Y¹ (U + 1); also the base intensity entering the exact weights for
/// interventions on `N1`.
pub fn example_4_3_lambda1() -> DynIntensity {
    let u: NodeId = EXAMPLE_4_3_U.into();
    let n1: NodeId = EXAMPLE_4_3_N1.into();
    Arc::new(FnIntensity {
        target: n1.clone(),
        deps: vec![u.clone()],
        bound: 2.0,
        max_jumps: Some(1),
        label: "example_4_3:lambda1".into(),
        f: move |_t: f64, h: &History| h.at_risk(&n1) * (h.baseline(&u) + 1.0),
    })
}

fn example_4_3_lambda2(gamma: f64) -> DynIntensity {
    let u: NodeId = EXAMPLE_4_3_U.into();
    let n1: NodeId = EXAMPLE_4_3_N1.into();
    let n2: NodeId = EXAMPLE_4_3_N2.into();
    Arc::new(FnIntensity {
        target: n2.clone(),
        deps: vec![u.clone(), n1.clone()],
        bound: 2.0,
        max_jumps: Some(1),
        label: format!("example_4_3:lambda2:gamma={gamma}"),
        f: move |t: f64, h: &History| {
            let correction = match h.first_jump(&n1) {
                Some(x) => g_term(gamma, t, x),
                None => 0.0,
            };
            h.at_risk(&n2) * (h.baseline(&u) + correction + 1.0)
        },
    })
}

pub const HPV_DISEASE: &str = "Disease";
pub const HPV_PROGRESSION: &str = "Progression";
pub const HPV_RESULT: &str = "HpvResult";
pub const HPV_TYPE: &str = "HpvType";
pub const HPV_CYTOLOGY: &str = "Cytology";
pub const HPV_NX: &str = "Nx";
pub const HPV_NY: &str = "Ny";
pub const HPV_NC: &str = "Nc";

/// Parameters of the screening scenario. Group sizes give a deterministic
/// split; prevalences are conditional on the boxed cohort (negative HPV
/// result, inconclusive cytology) per group, which is how the selection
/// induced by the false-negative mechanism shows up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HpvParams {
    pub n_target_group: u64,
    pub n_reference_group: u64,
    pub prevalence_target: f64,
    pub prevalence_reference: f64,
    pub progression_rate: f64,
    pub test_rate_target: f64,
    pub test_rate_reference: f64,
    pub detection_rate: f64,
    pub detection_boost: f64,
    pub censoring_rate: f64,
    pub horizon: f64,
}

impl Default for HpvParams {
    fn default() -> Self {
        HpvParams {
            n_target_group: 878,
            n_reference_group: 858,
            prevalence_target: 0.18,
            prevalence_reference: 0.12,
            progression_rate: 1.5,
            test_rate_target: 1.5,
            test_rate_reference: 0.7,
            detection_rate: 0.3,
            detection_boost: 1.2,
            censoring_rate: 0.1,
            horizon: 3.0,
        }
    }
}

impl HpvParams {
    /// The null variant: equal prevalence in both arms, so the causal
    /// contrast under an equalised testing regime is zero.
    pub fn null_scenario() -> Self {
        HpvParams { prevalence_target: 0.15, prevalence_reference: 0.15, ..Default::default() }
    }

    pub fn total_subjects(&self) -> usize {
        (self.n_target_group + self.n_reference_group) as usize
    }

    fn validate(&self) -> Result<(), BuiltinError> {
        let probs = [
            ("prevalence_target", self.prevalence_target),
            ("prevalence_reference", self.prevalence_reference),
        ];
        for (name, value) in probs {
            if !(0.0..=1.0).contains(&value) {
                return Err(BuiltinError::InvalidParams { name, value });
            }
        }
        let rates = [
            ("progression_rate", self.progression_rate),
            ("test_rate_target", self.test_rate_target),
            ("test_rate_reference", self.test_rate_reference),
            ("detection_rate", self.detection_rate),
            ("detection_boost", self.detection_boost),
            ("censoring_rate", self.censoring_rate),
        ];
        for (name, value) in rates {
            if !(value.is_finite() && value >= 0.0) {
                return Err(BuiltinError::InvalidParams { name, value });
            }
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(BuiltinError::InvalidParams { name: "horizon", value: self.horizon });
        }
        Ok(())
    }
}

/// The screening-study graph: latent disease and progression, conditioned
/// baseline covariates, a treatment-like testing process, the detection
/// outcome, and independent censoring.
pub fn hpv_graph() -> LocalIndependenceGraph {
    let nodes = vec![
        (NodeId::from(HPV_DISEASE), NodeKind::Baseline, vec![Role::Latent]),
        (NodeId::from(HPV_PROGRESSION), NodeKind::Process, vec![Role::Latent]),
        (NodeId::from(HPV_RESULT), NodeKind::Baseline, vec![Role::BaselineKeep]),
        (NodeId::from(HPV_TYPE), NodeKind::Baseline, vec![Role::BaselineKeep]),
        (NodeId::from(HPV_CYTOLOGY), NodeKind::Baseline, vec![Role::BaselineKeep]),
        (NodeId::from(HPV_NX), NodeKind::Process, vec![Role::Treatment]),
        (NodeId::from(HPV_NY), NodeKind::Process, vec![Role::Outcome]),
        (NodeId::from(HPV_NC), NodeKind::Process, vec![Role::Censoring]),
    ];
    let edges: Vec<(NodeId, NodeId)> = [
        (HPV_DISEASE, HPV_RESULT),
        (HPV_DISEASE, HPV_CYTOLOGY),
        (HPV_DISEASE, HPV_PROGRESSION),
        (HPV_DISEASE, HPV_NY),
        (HPV_PROGRESSION, HPV_NY),
        (HPV_RESULT, HPV_NY),
        (HPV_RESULT, HPV_NX),
        (HPV_TYPE, HPV_NX),
        (HPV_TYPE, HPV_RESULT),
        (HPV_NX, HPV_NY),
        (HPV_CYTOLOGY, HPV_NY),
        (HPV_CYTOLOGY, HPV_NX),
        (HPV_NY, HPV_NC),
    ]
    .iter()
    .map(|(a, b)| (NodeId::from(*a), NodeId::from(*b)))
    .collect();
    build_graph(&nodes, &edges).expect("builtin graph is valid")
}

/// Build the screening scenario.
///
/// Baseline sampling realises the cohort conditioning: everyone has a
/// negative HPV result and inconclusive cytology, group membership is a
/// fixed split by subject index, and disease prevalence is the conditional
/// prevalence per group.
pub fn hpv_scenario(params: &HpvParams) -> Result<SystemSpec, BuiltinError> {
    params.validate()?;
    let graph = hpv_graph();
    let disease: NodeId = HPV_DISEASE.into();
    let progression: NodeId = HPV_PROGRESSION.into();
    let hpv_type: NodeId = HPV_TYPE.into();
    let nx: NodeId = HPV_NX.into();
    let ny: NodeId = HPV_NY.into();
    let nc: NodeId = HPV_NC.into();

    let baseline = vec![
        (
            hpv_type.clone(),
            BaselineSampler::SplitByIndex {
                first_count: params.n_target_group,
                value_first: 1.0,
                value_rest: 0.0,
            },
        ),
        (
            disease.clone(),
            BaselineSampler::BernoulliGiven {
                parent: hpv_type.clone(),
                p0: params.prevalence_reference,
                p1: params.prevalence_target,
            },
        ),
        (HPV_RESULT.into(), BaselineSampler::Constant { value: 0.0 }),
        (HPV_CYTOLOGY.into(), BaselineSampler::Constant { value: 1.0 }),
    ];

    let mut intensities: BTreeMap<NodeId, DynIntensity> = BTreeMap::new();
    intensities.insert(progression.clone(), {
        let rate = params.progression_rate;
        let disease = disease.clone();
        let progression_t = progression.clone();
        Arc::new(FnIntensity {
            target: progression.clone(),
            deps: vec![disease.clone()],
            bound: rate,
            max_jumps: Some(1),
            label: format!("hpv:progression:{rate}"),
            f: move |_t: f64, h: &History| {
                h.at_risk(&progression_t) * rate * h.baseline(&disease)
            },
        })
    });
    intensities.insert(nx.clone(), hpv_test_intensity(params.test_rate_target, params.test_rate_reference));
    intensities.insert(ny.clone(), {
        let base = params.detection_rate;
        let boost = params.detection_boost;
        let progression = progression.clone();
        let nx_dep = nx.clone();
        let ny_t = ny.clone();
        Arc::new(FnIntensity {
            target: ny.clone(),
            deps: vec![progression.clone(), nx.clone()],
            bound: base + boost,
            max_jumps: Some(1),
            label: format!("hpv:detection:{base}+{boost}"),
            f: move |_t: f64, h: &History| {
                if !h.has_jumped(&progression) {
                    return 0.0;
                }
                let tested = if h.has_jumped(&nx_dep) { boost } else { 0.0 };
                h.at_risk(&ny_t) * (base + tested)
            },
        })
    });
    intensities.insert(nc.clone(), {
        let rate = params.censoring_rate;
        let nc_t = nc.clone();
        Arc::new(FnIntensity {
            target: nc.clone(),
            deps: vec![],
            bound: rate,
            max_jumps: Some(1),
            label: format!("hpv:censoring:{rate}"),
            f: move |_t: f64, h: &History| h.at_risk(&nc_t) * rate,
        })
    });

    SystemSpec::new(graph, baseline, intensities, params.horizon)
        .map_err(|e| unreachable!("builtin spec is valid: {e}"))
}

/// Group-constant subsequent-test intensity, one jump max. Exposed so the
/// analysis pipeline can build the "impose the reference regime" intervention
/// with `target_rate = reference_rate`.
pub fn hpv_test_intensity(target_rate: f64, reference_rate: f64) -> DynIntensity {
    let hpv_type: NodeId = HPV_TYPE.into();
    let nx: NodeId = HPV_NX.into();
    let nx_t = nx.clone();
    let hpv_type_dep = hpv_type.clone();
    Arc::new(FnIntensity {
        target: nx,
        deps: vec![hpv_type],
        bound: target_rate.max(reference_rate),
        max_jumps: Some(1),
        label: format!("hpv:test:{target_rate}/{reference_rate}"),
        f: move |_t: f64, h: &History| {
            let rate =
                if h.baseline(&hpv_type_dep) != 0.0 { target_rate } else { reference_rate };
            h.at_risk(&nx_t) * rate
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::thinning::simulate_system;

    #[test]
    fn gamma_one_gives_even_split() {
        let spec = example_4_3(1.0, 1.0).unwrap();
        let ds = simulate_system(&spec, 40_000, 5).unwrap();
        let ones = ds
            .subjects
            .iter()
            .filter(|s| s.baseline_value(&EXAMPLE_4_3_U.into()) == Some(1.0))
            .count() as f64;
        let p = ones / ds.n() as f64;
        assert!((p - 0.5).abs() < 0.01, "P(U=1) = {p}");
    }

    #[test]
    fn invalid_gamma_rejected() {
        assert!(matches!(example_4_3(0.0, 1.0), Err(BuiltinError::InvalidGamma(_))));
        assert!(matches!(example_4_3(-1.0, 1.0), Err(BuiltinError::InvalidGamma(_))));
    }

    #[test]
    fn hpv_default_split_is_exact() {
        let params = HpvParams::default();
        let spec = hpv_scenario(&params).unwrap();
        let ds = simulate_system(&spec, params.total_subjects(), 9).unwrap();
        assert_eq!(ds.n(), 1736);
        let ptp = ds.group_indices(&HPV_TYPE.into(), 1.0).len();
        assert_eq!(ptp, 878);
        assert_eq!(ds.n() - ptp, 858);
    }

    #[test]
    fn zero_detection_rate_means_no_outcomes() {
        let params =
            HpvParams { detection_rate: 0.0, detection_boost: 0.0, ..HpvParams::default() };
        let spec = hpv_scenario(&params).unwrap();
        let ds = simulate_system(&spec, 300, 2).unwrap();
        assert!(ds.subjects.iter().all(|s| s.first_jump(&HPV_NY.into()).is_none()));
    }

    #[test]
    fn hpv_graph_passes_identifiability() {
        let report = crate::separation::check_theorem1(&hpv_graph()).unwrap();
        assert!(report.overall, "{report:?}");
    }
}

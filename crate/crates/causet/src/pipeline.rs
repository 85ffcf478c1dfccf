//! The end-to-end analysis: identify, weight, estimate, bootstrap, emit.
//!
//! Identification comes first by default — the whole point of the graphical
//! machinery is to justify the re-weighting before it runs — and a failing
//! verdict aborts unless `force` is set, in which case every output is
//! marked as forced. All randomness flows from the single mandatory seed,
//! and outputs are byte-identical for any worker-thread count.

use crate::estimation::{
    bootstrap_bands, contrast, cumulative_incidence, svg, thin_grid, weighted_kaplan_meier,
    BootstrapError, ContrastBand, KmError, KmOutput, StepCurve,
};
use crate::graph::{LocalIndependenceGraph, NodeId};
use crate::separation::{IdentifiabilityReport, Theorem1Error};
use crate::simulation::{
    DatasetIoError, DynIntensity, EventDataset, History, SimError, SpecFile, SpecFileError,
    SystemSpec,
};
use crate::weighting::{
    default_bandwidth, estimate_weights_ahw, exact_weights, AhwDiagnostics, AhwError, FnRho,
    WeightError, WeightSet, WeightTrajectory,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Data-driven windowed-ratio weights.
    #[default]
    Theta,
    /// Exact weights from the known simulation intensities.
    Exact,
    /// Unit weights (no re-weighting).
    Unit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub events: PathBuf,
    pub baseline: PathBuf,
    pub horizon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSource {
    pub spec: PathBuf,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Role-tagged graph file (JSON).
    pub graph: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetPaths>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSource>,
    /// Baseline node whose value splits the arms.
    pub group_node: NodeId,
    pub target_value: f64,
    pub reference_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_replicates")]
    pub bootstrap_replicates: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Master seed; mandatory, no wall-clock fallback.
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub weights: WeightMode,
    #[serde(default)]
    pub force: bool,
    #[serde(default)]
    pub svg: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_quantile: Option<f64>,
    #[serde(default)]
    pub grid_times: Vec<f64>,
}

fn default_replicates() -> usize {
    400
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("graph file: {0}")]
    Graph(#[from] crate::graph::ParseError),
    #[error(transparent)]
    Identify(#[from] Theorem1Error),
    #[error("identification failed; rerun with force to override")]
    NotIdentified(Box<IdentifiabilityReport>),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetIoError),
    #[error(transparent)]
    SpecFile(#[from] SpecFileError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ahw(#[from] AhwError),
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error(transparent)]
    Km(#[from] KmError),
    #[error(transparent)]
    Bootstrap(#[from] BootstrapError),
}

impl PipelineError {
    /// Stable exit-code contract: 1 negative verdict, 2 input error,
    /// 3 runtime estimation failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::NotIdentified(_) => 1,
            PipelineError::Io { .. }
            | PipelineError::Graph(_)
            | PipelineError::Config(_)
            | PipelineError::Dataset(_)
            | PipelineError::SpecFile(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AnalysisDiagnostics {
    pub identified: bool,
    pub forced: bool,
    pub weight_mode: WeightMode,
    pub bandwidth: Option<f64>,
    pub n_subjects: usize,
    pub n_target: usize,
    pub n_reference: usize,
    pub outcome_events_target: usize,
    pub outcome_events_reference: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<AhwDiagnostics>,
    pub km_clipped_factors: usize,
    pub km_tied_event_times: usize,
    pub truncation_clamped_lookups: usize,
    pub degenerate_replicates: usize,
    pub weight_summary: Vec<WeightSummaryRow>,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct WeightSummaryRow {
    pub time: f64,
    pub mean: f64,
    pub variance: f64,
}

pub struct AnalysisOutputs {
    pub report: IdentifiabilityReport,
    pub target_observational: StepCurve,
    pub target_reweighted: StepCurve,
    pub reference: StepCurve,
    pub contrast: StepCurve,
    pub band: ContrastBand,
    pub written: Vec<PathBuf>,
}

fn read_to_string(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path)
        .map_err(|source| PipelineError::Io { path: path.display().to_string(), source })
}

fn write_file(
    dir: &Path,
    name: &str,
    contents: &str,
    written: &mut Vec<PathBuf>,
) -> Result<(), PipelineError> {
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|source| PipelineError::Io { path: path.display().to_string(), source })?;
    written.push(path);
    Ok(())
}

/// Deterministic decimal rendering (shortest round-trip form).
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn curve_csv(curve: &StepCurve) -> String {
    let mut out = String::from("time,value\n");
    let _ = writeln!(out, "0,{}", fmt_f64(curve.initial()));
    for (&t, &v) in curve.times().iter().zip(curve.values()) {
        let _ = writeln!(out, "{},{}", fmt_f64(t), fmt_f64(v));
    }
    out
}

pub fn band_csv(band: &ContrastBand) -> String {
    let mut out = String::from("time,value,lower,upper\n");
    for k in 0..band.times.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(band.times[k]),
            fmt_f64(band.point[k]),
            fmt_f64(band.lower[k]),
            fmt_f64(band.upper[k])
        );
    }
    out
}

fn weights_csv(dataset: &EventDataset, weights: &WeightSet, grid: &[f64]) -> String {
    let mut out = String::from("subject_id,time,weight,flag\n");
    for (i, s) in dataset.subjects.iter().enumerate() {
        let traj = &weights.trajectories()[i];
        for &t in grid {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                s.id,
                fmt_f64(t),
                fmt_f64(weights.value(i, t)),
                u8::from(traj.flagged)
            );
        }
    }
    out
}

struct Arms {
    target: Vec<usize>,
    reference: Vec<usize>,
}

fn split_arms(dataset: &EventDataset, config: &AnalysisConfig) -> Result<Arms, PipelineError> {
    let target = dataset.group_indices(&config.group_node, config.target_value);
    let reference = dataset.group_indices(&config.group_node, config.reference_value);
    if target.is_empty() || reference.is_empty() {
        return Err(PipelineError::Config(format!(
            "group split on `{}` produced {} target and {} reference subjects",
            config.group_node,
            target.len(),
            reference.len()
        )));
    }
    Ok(Arms { target, reference })
}

/// Exact per-subject weights: ρ = λ̃/λ with λ̃ the treatment intensity
/// evaluated as if the subject belonged to the reference arm.
fn exact_weight_set(
    dataset: &EventDataset,
    spec: &SystemSpec,
    treatment: &NodeId,
    group_node: &NodeId,
    reference_value: f64,
    arms: &Arms,
    grid: &[f64],
) -> Result<WeightSet, PipelineError> {
    let base: &DynIntensity = spec
        .intensities
        .get(treatment)
        .ok_or_else(|| PipelineError::Config(format!("spec has no intensity for `{treatment}`")))?;
    let mut in_target = vec![false; dataset.n()];
    for &i in &arms.target {
        in_target[i] = true;
    }
    let trajectories: Result<Vec<WeightTrajectory>, WeightError> = (0..dataset.n())
        .into_par_iter()
        .map(|i| {
            if !in_target[i] {
                return Ok(WeightTrajectory::constant_one());
            }
            let subject = &dataset.subjects[i];
            let mut reference_baseline = subject.baseline.clone();
            reference_baseline.insert(group_node.clone(), reference_value);
            let tilde_base = std::sync::Arc::clone(base);
            let rho = FnRho {
                bound: f64::INFINITY,
                f: move |t: f64, h: &History| {
                    let lambda = tilde_base.rate(t, h);
                    let tilde =
                        tilde_base.rate(t, &History::new(t, &reference_baseline, h.jumps_map()));
                    if lambda == 0.0 {
                        if tilde == 0.0 {
                            1.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        tilde / lambda
                    }
                },
            };
            exact_weights(subject, base.as_ref(), &rho, grid, dataset.horizon)
        })
        .collect();
    Ok(WeightSet::new(trajectories?))
}

fn km_curves(
    dataset: &EventDataset,
    weights: &WeightSet,
    outcome: &NodeId,
    arms: &Arms,
) -> Result<(KmOutput, KmOutput, KmOutput), KmError> {
    let unit = WeightSet::unit(dataset.n());
    let observational = weighted_kaplan_meier(dataset, &unit, outcome, &arms.target)?;
    let reweighted = weighted_kaplan_meier(dataset, weights, outcome, &arms.target)?;
    let reference = weighted_kaplan_meier(dataset, &unit, outcome, &arms.reference)?;
    Ok((observational, reweighted, reference))
}

/// Run the full analysis, writing outputs into `config.out_dir`.
pub fn run_analysis(config: &AnalysisConfig) -> Result<AnalysisOutputs, PipelineError> {
    let graph = LocalIndependenceGraph::from_json(&read_to_string(&config.graph)?)?;
    let report = crate::separation::check_theorem1(&graph)?;
    std::fs::create_dir_all(&config.out_dir).map_err(|source| PipelineError::Io {
        path: config.out_dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    write_file(
        &config.out_dir,
        "identify.json",
        &serde_json::to_string_pretty(&report).expect("report serialises"),
        &mut written,
    )?;
    if !report.overall && !config.force {
        return Err(PipelineError::NotIdentified(Box::new(report)));
    }

    let roles = report.roles.clone();
    let outcome = roles
        .outcomes
        .first()
        .cloned()
        .ok_or_else(|| PipelineError::Config("no outcome role".into()))?;
    let treatment = roles.treatment.clone();

    let mut spec: Option<SystemSpec> = None;
    let dataset: EventDataset = match (&config.simulate, &config.dataset) {
        (Some(sim), None) => {
            let parsed = SpecFile::parse(&read_to_string(&sim.spec)?)?.build()?;
            let ds = crate::simulation::simulate_system(&parsed, sim.n, config.seed)?;
            spec = Some(parsed);
            ds
        }
        (None, Some(paths)) => EventDataset::read_csv(
            &paths.events,
            Some(&paths.baseline),
            paths.horizon,
            Some(roles.censoring.clone()),
        )?,
        _ => {
            return Err(PipelineError::Config(
                "exactly one of `dataset` and `simulate` must be given".into(),
            ))
        }
    };

    let arms = split_arms(&dataset, config)?;
    let bandwidth = match config.weights {
        WeightMode::Theta => Some(
            config.bandwidth.unwrap_or_else(|| default_bandwidth(dataset.n(), dataset.horizon)),
        ),
        _ => config.bandwidth,
    };

    // Evaluation grid: thinned outcome event times plus caller times.
    let event_times: Vec<f64> = dataset
        .subjects
        .iter()
        .filter_map(|s| {
            let c = s.censoring_time(dataset.censoring_node.as_ref()).min(dataset.horizon);
            s.observed_first_jump(&outcome, c)
        })
        .collect();
    let mut grid = thin_grid(event_times, 512);
    grid.extend(config.grid_times.iter().copied());
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    if grid.is_empty() {
        grid.push(dataset.horizon);
    }

    // Weight construction, re-run inside every bootstrap replicate.
    let truncation = config.truncation_quantile.unwrap_or(0.0);
    let build_weights = |ds: &EventDataset,
                         arms: &Arms|
     -> Result<(WeightSet, Option<AhwDiagnostics>), PipelineError> {
        let (set, diag) = match config.weights {
            WeightMode::Unit => (WeightSet::unit(ds.n()), None),
            WeightMode::Theta => {
                let ahw = estimate_weights_ahw(
                    ds,
                    &arms.target,
                    &arms.reference,
                    &treatment,
                    bandwidth.expect("theta mode always has a bandwidth"),
                    &grid,
                )?;
                (WeightSet::new(ahw.trajectories), Some(ahw.diagnostics))
            }
            WeightMode::Exact => {
                let spec = spec.as_ref().ok_or_else(|| {
                    PipelineError::Config(
                        "exact weights require a simulation spec as the data source".into(),
                    )
                })?;
                (
                    exact_weight_set(
                        ds,
                        spec,
                        &treatment,
                        &config.group_node,
                        config.reference_value,
                        arms,
                        &grid,
                    )?,
                    None,
                )
            }
        };
        let set = set.with_truncation(truncation);
        Ok((set, diag))
    };

    let (weights, theta_diag) = build_weights(&dataset, &arms)?;
    let (observational, reweighted, reference_km) =
        km_curves(&dataset, &weights, &outcome, &arms)?;
    let obs_inc = cumulative_incidence(&observational.survival);
    let rew_inc = cumulative_incidence(&reweighted.survival);
    let ref_inc = cumulative_incidence(&reference_km.survival);
    let contrast_curve = contrast(&rew_inc, &ref_inc);

    let band = bootstrap_bands(
        |ds: &EventDataset| -> Result<StepCurve, PipelineError> {
            let arms = split_arms(ds, config)?;
            let (weights, _) = build_weights(ds, &arms)?;
            let reweighted = weighted_kaplan_meier(ds, &weights, &outcome, &arms.target)?;
            let reference =
                weighted_kaplan_meier(ds, &WeightSet::unit(ds.n()), &outcome, &arms.reference)?;
            Ok(contrast(
                &cumulative_incidence(&reweighted.survival),
                &cumulative_incidence(&reference.survival),
            ))
        },
        &dataset,
        config.bootstrap_replicates,
        config.level,
        config.seed,
        &grid,
    )?;

    write_file(
        &config.out_dir,
        "incidence_target_observational.csv",
        &curve_csv(&obs_inc),
        &mut written,
    )?;
    write_file(
        &config.out_dir,
        "incidence_target_reweighted.csv",
        &curve_csv(&rew_inc),
        &mut written,
    )?;
    write_file(&config.out_dir, "incidence_reference.csv", &curve_csv(&ref_inc), &mut written)?;
    write_file(&config.out_dir, "contrast.csv", &curve_csv(&contrast_curve), &mut written)?;
    write_file(&config.out_dir, "band.csv", &band_csv(&band), &mut written)?;
    write_file(&config.out_dir, "weights.csv", &weights_csv(&dataset, &weights, &grid), &mut written)?;

    let weight_summary: Vec<WeightSummaryRow> = grid
        .iter()
        .map(|&t| {
            let n = arms.target.len() as f64;
            let mean = arms.target.iter().map(|&i| weights.value(i, t)).sum::<f64>() / n;
            let variance = arms
                .target
                .iter()
                .map(|&i| {
                    let d = weights.value(i, t) - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            WeightSummaryRow { time: t, mean, variance }
        })
        .collect();
    let diagnostics = AnalysisDiagnostics {
        identified: report.overall,
        forced: config.force && !report.overall,
        weight_mode: config.weights,
        bandwidth,
        n_subjects: dataset.n(),
        n_target: arms.target.len(),
        n_reference: arms.reference.len(),
        outcome_events_target: observational.survival.times().len(),
        outcome_events_reference: reference_km.survival.times().len(),
        theta: theta_diag,
        km_clipped_factors: observational.clipped_factors
            + reweighted.clipped_factors
            + reference_km.clipped_factors,
        km_tied_event_times: observational.tied_event_times
            + reweighted.tied_event_times
            + reference_km.tied_event_times,
        truncation_clamped_lookups: weights.clamped_lookup_count(),
        degenerate_replicates: band.degenerate_replicates,
        weight_summary,
        seed: config.seed,
    };
    write_file(
        &config.out_dir,
        "diagnostics.json",
        &serde_json::to_string_pretty(&diagnostics).expect("diagnostics serialise"),
        &mut written,
    )?;

    if config.svg {
        let t_max = dataset.horizon;
        let curves = svg::curves_svg(
            &[
                ("target (observational)", &obs_inc),
                ("target (re-weighted)", &rew_inc),
                ("reference", &ref_inc),
            ],
            t_max,
            "cumulative incidence",
        );
        write_file(&config.out_dir, "curves.svg", &curves, &mut written)?;
        let band_plot = svg::band_svg(&band, t_max, "contrast with pointwise band");
        write_file(&config.out_dir, "contrast.svg", &band_plot, &mut written)?;
    }

    Ok(AnalysisOutputs {
        report,
        target_observational: obs_inc,
        target_reweighted: rew_inc,
        reference: ref_inc,
        contrast: contrast_curve,
        band,
        written,
    })
}

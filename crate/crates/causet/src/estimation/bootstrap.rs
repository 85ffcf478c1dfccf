//! Nonparametric bootstrap confidence bands.
//!
//! Subjects are resampled with replacement; the caller's pipeline — which
//! must re-estimate weights inside each replicate — maps each resampled
//! dataset to a curve that is then read on a fixed time grid. Bands are
//! pointwise percentile intervals. Replicates run in parallel on
//! per-replicate random streams and are merged by index, so bands are
//! deterministic in the seed regardless of thread count.

use super::step_curve::StepCurve;
use crate::simulation::rng::stream;
use crate::simulation::{EventDataset, SubjectPath};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastBand {
    pub times: Vec<f64>,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
    pub replicates_requested: usize,
    pub replicates_used: usize,
    /// Replicates whose pipeline failed; logged, excluded and counted.
    pub degenerate_replicates: usize,
}

impl ContrastBand {
    /// Band values at the grid time nearest to `t` from below.
    pub fn at(&self, t: f64) -> Option<(f64, f64, f64)> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            None
        } else {
            Some((self.point[k - 1], self.lower[k - 1], self.upper[k - 1]))
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BootstrapError {
    #[error("need at least 2 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("level must be in (0, 1), got {0}")]
    BadLevel(f64),
    #[error("every bootstrap replicate was degenerate")]
    AllDegenerate,
    #[error("point estimate failed: {0}")]
    PointEstimate(String),
}

/// Thin a set of event times to at most `cap` grid points, keeping order.
pub fn thin_grid(mut times: Vec<f64>, cap: usize) -> Vec<f64> {
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    if times.len() <= cap {
        return times;
    }
    let stride = times.len() as f64 / cap as f64;
    let mut out = Vec::with_capacity(cap);
    for k in 0..cap {
        out.push(times[(k as f64 * stride) as usize]);
    }
    if out.last() != times.last() {
        out.push(*times.last().unwrap());
    }
    out
}

/// Resample subjects with replacement, relabelling ids by draw order so the
/// replicate is a valid dataset with unique ids.
pub fn resample(dataset: &EventDataset, seed: u64, replicate: u64) -> EventDataset {
    let mut rng = stream(seed, "bootstrap", replicate, 0);
    let n = dataset.n();
    let subjects: Vec<SubjectPath> = (0..n)
        .map(|k| {
            let pick = rng.gen_range(0..n);
            let mut s = dataset.subjects[pick].clone();
            s.id = k.to_string();
            s
        })
        .collect();
    let mut out =
        EventDataset::new(subjects, dataset.horizon, dataset.censoring_node.clone());
    out.meta = dataset.meta.clone();
    out
}

/// Percentile bootstrap band for a curve-valued pipeline.
pub fn bootstrap_bands<E: std::fmt::Display>(
    pipeline: impl Fn(&EventDataset) -> Result<StepCurve, E> + Sync,
    dataset: &EventDataset,
    replicates: usize,
    level: f64,
    seed: u64,
    grid: &[f64],
) -> Result<ContrastBand, BootstrapError> {
    if replicates < 2 {
        return Err(BootstrapError::TooFewReplicates(replicates));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(BootstrapError::BadLevel(level));
    }
    let point_curve =
        pipeline(dataset).map_err(|e| BootstrapError::PointEstimate(e.to_string()))?;
    let point: Vec<f64> = grid.iter().map(|&t| point_curve.value_at(t)).collect();

    let replicate_values: Vec<Option<Vec<f64>>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let ds = resample(dataset, seed, r);
            pipeline(&ds).ok().map(|curve| grid.iter().map(|&t| curve.value_at(t)).collect())
        })
        .collect();

    let used: Vec<&Vec<f64>> = replicate_values.iter().flatten().collect();
    if used.is_empty() {
        return Err(BootstrapError::AllDegenerate);
    }
    let alpha = (1.0 - level) / 2.0;
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let mut column: Vec<f64> = used.iter().map(|v| v[k]).collect();
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lower.push(quantile(&column, alpha));
        upper.push(quantile(&column, 1.0 - alpha));
    }
    Ok(ContrastBand {
        times: grid.to_vec(),
        point,
        lower,
        upper,
        level,
        replicates_requested: replicates,
        replicates_used: used.len(),
        degenerate_replicates: replicates - used.len(),
    })
}

/// Linear-interpolation sample quantile on sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dataset(n: usize) -> EventDataset {
        let subjects = (0..n)
            .map(|k| {
                let mut s = SubjectPath::new(k.to_string());
                s.jumps.insert("Ny".into(), vec![0.5 + k as f64 * 0.1]);
                s
            })
            .collect();
        EventDataset::new(subjects, 2.0, None)
    }

    fn mean_curve(ds: &EventDataset) -> Result<StepCurve, std::convert::Infallible> {
        let mean: f64 = ds
            .subjects
            .iter()
            .map(|s| s.first_jump(&"Ny".into()).unwrap_or(2.0))
            .sum::<f64>()
            / ds.n() as f64;
        Ok(StepCurve::constant(mean))
    }

    #[test]
    fn identical_subjects_give_zero_width_band() {
        let ds = tiny_dataset(1);
        // Duplicate the single subject so resampling is trivial.
        let band =
            bootstrap_bands(mean_curve, &ds, 50, 0.95, 7, &[0.0, 1.0]).unwrap();
        assert_eq!(band.lower, band.upper);
        assert_eq!(band.lower, band.point);
        assert_eq!(band.degenerate_replicates, 0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let ds = tiny_dataset(20);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| bootstrap_bands(mean_curve, &ds, 100, 0.9, 13, &[0.0]).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn thin_grid_caps_size() {
        let times: Vec<f64> = (0..10_000).map(|k| k as f64).collect();
        let grid = thin_grid(times, 512);
        assert!(grid.len() <= 513);
        assert_eq!(*grid.first().unwrap(), 0.0);
        assert_eq!(*grid.last().unwrap(), 9999.0);
    }

    #[test]
    fn parameter_validation() {
        let ds = tiny_dataset(3);
        assert!(matches!(
            bootstrap_bands(mean_curve, &ds, 1, 0.95, 7, &[0.0]),
            Err(BootstrapError::TooFewReplicates(1))
        ));
        assert!(matches!(
            bootstrap_bands(mean_curve, &ds, 10, 1.5, 7, &[0.0]),
            Err(BootstrapError::BadLevel(_))
        ));
    }
}

//! Event datasets: per-subject baseline values and jump times.
//!
//! The on-disk form is two CSV files in long format — events
//! (`subject_id,node_id,event_time`) and baseline values
//! (`subject_id,node_id,value`) — plus a small metadata JSON. Censoring is an
//! ordinary jump of the censoring node. Subjects are held in a canonical
//! order (numeric-aware id sort) so that permuting input rows cannot change
//! any downstream result.

use crate::graph::NodeId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectPath {
    pub id: String,
    pub baseline: BTreeMap<NodeId, f64>,
    /// Jump times per process, strictly increasing within a node.
    pub jumps: BTreeMap<NodeId, Vec<f64>>,
}

impl SubjectPath {
    pub fn new(id: impl Into<String>) -> Self {
        SubjectPath { id: id.into(), baseline: BTreeMap::new(), jumps: BTreeMap::new() }
    }

    pub fn baseline_value(&self, node: &NodeId) -> Option<f64> {
        self.baseline.get(node).copied()
    }

    /// First jump of `node`, if any.
    pub fn first_jump(&self, node: &NodeId) -> Option<f64> {
        self.jumps.get(node).and_then(|v| v.first().copied())
    }

    /// Censoring time: first jump of the censoring node, +∞ when absent.
    pub fn censoring_time(&self, censoring: Option<&NodeId>) -> f64 {
        censoring.and_then(|c| self.first_jump(c)).unwrap_or(f64::INFINITY)
    }

    /// Jumps of `node` observed up to and including the stop time.
    pub fn observed_jumps(&self, node: &NodeId, stop: f64) -> &[f64] {
        let jumps = match self.jumps.get(node) {
            Some(j) => j.as_slice(),
            None => &[],
        };
        let end = jumps.partition_point(|&t| t <= stop);
        &jumps[..end]
    }

    /// First jump of `node` if it happened at or before the stop time.
    pub fn observed_first_jump(&self, node: &NodeId, stop: f64) -> Option<f64> {
        self.first_jump(node).filter(|&t| t <= stop)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DatasetMeta {
    pub seed: u64,
    pub spec_hash: String,
    pub n: usize,
    #[serde(default)]
    pub tie_perturbations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventDataset {
    pub subjects: Vec<SubjectPath>,
    pub horizon: f64,
    pub censoring_node: Option<NodeId>,
    pub meta: DatasetMeta,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetIoError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error on {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: row {row}: {msg}")]
    Malformed { path: String, row: usize, msg: String },
    #[error("metadata error: {0}")]
    Meta(#[from] serde_json::Error),
}

/// Numeric-aware canonical id order: decimal ids sort numerically, anything
/// else lexicographically after them.
fn id_key(id: &str) -> (u8, usize, String) {
    if !id.is_empty() && id.bytes().all(|b| b.is_ascii_digit()) {
        (0, id.len(), id.to_owned())
    } else {
        (1, 0, id.to_owned())
    }
}

impl EventDataset {
    pub fn new(subjects: Vec<SubjectPath>, horizon: f64, censoring_node: Option<NodeId>) -> Self {
        let mut ds = EventDataset { subjects, horizon, censoring_node, meta: DatasetMeta::default() };
        ds.canonicalize();
        ds
    }

    pub fn canonicalize(&mut self) {
        self.subjects.sort_by_key(|s| id_key(&s.id));
        for s in &mut self.subjects {
            for jumps in s.jumps.values_mut() {
                jumps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            }
        }
    }

    pub fn n(&self) -> usize {
        self.subjects.len()
    }

    /// A copy with everything after each subject's censoring time deleted.
    /// Estimator outputs must be bit-identical on `self` and `self.stopped()`.
    pub fn stopped(&self) -> EventDataset {
        let censoring = self.censoring_node.as_ref();
        let subjects = self
            .subjects
            .iter()
            .map(|s| {
                let c = s.censoring_time(censoring);
                let jumps = s
                    .jumps
                    .iter()
                    .map(|(node, times)| {
                        (node.clone(), times.iter().copied().filter(|&t| t <= c).collect())
                    })
                    .filter(|(_, times): &(NodeId, Vec<f64>)| !times.is_empty())
                    .collect();
                SubjectPath { id: s.id.clone(), baseline: s.baseline.clone(), jumps }
            })
            .collect();
        EventDataset {
            subjects,
            horizon: self.horizon,
            censoring_node: self.censoring_node.clone(),
            meta: self.meta.clone(),
        }
    }

    /// Subject indices whose baseline value of `node` equals `value`.
    pub fn group_indices(&self, node: &NodeId, value: f64) -> Vec<usize> {
        (0..self.subjects.len())
            .filter(|&i| self.subjects[i].baseline_value(node) == Some(value))
            .collect()
    }

    pub fn write_events_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "subject_id,node_id,event_time")?;
        for s in &self.subjects {
            for (node, times) in &s.jumps {
                for t in times {
                    writeln!(w, "{},{},{}", s.id, node, t)?;
                }
            }
        }
        Ok(())
    }

    pub fn write_baseline_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "subject_id,node_id,value")?;
        for s in &self.subjects {
            for (node, value) in &s.baseline {
                writeln!(w, "{},{},{}", s.id, node, value)?;
            }
        }
        Ok(())
    }

    /// Write `events.csv`, `baseline.csv` and `metadata.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), DatasetIoError> {
        let io_err = |path: &Path| {
            let path = path.display().to_string();
            move |source| DatasetIoError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let events = dir.join("events.csv");
        let mut f = std::fs::File::create(&events).map_err(io_err(&events))?;
        self.write_events_csv(&mut f).map_err(io_err(&events))?;
        let baseline = dir.join("baseline.csv");
        let mut f = std::fs::File::create(&baseline).map_err(io_err(&baseline))?;
        self.write_baseline_csv(&mut f).map_err(io_err(&baseline))?;
        let meta_path = dir.join("metadata.json");
        let meta = MetadataFile {
            horizon: self.horizon,
            censoring_node: self.censoring_node.clone(),
            meta: self.meta.clone(),
        };
        std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
            .map_err(io_err(&meta_path))?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<EventDataset, DatasetIoError> {
        let meta_path = dir.join("metadata.json");
        let meta: MetadataFile = serde_json::from_str(
            &std::fs::read_to_string(&meta_path).map_err(|source| DatasetIoError::Io {
                path: meta_path.display().to_string(),
                source,
            })?,
        )?;
        let mut ds = Self::read_csv(
            &dir.join("events.csv"),
            Some(&dir.join("baseline.csv")),
            meta.horizon,
            meta.censoring_node,
        )?;
        ds.meta = meta.meta;
        Ok(ds)
    }

    /// Read a dataset from long-format CSVs.
    pub fn read_csv(
        events: &Path,
        baseline: Option<&Path>,
        horizon: f64,
        censoring_node: Option<NodeId>,
    ) -> Result<EventDataset, DatasetIoError> {
        let mut subjects: BTreeMap<String, SubjectPath> = BTreeMap::new();
        {
            let path = events.display().to_string();
            let mut rdr = csv::Reader::from_path(events)
                .map_err(|source| DatasetIoError::Csv { path: path.clone(), source })?;
            for (row, record) in rdr.records().enumerate() {
                let record =
                    record.map_err(|source| DatasetIoError::Csv { path: path.clone(), source })?;
                let (id, node, time) = parse_row(&path, row + 2, &record)?;
                subjects
                    .entry(id.clone())
                    .or_insert_with(|| SubjectPath::new(id))
                    .jumps
                    .entry(NodeId::new(node))
                    .or_default()
                    .push(time);
            }
        }
        if let Some(baseline) = baseline {
            let path = baseline.display().to_string();
            let mut rdr = csv::Reader::from_path(baseline)
                .map_err(|source| DatasetIoError::Csv { path: path.clone(), source })?;
            for (row, record) in rdr.records().enumerate() {
                let record =
                    record.map_err(|source| DatasetIoError::Csv { path: path.clone(), source })?;
                let (id, node, value) = parse_row(&path, row + 2, &record)?;
                subjects
                    .entry(id.clone())
                    .or_insert_with(|| SubjectPath::new(id))
                    .baseline
                    .insert(NodeId::new(node), value);
            }
        }
        Ok(EventDataset::new(subjects.into_values().collect(), horizon, censoring_node))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetadataFile {
    horizon: f64,
    censoring_node: Option<NodeId>,
    #[serde(flatten)]
    meta: DatasetMeta,
}

fn parse_row(
    path: &str,
    row: usize,
    record: &csv::StringRecord,
) -> Result<(String, String, f64), DatasetIoError> {
    let malformed = |msg: String| DatasetIoError::Malformed { path: path.to_owned(), row, msg };
    if record.len() != 3 {
        return Err(malformed(format!("expected 3 columns, got {}", record.len())));
    }
    let value: f64 = record[2]
        .parse()
        .map_err(|_| malformed(format!("bad number `{}`", &record[2])))?;
    if !value.is_finite() {
        return Err(malformed(format!("non-finite value `{}`", &record[2])));
    }
    Ok((record[0].to_owned(), record[1].to_owned(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EventDataset {
        let mut a = SubjectPath::new("10");
        a.baseline.insert("X".into(), 1.0);
        a.jumps.insert("Ny".into(), vec![0.5, 0.9]);
        a.jumps.insert("Nc".into(), vec![0.7]);
        let mut b = SubjectPath::new("2");
        b.baseline.insert("X".into(), 0.0);
        b.jumps.insert("Ny".into(), vec![0.3]);
        EventDataset::new(vec![a, b], 1.0, Some("Nc".into()))
    }

    #[test]
    fn canonical_order_is_numeric() {
        let ds = sample();
        let ids: Vec<&str> = ds.subjects.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, vec!["2", "10"]);
    }

    #[test]
    fn stopping_deletes_post_censoring_jumps() {
        let ds = sample();
        let stopped = ds.stopped();
        let a = &stopped.subjects[1];
        assert_eq!(a.id, "10");
        assert_eq!(a.jumps[&NodeId::from("Ny")], vec![0.5]);
        assert_eq!(a.jumps[&NodeId::from("Nc")], vec![0.7]);
        // Uncensored subject untouched.
        assert_eq!(stopped.subjects[0].jumps[&NodeId::from("Ny")], vec![0.3]);
    }

    #[test]
    fn csv_round_trip() {
        let ds = sample();
        let dir = tempfile::tempdir().unwrap();
        ds.write_dir(dir.path()).unwrap();
        let back = EventDataset::read_dir(dir.path()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn observed_jumps_respect_stop_time() {
        let ds = sample();
        let a = &ds.subjects[1];
        let c = a.censoring_time(ds.censoring_node.as_ref());
        assert_eq!(c, 0.7);
        assert_eq!(a.observed_jumps(&"Ny".into(), c), &[0.5]);
        assert_eq!(a.observed_first_jump(&"Ny".into(), c), Some(0.5));
    }
}

//! CSV artifacts. Every file starts with its header row, even when empty,
//! and columns are addressed by header name downstream.

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const REWARD_CURVE: &str = "reward_curve.csv";
pub const COVARIANCE_TRAINED: &str = "covariance_trained.csv";
pub const COVARIANCE_RANDOM: &str = "covariance_random.csv";
pub const FINAL_EPISODE_TRACES: &str = "final_episode_traces.csv";
pub const FINAL_EPISODE_MEASUREMENTS: &str = "final_episode_measurements.csv";
pub const AGGREGATE: &str = "aggregate.csv";
pub const SIM_TRUTH: &str = "sim_truth.csv";
pub const TRACK_TRACES: &str = "track_traces.csv";
pub const MANIFEST: &str = "manifest.toml";
pub const CHECKPOINT_DIR: &str = "checkpoints";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Trained,
    Random,
    /// No measurements at all: the EKF only predicts.
    PredictOnly,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Trained => "trained",
            Policy::Random => "random",
            Policy::PredictOnly => "predict_only",
        }
    }
}

pub trait CsvRow: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRow {
    pub run_id: usize,
    pub iteration: usize,
    pub policy: Policy,
    pub average_return: f64,
}

impl CsvRow for RewardRow {
    const HEADER: &'static [&'static str] = &["run_id", "iteration", "policy", "average_return"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRow {
    pub run_id: usize,
    pub iteration: usize,
    pub satellite_id: usize,
    pub final_log_trace: f64,
}

impl CsvRow for CovarianceRow {
    const HEADER: &'static [&'static str] = &["run_id", "iteration", "satellite_id", "final_log_trace"];
}

/// Per-step log-trace of one satellite's track; `step` counts from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub run_id: usize,
    pub policy: Policy,
    pub satellite_id: usize,
    pub step: usize,
    pub log_trace: f64,
}

impl CsvRow for TraceRow {
    const HEADER: &'static [&'static str] = &["run_id", "policy", "satellite_id", "step", "log_trace"];
}

/// One detection: the boresight it was made with, the noisy AER, and its
/// ECI position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub run_id: usize,
    pub policy: Policy,
    pub step: usize,
    pub time: f64,
    pub pointing_az: f64,
    pub pointing_el: f64,
    pub satellite_id: usize,
    pub az: f64,
    pub el: f64,
    pub range: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CsvRow for MeasurementRow {
    const HEADER: &'static [&'static str] = &[
        "run_id",
        "policy",
        "step",
        "time",
        "pointing_az",
        "pointing_el",
        "satellite_id",
        "az",
        "el",
        "range",
        "x",
        "y",
        "z",
    ];
}

/// Mean and sample standard deviation across runs. `satellite_id` is empty
/// for `average_return` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub metric: String,
    pub policy: Policy,
    pub iteration: usize,
    pub satellite_id: Option<usize>,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
}

impl CsvRow for AggregateRow {
    const HEADER: &'static [&'static str] = &["metric", "policy", "iteration", "satellite_id", "runs", "mean", "std"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub satellite_id: usize,
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub az: f64,
    pub el: f64,
    pub range: f64,
    pub in_fov: bool,
}

impl CsvRow for TruthRow {
    const HEADER: &'static [&'static str] = &["satellite_id", "step", "x", "y", "z", "az", "el", "range", "in_fov"];
}

pub fn write_csv<R: CsvRow>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(R::HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_csv<R: CsvRow>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    anyhow::ensure!(
        header == R::HEADER,
        "{}: unexpected header {:?}, expected {:?}",
        path.display(),
        header,
        R::HEADER
    );
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("{}: record {}", path.display(), i + 1)))
        .collect()
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header_of<R: CsvRow>(row: R) -> Vec<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.serialize(row).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        text.lines().next().unwrap().split(',').map(str::to_owned).collect()
    }

    #[test]
    fn headers_match_field_names() {
        let r = header_of(RewardRow { run_id: 1, iteration: 2, policy: Policy::Random, average_return: 0.5 });
        assert_eq!(r, RewardRow::HEADER);
        let r = header_of(CovarianceRow { run_id: 1, iteration: 2, satellite_id: 3, final_log_trace: 0.1 });
        assert_eq!(r, CovarianceRow::HEADER);
        let r = header_of(TraceRow { run_id: 1, policy: Policy::Trained, satellite_id: 0, step: 1, log_trace: 1.0 });
        assert_eq!(r, TraceRow::HEADER);
        let m = MeasurementRow {
            run_id: 1,
            policy: Policy::Trained,
            step: 1,
            time: 30.0,
            pointing_az: 0.0,
            pointing_el: 0.0,
            satellite_id: 0,
            az: 0.0,
            el: 0.0,
            range: 0.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        };
        assert_eq!(header_of(m), MeasurementRow::HEADER);
        let a = AggregateRow {
            metric: "average_return".into(),
            policy: Policy::Trained,
            iteration: 1,
            satellite_id: Some(2),
            runs: 5,
            mean: 0.0,
            std: 0.0,
        };
        assert_eq!(header_of(a), AggregateRow::HEADER);
        let t = TruthRow { satellite_id: 0, step: 0, x: 0.0, y: 0.0, z: 0.0, az: 0.0, el: 0.0, range: 0.0, in_fov: false };
        assert_eq!(header_of(t), TruthRow::HEADER);
    }

    #[test]
    fn round_trip_and_empty_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![
            TraceRow { run_id: 1, policy: Policy::PredictOnly, satellite_id: 4, step: 3, log_trace: 18.420680743952367 },
            TraceRow { run_id: 2, policy: Policy::Random, satellite_id: 0, step: 1, log_trace: -1e-300 },
        ];
        write_csv(&path, &rows).unwrap();
        assert_eq!(read_csv::<TraceRow>(&path).unwrap(), rows);
        write_csv::<RewardRow>(&path, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "run_id,iteration,policy,average_return\n");
        assert!(read_csv::<RewardRow>(&path).unwrap().is_empty());
        assert!(read_csv::<TraceRow>(&path).is_err());
    }

    #[test]
    fn sample_statistics() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
    }
}

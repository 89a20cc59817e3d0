//! Run-directory files. Every write goes through a temp file in the target
//! directory followed by a rename, so readers never see a partial artifact.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::failure::{CliResult, Failure};

pub const REPORT: &str = "report.jsonl";
pub const SUMMARY: &str = "summary.json";
pub const CONFIG: &str = "config.txt";
pub const EMBEDDINGS: &str = "embeddings.f32";
pub const EMBEDDINGS_SHAPE: &str = "embeddings.json";
pub const EDGE_SERIES: &str = "edge_gradient_series.csv";
pub const PREDICTIONS: &str = "predictions.csv";
pub const CHECKPOINT: &str = "checkpoint.json";
pub const BUCKETS: &str = "homophily_buckets.csv";
pub const ANALYSIS: &str = "analysis.json";

pub fn ensure_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| Failure::output(dir, e))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Failure::output(path, e));
    }
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::output(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<D: DeserializeOwned>(path: &Path) -> CliResult<D> {
    let text = read_artifact(path)?;
    serde_json::from_str(&text).map_err(|e| artifact_error(path, format!("line {}: {e}", e.line())))
}

pub fn read_artifact(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| artifact_error(path, e))
}

pub fn artifact_error(path: &Path, err: impl std::fmt::Display) -> Failure {
    Failure {
        path: Some(path.display().to_string()),
        ..Failure::data(format!("run artifact {}: {err}", path.display()))
    }
}

/// Serializes `rows` (header first) as CSV.
pub fn csv_bytes<R: Serialize>(path: &Path, rows: &[R]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::output(path, e))?;
    }
    w.into_inner().map_err(|e| Failure::output(path, e))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> CliResult {
    write_atomic(path, &csv_bytes(path, rows)?)
}

pub fn read_csv<R: DeserializeOwned>(path: &Path) -> CliResult<Vec<R>> {
    let text = read_artifact(path)?;
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<R>, _>>()
        .map_err(|e| artifact_error(path, e))
}

/// One row of the per-node correctness dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub node: usize,
    /// `train`, `val`, `test`, or empty.
    pub split: String,
    pub label: Option<usize>,
    pub prediction: usize,
    pub correct: Option<bool>,
    /// Empty when the graph is only partially labelled.
    pub homophily: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSeriesRow {
    pub epoch: usize,
    pub homophilous: Option<f64>,
    pub heterophilous: Option<f64>,
    pub direct: Option<f64>,
    pub one_hop: Option<f64>,
    pub far: Option<f64>,
}

/// Sidecar describing `embeddings.f32`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingShape {
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub byte_order: String,
    pub layout: String,
    /// Which weights produced the embedding (the best-validation snapshot).
    pub model_epoch: usize,
}

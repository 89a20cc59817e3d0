use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Scalar;

use super::{train, RunSummary, TrainConfig};

/// One point of a hyperparameter grid: overrides applied on a base config.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub assignments: Vec<(String, String)>,
}

impl GridCell {
    /// `key=value` pairs joined by `,`; empty for the 1×1 grid.
    pub fn label(&self) -> String {
        self.assignments
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn apply(&self, base: &TrainConfig) -> Result<TrainConfig> {
        let mut cfg = base.clone();
        for (k, v) in &self.assignments {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `key=v1,v2;key2=v3` into the Cartesian product of cells, first key
/// outermost. An empty spec is the single empty cell.
pub fn parse_grid(spec: &str) -> Result<Vec<GridCell>> {
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| Error::config(part, "grid axis must be key=v1,v2,..."))?;
        let key = key.trim().to_string();
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(Error::config(key, "grid axis has no values"));
        }
        if axes.iter().any(|(k, _)| *k == key) {
            return Err(Error::config(key, "grid axis repeated"));
        }
        let mut probe = TrainConfig::default();
        for v in &values {
            probe.set(&key, v)?;
        }
        axes.push((key, values));
    }
    let mut cells = vec![GridCell { assignments: Vec::new() }];
    for (key, values) in &axes {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut a = c.assignments.clone();
                    a.push((key.clone(), v.clone()));
                    GridCell { assignments: a }
                })
            })
            .collect();
    }
    Ok(cells)
}

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

pub fn aggregate(values: &[f64]) -> Option<Aggregate> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(Aggregate {
        n: values.len(),
        mean,
        std: var.sqrt(),
    })
}

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub cell: GridCell,
    /// Per seed: the run summary, or the error message of a failed run.
    pub runs: Vec<(u64, std::result::Result<RunSummary, String>)>,
    /// Test accuracy over the successful runs.
    pub test_acc: Option<Aggregate>,
}

/// Runs every cell for every seed. Failed runs are recorded, not fatal.
pub fn sensitivity_sweep<T: Scalar>(
    g: &Graph<T>,
    base: &TrainConfig,
    cells: &[GridCell],
    seeds: &[u64],
) -> Result<Vec<SweepCell>> {
    if cells.is_empty() || seeds.is_empty() {
        return Err(Error::config("grid", "sweep needs at least one cell and one seed"));
    }
    Ok(cells
        .iter()
        .map(|cell| {
            let runs: Vec<_> = seeds
                .iter()
                .map(|&seed| {
                    let run = cell.apply(base).and_then(|mut cfg| {
                        cfg.seed = seed;
                        train(g, &cfg).map(|o| o.summary(&cfg))
                    });
                    (seed, run.map_err(|e| e.to_string()))
                })
                .collect();
            let accs: Vec<f64> = runs
                .iter()
                .filter_map(|(_, r)| r.as_ref().ok().map(|s| s.test_acc))
                .collect();
            SweepCell {
                cell: cell.clone(),
                test_acc: aggregate(&accs),
                runs,
            }
        })
        .collect())
}

use std::path::{Path, PathBuf};

use log::{info, warn};
use smixup::data::load_dataset;
use smixup::graph::Graph;
use smixup::trainer::{aggregate, parse_grid, GridCell, RunSummary, TrainConfig};
use smixup::Scalar;

use crate::artifacts as art;
use crate::commands::train::{load_config, train_into};
use crate::failure::{CliResult, Failure};
use crate::{Precision, SweepArgs};

pub const TABLE: &str = "sweep.csv";
pub const ERROR_FILE: &str = "error.json";

/// `0,1,2`, `7`, or the half-open range `0..10`.
pub fn parse_seeds(spec: &str) -> CliResult<Vec<u64>> {
    let bad = |msg: String| Failure {
        key: Some("seeds".into()),
        ..Failure::config(msg)
    };
    let num = |s: &str| {
        s.trim()
            .parse::<u64>()
            .map_err(|_| bad(format!("`{}` is not a seed", s.trim())))
    };
    let seeds = if let Some((a, b)) = spec.split_once("..") {
        (num(a)?..num(b)?).collect::<Vec<_>>()
    } else {
        spec.split(',').map(num).collect::<CliResult<Vec<_>>>()?
    };
    if seeds.is_empty() {
        return Err(bad(format!("`{spec}` selects no seeds")));
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(bad(format!("`{spec}` repeats a seed")));
    }
    Ok(seeds)
}

/// Directory name for a grid cell: `r-0.1_m-0.2`, or `base` for the empty cell.
pub fn cell_dir_name(cell: &GridCell) -> String {
    if cell.assignments.is_empty() {
        return "base".into();
    }
    cell.assignments
        .iter()
        .map(|(k, v)| format!("{k}-{v}"))
        .collect::<Vec<_>>()
        .join("_")
}

pub fn run_dir(out: &Path, cell: &GridCell, seed: u64) -> PathBuf {
    out.join(cell_dir_name(cell)).join(format!("seed-{seed}"))
}

enum Outcome {
    Done(Box<RunSummary>),
    Failed(String),
}

pub fn run(args: &SweepArgs) -> CliResult {
    let base = load_config(&args.run)?;
    let cells = parse_grid(&args.grid)?;
    let seeds = parse_seeds(&args.seeds)?;
    art::ensure_dir(&args.out)?;
    let results = match args.run.precision {
        Precision::F32 => sweep::<f32>(&load_dataset(&args.run.data)?, &base, &cells, &seeds, &args.out)?,
        Precision::F64 => sweep::<f64>(&load_dataset(&args.run.data)?, &base, &cells, &seeds, &args.out)?,
    };
    let table = table(&cells, &seeds, &results);
    art::write_atomic(&args.out.join(TABLE), &table)?;
    let failed = results.iter().flatten().filter(|o| matches!(o, Outcome::Failed(_))).count();
    println!(
        "{} cells x {} seeds, {} failed; table at {}",
        cells.len(),
        seeds.len(),
        failed,
        args.out.join(TABLE).display()
    );
    Ok(())
}

fn sweep<T: Scalar>(
    g: &Graph<T>,
    base: &TrainConfig,
    cells: &[GridCell],
    seeds: &[u64],
    out: &Path,
) -> CliResult<Vec<Vec<Outcome>>> {
    let mut all = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut row = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let dir = run_dir(out, cell, seed);
            let summary_path = dir.join(art::SUMMARY);
            if summary_path.exists() {
                if let Ok(s) = art::read_json::<RunSummary>(&summary_path) {
                    info!("{} seed {seed}: reusing {}", cell.label(), dir.display());
                    row.push(Outcome::Done(Box::new(s)));
                    continue;
                }
                warn!("{} unreadable, recomputing", summary_path.display());
            }
            let result = cell
                .apply(base)
                .map_err(Failure::from)
                .and_then(|cfg| train_into(g, &TrainConfig { seed, ..cfg }, &dir));
            match result {
                Ok(s) => {
                    let _ = std::fs::remove_file(dir.join(ERROR_FILE));
                    row.push(Outcome::Done(Box::new(s)));
                }
                Err(f) if f.kind == "io" => return Err(f),
                Err(f) => {
                    warn!("{} seed {seed} failed: {}", cell.label(), f.message);
                    art::ensure_dir(&dir)?;
                    art::write_json(&dir.join(ERROR_FILE), &f)?;
                    row.push(Outcome::Failed(f.message));
                }
            }
        }
        all.push(row);
    }
    Ok(all)
}

fn table(cells: &[GridCell], seeds: &[u64], results: &[Vec<Outcome>]) -> Vec<u8> {
    let keys: Vec<&str> = cells
        .first()
        .map(|c| c.assignments.iter().map(|(k, _)| k.as_str()).collect())
        .unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["row", "cell"];
    header.extend(&keys);
    header.extend([
        "seed", "status", "best_epoch", "val_acc", "test_acc", "n", "test_mean", "test_std", "error",
    ]);
    w.write_record(&header).expect("in-memory csv");
    for (cell, outcomes) in cells.iter().zip(results) {
        let lead = |kind: &str| {
            let mut r = vec![kind.to_string(), cell.label()];
            r.extend(cell.assignments.iter().map(|(_, v)| v.clone()));
            r
        };
        let mut tests = Vec::new();
        for (&seed, o) in seeds.iter().zip(outcomes) {
            let mut r = lead("run");
            r.push(seed.to_string());
            match o {
                Outcome::Done(s) => {
                    tests.push(s.test_acc);
                    let status = serde_json::to_value(s.status).expect("status serializes");
                    r.extend([
                        status.as_str().unwrap_or_default().to_string(),
                        s.best_epoch.to_string(),
                        s.val_acc.to_string(),
                        s.test_acc.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        s.failure.clone().unwrap_or_default(),
                    ]);
                }
                Outcome::Failed(msg) => {
                    r.extend(["failed", "", "", "", "", "", ""].map(String::from));
                    r.push(msg.clone());
                }
            }
            w.write_record(&r).expect("in-memory csv");
        }
        let mut r = lead("aggregate");
        r.extend(["", "", "", "", ""].map(String::from));
        match aggregate(&tests) {
            Some(a) => r.extend([a.n.to_string(), a.mean.to_string(), a.std.to_string()]),
            None => r.extend(["0", "", ""].map(String::from)),
        }
        r.push(String::new());
        w.write_record(&r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

use std::path::Path;

use serde::Serialize;
use smixup::data::load_dataset;
use smixup::graph::homophily_ratios;
use smixup::trainer::{homophily_bucket_report, BucketReport, RunSummary};

use crate::artifacts::{self as art, PredictionRow};
use crate::failure::{CliResult, Failure};
use crate::AnalyzeArgs;

#[derive(Debug, Serialize)]
struct Recomputed {
    train_acc: f64,
    val_acc: f64,
    test_acc: f64,
}

#[derive(Debug, Serialize)]
struct Analysis {
    dataset: String,
    seed: u64,
    mean_homophily: f64,
    threshold: f64,
    /// `mean` or `given`.
    threshold_source: &'static str,
    /// Test nodes only.
    test: BucketReport,
    /// Every labelled node.
    labelled: BucketReport,
    recomputed: Recomputed,
}

#[derive(Debug, Serialize)]
struct BucketRow {
    population: &'static str,
    bucket: &'static str,
    threshold: f64,
    count: usize,
    share: f64,
    accuracy: f64,
}

fn accuracy(rows: &[PredictionRow], split: &str) -> f64 {
    let flags: Vec<bool> = rows
        .iter()
        .filter(|r| r.split == split)
        .map(|r| r.correct == Some(true))
        .collect();
    let hits = flags.iter().filter(|&&c| c).count();
    if flags.is_empty() {
        0.0
    } else {
        hits as f64 / flags.len() as f64
    }
}

fn homophily(args: &AnalyzeArgs, rows: &[PredictionRow], preds_path: &Path) -> CliResult<Vec<f64>> {
    if let Some(data) = &args.data {
        let g = load_dataset::<f64>(data)?;
        if g.num_nodes() != rows.len() {
            return Err(Failure::data(format!(
                "dataset has {} nodes but the run dumped {}",
                g.num_nodes(),
                rows.len()
            )));
        }
        return Ok(homophily_ratios(&g)?);
    }
    rows.iter()
        .map(|r| {
            r.homophily.ok_or_else(|| {
                art::artifact_error(preds_path, format!("node {} has no homophily ratio", r.node))
            })
        })
        .collect()
}

pub fn run(args: &AnalyzeArgs) -> CliResult {
    let summary: RunSummary = art::read_json(&args.run.join(art::SUMMARY))?;
    let preds_path = args.run.join(art::PREDICTIONS);
    let mut rows: Vec<PredictionRow> = art::read_csv(&preds_path)?;
    rows.sort_by_key(|r| r.node);
    if rows.iter().enumerate().any(|(i, r)| r.node != i) {
        return Err(art::artifact_error(&preds_path, "node ids are not 0..N"));
    }

    let recomputed = Recomputed {
        train_acc: accuracy(&rows, "train"),
        val_acc: accuracy(&rows, "val"),
        test_acc: accuracy(&rows, "test"),
    };
    let expected = [summary.train_acc, summary.val_acc, summary.test_acc];
    let got = [recomputed.train_acc, recomputed.val_acc, recomputed.test_acc];
    if expected.iter().zip(&got).any(|(a, b)| a.to_bits() != b.to_bits()) {
        return Err(Failure::data(format!(
            "per-node dump gives train/val/test {got:?}, summary.json says {expected:?}"
        )));
    }

    let h = homophily(args, &rows, &preds_path)?;
    let mean = if h.is_empty() { 1.0 } else { h.iter().sum::<f64>() / h.len() as f64 };
    let (threshold, threshold_source) = match args.threshold {
        Some(t) => (t, "given"),
        None => (mean, "mean"),
    };
    let report_for = |keep: &dyn Fn(&PredictionRow) -> bool| {
        let (hs, cs): (Vec<f64>, Vec<bool>) = rows
            .iter()
            .filter(|r| keep(r))
            .filter_map(|r| r.correct.map(|c| (h[r.node], c)))
            .unzip();
        homophily_bucket_report(&hs, &cs, threshold)
    };
    let analysis = Analysis {
        dataset: summary.dataset.clone(),
        seed: summary.seed,
        mean_homophily: mean,
        threshold,
        threshold_source,
        test: report_for(&|r| r.split == "test")?,
        labelled: report_for(&|_| true)?,
        recomputed,
    };

    let mut table = Vec::new();
    for (population, rep) in [("test", &analysis.test), ("labelled", &analysis.labelled)] {
        for (bucket, b) in [("low", rep.low), ("high", rep.high)] {
            if let Some(b) = b {
                table.push(BucketRow {
                    population,
                    bucket,
                    threshold,
                    count: b.count,
                    share: b.share,
                    accuracy: b.accuracy,
                });
            }
        }
    }
    let out = args.out.as_deref().unwrap_or(&args.run);
    art::ensure_dir(out)?;
    art::write_csv(&out.join(art::BUCKETS), &table)?;
    art::write_json(&out.join(art::ANALYSIS), &analysis)?;

    println!(
        "{} seed {}: threshold {:.4} ({}), mean homophily {:.4}",
        analysis.dataset, analysis.seed, threshold, threshold_source, mean
    );
    println!("population  bucket  count  share    accuracy");
    for r in &table {
        println!(
            "{:<10}  {:<6}  {:>5}  {:>6.2}%  {:>7.2}%",
            r.population,
            r.bucket,
            r.count,
            100.0 * r.share,
            100.0 * r.accuracy
        );
    }
    Ok(())
}

use std::fs;
use std::path::Path;

use log::info;
use smixup::data::load_dataset;
use smixup::gcn::{forward, Checkpoint, Mode};
use smixup::graph::{homophily_ratios, normalize, Graph};
use smixup::trainer::{predict, train, RunStatus, RunSummary, TrainConfig, TrainOutcome};
use smixup::Scalar;

use crate::artifacts::{self as art, EdgeSeriesRow, EmbeddingShape, PredictionRow};
use crate::failure::{CliResult, Failure};
use crate::{Precision, RunArgs, TrainArgs};

/// Config file (if any) with `--set` overrides applied on top, validated.
pub fn load_config(run: &RunArgs) -> CliResult<TrainConfig> {
    let mut cfg = match &run.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure {
                path: Some(path.display().to_string()),
                ..Failure::config(format!("{}: {e}", path.display()))
            })?;
            TrainConfig::from_text(&text)?
        }
        None => TrainConfig::default(),
    };
    for o in &run.overrides {
        cfg.apply_override(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(args: &TrainArgs) -> CliResult {
    let cfg = load_config(&args.run)?;
    let summary = match args.run.precision {
        Precision::F32 => train_into::<f32>(&load_dataset(&args.run.data)?, &cfg, &args.out)?,
        Precision::F64 => train_into::<f64>(&load_dataset(&args.run.data)?, &cfg, &args.out)?,
    };
    println!(
        "{} seed {}: {:?} after {} epochs, best epoch {} val {:.4} test {:.4}",
        summary.dataset,
        summary.seed,
        summary.status,
        summary.epochs_run,
        summary.best_epoch,
        summary.val_acc,
        summary.test_acc
    );
    match summary.status {
        RunStatus::Diverged => Err(Failure::numeric(
            summary.failure.unwrap_or_else(|| "training diverged".into()),
        )),
        _ => Ok(()),
    }
}

/// Trains and writes the full run directory. A diverged run still gets its
/// artifacts; the caller decides how to report it.
pub fn train_into<T: Scalar>(g: &Graph<T>, cfg: &TrainConfig, out: &Path) -> CliResult<RunSummary> {
    let outcome = train(g, cfg)?;
    let summary = outcome.summary(cfg);
    write_run_dir(out, &outcome, cfg, &summary)?;
    info!("wrote run directory {}", out.display());
    Ok(summary)
}

fn split_names<T: Scalar>(g: &Graph<T>) -> Vec<&'static str> {
    let mut names = vec![""; g.num_nodes()];
    let s = g.splits();
    for (nodes, name) in [(&s.train, "train"), (&s.val, "val"), (&s.test, "test")] {
        for &v in nodes {
            names[v] = name;
        }
    }
    names
}

fn write_run_dir<T: Scalar>(
    out: &Path,
    outcome: &TrainOutcome<T>,
    cfg: &TrainConfig,
    summary: &RunSummary,
) -> CliResult {
    art::ensure_dir(out)?;
    let g = &outcome.graph;
    art::write_atomic(&out.join(art::CONFIG), cfg.to_text().as_bytes())?;

    let mut report = String::new();
    for r in &outcome.reports {
        report.push_str(&serde_json::to_string(r).expect("epoch report serializes"));
        report.push('\n');
    }
    art::write_atomic(&out.join(art::REPORT), report.as_bytes())?;

    let series: Vec<EdgeSeriesRow> = outcome
        .reports
        .iter()
        .filter_map(|r| {
            r.edge_gradients.as_ref().map(|e| EdgeSeriesRow {
                epoch: r.epoch,
                homophilous: e.homophilous,
                heterophilous: e.heterophilous,
                direct: e.direct,
                one_hop: e.one_hop,
                far: e.far,
            })
        })
        .collect();
    let series_path = out.join(art::EDGE_SERIES);
    if series.is_empty() {
        // header only, so the file shape does not depend on tracking
        art::write_atomic(&series_path, b"epoch,homophilous,heterophilous,direct,one_hop,far\n")?;
    } else {
        art::write_csv(&series_path, &series)?;
    }

    let best = &outcome.best.model;
    let adj = normalize(g);
    let trace = forward(best, &adj, g.features(), Mode::Deterministic)?;
    let h = trace.hidden();
    let bytes: Vec<u8> = h.as_slice().iter().flat_map(|v| (v.as_f64() as f32).to_le_bytes()).collect();
    art::write_atomic(&out.join(art::EMBEDDINGS), &bytes)?;
    art::write_json(
        &out.join(art::EMBEDDINGS_SHAPE),
        &EmbeddingShape {
            rows: h.rows(),
            cols: h.cols(),
            dtype: "f32".into(),
            byte_order: "little".into(),
            layout: "row-major".into(),
            model_epoch: outcome.best.epoch,
        },
    )?;

    let preds = predict(best, &adj, g.features())?;
    let homophily = homophily_ratios(g).ok();
    let splits = split_names(g);
    let rows: Vec<PredictionRow> = (0..g.num_nodes())
        .map(|v| PredictionRow {
            node: v,
            split: splits[v].into(),
            label: g.label(v),
            prediction: preds[v],
            correct: g.label(v).map(|l| l == preds[v]),
            homophily: homophily.as_ref().map(|h| h[v]),
        })
        .collect();
    art::write_csv(&out.join(art::PREDICTIONS), &rows)?;

    let ckpt = Checkpoint::capture(best, None);
    let text = serde_json::to_string(&ckpt).expect("checkpoint serializes");
    art::write_atomic(&out.join(art::CHECKPOINT), text.as_bytes())?;

    // last, so its presence marks a complete run directory
    art::write_json(&out.join(art::SUMMARY), summary)
}

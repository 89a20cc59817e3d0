//! The training schedule: warmup on the supervised loss, then per epoch a
//! signals pass, pool construction, node synthesis with gradient-selected
//! attachment, one step on the supervised loss and one on the mixup loss.

mod config;
mod eval;
mod sweep;

pub use config::{TrainConfig, CONFIG_KEYS};
pub use eval::{
    distance_to_train, evaluate, homophily_bucket_report, predict, score,
    summarize_edge_gradients, Bucket, BucketReport, EdgeGradientSummary, Evaluation,
};
pub use sweep::{aggregate, parse_grid, sensitivity_sweep, Aggregate, GridCell, SweepCell};

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::edges::{attach_edges, gradient_threshold, low_gradient_threshold, EdgeRule};
use crate::error::{Error, Result};
use crate::gcn::{backward, forward, loss, ForwardTrace, GcnModel, Gradients, LossSpec, Mode};
use crate::graph::{build_augmented_view, normalize, Graph};
use crate::mixup::{build_pools, extract_signals, inter_mix, intra_mix, MixKind, MixupBatch};
use crate::scalar::Scalar;
use crate::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    EarlyStopped,
    Diverged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Warmup,
    Mixup,
}

/// One line of `report.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub phase: Phase,
    pub loss_ce: f64,
    /// Mean cross entropy over inter-class rows, before the `1 − eta` weight.
    pub loss_inter: Option<f64>,
    /// Mean cross entropy over intra-class rows, before the `eta` weight.
    pub loss_intra: Option<f64>,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    /// Edge gradients of the end-of-epoch model, when computed.
    pub edge_gradients: Option<EdgeGradientSummary>,
    pub generated_inter: usize,
    pub generated_intra: usize,
    pub attached_edges: usize,
}

/// Model state at the epoch with the best validation accuracy.
#[derive(Clone, Debug)]
pub struct Snapshot<T> {
    pub epoch: usize,
    pub model: GcnModel<T>,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub model: GcnModel<T>,
    pub best: Snapshot<T>,
    pub reports: Vec<EpochReport>,
    pub status: RunStatus,
    /// Why training diverged, if it did.
    pub failure: Option<String>,
    /// The graph as trained on (features row-normalized if configured).
    pub graph: Graph<T>,
}

/// Scalar results of one run, as written to `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub dataset: String,
    pub scalar: String,
    pub seed: u64,
    pub status: RunStatus,
    pub failure: Option<String>,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    pub final_test_acc: f64,
    pub config: TrainConfig,
}

impl<T: Scalar> TrainOutcome<T> {
    pub fn summary(&self, cfg: &TrainConfig) -> RunSummary {
        RunSummary {
            dataset: self.graph.name().to_string(),
            scalar: T::NAME.to_string(),
            seed: cfg.seed,
            status: self.status,
            failure: self.failure.clone(),
            epochs_run: self.reports.len(),
            best_epoch: self.best.epoch,
            train_acc: self.best.train_acc,
            val_acc: self.best.val_acc,
            test_acc: self.best.test_acc,
            final_test_acc: self.reports.last().map_or(0.0, |r| r.test_acc),
            config: cfg.clone(),
        }
    }
}

struct Accuracies {
    train: f64,
    val: f64,
    test: f64,
}

fn accuracies<T: Scalar>(g: &Graph<T>, trace: &ForwardTrace<'_, T>) -> Result<Accuracies> {
    let pred = trace.predictions();
    let s = g.splits();
    Ok(Accuracies {
        train: score(g, &pred, &s.train)?.accuracy,
        val: score(g, &pred, &s.val)?.accuracy,
        test: score(g, &pred, &s.test)?.accuracy,
    })
}

fn finite<T: Scalar>(value: T, what: &str, epoch: usize) -> Result<f64> {
    let v = value.as_f64();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} at epoch {epoch}")))
    }
}

/// Mean soft-target cross entropy over one kind of synthesized row, placed
/// at `offset + local`.
fn mixup_spec<T: Scalar>(batch: &MixupBatch<T>, kind: MixKind, offset: usize) -> Result<Option<LossSpec<T>>> {
    let local = batch.rows_of(kind);
    if local.is_empty() {
        return Ok(None);
    }
    let mut targets = crate::linalg::Matrix::zeros(0, batch.soft_labels.cols());
    for &r in &local {
        targets.push_row(batch.soft_labels.row(r));
    }
    let weight = T::of(1.0 / local.len() as f64);
    LossSpec::new(local.iter().map(|r| offset + r).collect(), targets, weight).map(Some)
}

/// Trains a fresh model on `g` under `cfg`.
///
/// Divergence (a non-finite loss or gradient) ends training with status
/// [`RunStatus::Diverged`]; the outcome still carries the best snapshot.
pub fn train<T: Scalar>(g: &Graph<T>, cfg: &TrainConfig) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if g.splits().train.is_empty() {
        return Err(Error::validation("splits", "training split is empty"));
    }
    let g = if cfg.row_normalize {
        g.with_row_normalized_features()
    } else {
        g.clone()
    };
    let adj = normalize(&g);
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut model = GcnModel::new(g.num_features(), cfg.hidden, g.num_classes(), &mut rng);

    let train_nodes = &g.splits().train;
    let train_labels: Vec<usize> = train_nodes.iter().map(|&v| g.label(v).expect("validated")).collect();
    let ce = LossSpec::one_hot(
        train_nodes.clone(),
        &train_labels,
        g.num_classes(),
        T::of(1.0 / train_nodes.len() as f64),
    )?;
    let ce = std::slice::from_ref(&ce);
    let train_distance = distance_to_train(&g);
    let mixup = cfg.mixup_enabled();
    let wants_edges = |next_epoch: usize| {
        cfg.track_edge_gradients || (mixup && !cfg.no_edge && next_epoch > cfg.warmup)
    };

    let mut reports = Vec::new();
    let mut best: Option<Snapshot<T>> = None;
    let mut status = RunStatus::Completed;
    let mut failure = None;

    // Deterministic trace (and L_ce adjacency gradients) of the current model.
    let mut current = forward(&model, &adj, g.features(), Mode::Deterministic)?;
    let mut current_grads: Option<Gradients<T>> = if wants_edges(1) {
        Some(backward(&model, &current, ce, true)?)
    } else {
        None
    };

    for epoch in 1..=cfg.max_epochs {
        let phase = if mixup && epoch > cfg.warmup { Phase::Mixup } else { Phase::Warmup };
        let result = (|| -> Result<EpochReport> {
            // (a)-(c): signals, pools, synthesis and attachment.
            let batch = if phase == Phase::Mixup {
                let signals = extract_signals(&g, &current, current_grads.as_ref())?;
                let pools = build_pools(&g, &signals, cfg.r)?;
                let mut batch = MixupBatch::empty(g.num_features(), g.num_classes());
                if !cfg.no_inter {
                    batch.append(inter_mix(&g, &pools, cfg.k * g.num_classes(), &mut rng));
                }
                if !cfg.no_intra {
                    batch.append(intra_mix(&g, &pools, cfg.k, &mut rng));
                }
                let rule = match &signals.edge_gradients {
                    Some(e) if !cfg.no_edge && !e.is_empty() => {
                        if cfg.low_edge {
                            EdgeRule::AtMost(low_gradient_threshold(e, cfg.m)?)
                        } else {
                            EdgeRule::AtLeast(gradient_threshold(e, cfg.m)?)
                        }
                    }
                    _ => EdgeRule::SourcesOnly,
                };
                if let Some(e) = &signals.edge_gradients {
                    attach_edges(&mut batch, &g, e, rule);
                }
                Some(batch)
            } else {
                None
            };

            // (d): supervised step on the base graph.
            let trace = forward(
                &model,
                &adj,
                g.features(),
                Mode::Train { dropout: cfg.dropout, rng: &mut rng },
            )?;
            let loss_ce = finite(loss(&trace, ce)?, "supervised loss", epoch)?;
            let grads = backward(&model, &trace, ce, false)?;
            drop(trace);
            model.step(&grads, cfg.lr, cfg.weight_decay)?;

            // (e): mixup step over the augmented view, loss on new rows only.
            let (mut loss_inter, mut loss_intra) = (None, None);
            let (mut generated_inter, mut generated_intra, mut attached_edges) = (0, 0, 0);
            if let Some(batch) = batch.filter(|b| !b.is_empty()) {
                let view = build_augmented_view(&g, &batch)?;
                let stacked = view.stacked_features();
                let trace = forward(
                    &model,
                    view.normalized(),
                    &stacked,
                    Mode::Train { dropout: cfg.dropout, rng: &mut rng },
                )?;
                let n = g.num_nodes();
                let mut specs = Vec::new();
                if let Some(s) = mixup_spec(&batch, MixKind::Inter, n)? {
                    generated_inter = s.rows().len();
                    loss_inter = Some(finite(loss(&trace, std::slice::from_ref(&s))?, "inter loss", epoch)?);
                    let w = s.weight() * T::of(1.0 - cfg.eta);
                    specs.push(s.with_weight(w));
                }
                if let Some(s) = mixup_spec(&batch, MixKind::Intra, n)? {
                    generated_intra = s.rows().len();
                    loss_intra = Some(finite(loss(&trace, std::slice::from_ref(&s))?, "intra loss", epoch)?);
                    let w = s.weight() * T::of(cfg.eta);
                    specs.push(s.with_weight(w));
                }
                attached_edges = view.new_edges().len();
                let grads = backward(&model, &trace, &specs, false)?;
                drop(trace);
                model.step(&grads, cfg.lr, cfg.weight_decay)?;
            }

            // Evaluation on the base graph; this trace is also next epoch's
            // signals pass.
            current = forward(&model, &adj, g.features(), Mode::Deterministic)?;
            current_grads = if wants_edges(epoch + 1) {
                Some(backward(&model, &current, ce, true)?)
            } else {
                None
            };
            let edge_gradients = match &current_grads {
                Some(gr) if cfg.track_edge_gradients => {
                    let e = crate::gcn::edge_gradient_map(&g, &adj, gr)?;
                    Some(summarize_edge_gradients(&g, &e, &train_distance))
                }
                _ => None,
            };
            let acc = accuracies(&g, &current)?;
            Ok(EpochReport {
                epoch,
                phase,
                loss_ce,
                loss_inter,
                loss_intra,
                train_acc: acc.train,
                val_acc: acc.val,
                test_acc: acc.test,
                edge_gradients,
                generated_inter,
                generated_intra,
                attached_edges,
            })
        })();

        let report = match result {
            Ok(r) => r,
            Err(Error::NonFinite(what)) => {
                log::warn!("training diverged: non-finite {what}");
                status = RunStatus::Diverged;
                failure = Some(format!("non-finite {what}"));
                break;
            }
            Err(e) => return Err(e),
        };
        log::debug!(
            "epoch {epoch}: loss {:.4} train {:.3} val {:.3} test {:.3}",
            report.loss_ce,
            report.train_acc,
            report.val_acc,
            report.test_acc
        );
        if best.as_ref().is_none_or(|b| report.val_acc > b.val_acc) {
            best = Some(Snapshot {
                epoch,
                model: model.clone(),
                train_acc: report.train_acc,
                val_acc: report.val_acc,
                test_acc: report.test_acc,
            });
        }
        reports.push(report);
        let best_epoch = best.as_ref().map_or(0, |b| b.epoch);
        if epoch - best_epoch >= cfg.patience && epoch < cfg.max_epochs {
            status = RunStatus::EarlyStopped;
            break;
        }
    }

    let best = match best {
        Some(b) => b,
        None => {
            // Diverged in the first epoch: fall back to the initial model.
            let acc = accuracies(&g, &current)?;
            Snapshot {
                epoch: 0,
                model: model.clone(),
                train_acc: acc.train,
                val_acc: acc.val,
                test_acc: acc.test,
            }
        }
    };
    drop(current);
    Ok(TrainOutcome {
        model,
        best,
        reports,
        status,
        failure,
        graph: g,
    })
}

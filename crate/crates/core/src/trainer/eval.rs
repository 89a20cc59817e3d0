use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::{forward, EdgeGradients, GcnModel, Mode};
use crate::graph::{Graph, NormalizedAdjacency};
use crate::linalg::Csr;
use crate::scalar::Scalar;

/// Accuracy over a node list plus the per-node outcome in list order.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub correct: Vec<bool>,
}

/// Argmax predictions of a deterministic forward over the base graph.
pub fn predict<T: Scalar>(
    model: &GcnModel<T>,
    adj: &NormalizedAdjacency<T>,
    features: &Csr<T>,
) -> Result<Vec<usize>> {
    Ok(forward(model, adj, features, Mode::Deterministic)?.predictions())
}

/// Scores `predictions` on `nodes`. An empty list scores 0.
pub fn score<T: Scalar>(g: &Graph<T>, predictions: &[usize], nodes: &[usize]) -> Result<Evaluation> {
    let correct = nodes
        .iter()
        .map(|&v| {
            g.label(v)
                .map(|l| predictions[v] == l)
                .ok_or_else(|| Error::validation(format!("node {v}"), "evaluated node has no label"))
        })
        .collect::<Result<Vec<bool>>>()?;
    let hits = correct.iter().filter(|&&c| c).count();
    Ok(Evaluation {
        accuracy: if nodes.is_empty() { 0.0 } else { hits as f64 / nodes.len() as f64 },
        correct,
    })
}

pub fn evaluate<T: Scalar>(
    model: &GcnModel<T>,
    g: &Graph<T>,
    adj: &NormalizedAdjacency<T>,
    nodes: &[usize],
) -> Result<Evaluation> {
    score(g, &predict(model, adj, g.features())?, nodes)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub count: usize,
    /// Fraction of the population in this bucket.
    pub share: f64,
    pub accuracy: f64,
}

/// Accuracy split at a homophily threshold: `h < t` is low, `h ≥ t` high.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub threshold: f64,
    pub low: Option<Bucket>,
    pub high: Option<Bucket>,
}

/// `homophily` and `correct` describe the same node population, index by
/// index. Empty buckets are `None`.
pub fn homophily_bucket_report(
    homophily: &[f64],
    correct: &[bool],
    threshold: f64,
) -> Result<BucketReport> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::config("threshold", format!("{threshold} outside [0, 1]")));
    }
    if homophily.len() != correct.len() {
        return Err(Error::Shape {
            context: "homophily_bucket_report",
            expected: format!("{} correctness flags", homophily.len()),
            actual: correct.len().to_string(),
        });
    }
    let total = homophily.len();
    let bucket = |low: bool| {
        let (mut count, mut hits) = (0usize, 0usize);
        for (&h, &c) in homophily.iter().zip(correct) {
            if (h < threshold) == low {
                count += 1;
                hits += c as usize;
            }
        }
        (count > 0).then(|| Bucket {
            count,
            share: count as f64 / total as f64,
            accuracy: hits as f64 / count as f64,
        })
    };
    Ok(BucketReport {
        threshold,
        low: bucket(true),
        high: bucket(false),
    })
}

/// Hop distance from each node to the nearest training node (`usize::MAX`
/// when unreachable).
pub fn distance_to_train<T: Scalar>(g: &Graph<T>) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.num_nodes()];
    let mut queue = VecDeque::new();
    for &v in &g.splits().train {
        if dist[v] != 0 {
            dist[v] = 0;
            queue.push_back(v);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Mean edge gradient per edge category. A category with no edges is `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeGradientSummary {
    pub homophilous: Option<f64>,
    pub heterophilous: Option<f64>,
    /// Edges with a training-node endpoint.
    pub direct: Option<f64>,
    /// Edges whose nearer endpoint is one hop from the training set.
    pub one_hop: Option<f64>,
    /// Edges whose endpoints are both at least two hops away.
    pub far: Option<f64>,
}

pub fn summarize_edge_gradients<T: Scalar>(
    g: &Graph<T>,
    e: &EdgeGradients<T>,
    train_distance: &[usize],
) -> EdgeGradientSummary {
    #[derive(Default)]
    struct Acc(f64, usize);
    impl Acc {
        fn add(&mut self, v: f64) {
            self.0 += v;
            self.1 += 1;
        }
        fn mean(&self) -> Option<f64> {
            (self.1 > 0).then(|| self.0 / self.1 as f64)
        }
    }
    let (mut homo, mut hetero, mut direct, mut one, mut far) =
        (Acc::default(), Acc::default(), Acc::default(), Acc::default(), Acc::default());
    for (id, &(u, v)) in g.edges().iter().enumerate() {
        let val = e.get(id).as_f64();
        if let (Some(a), Some(b)) = (g.label(u), g.label(v)) {
            if a == b {
                homo.add(val);
            } else {
                hetero.add(val);
            }
        }
        match train_distance[u].min(train_distance[v]) {
            0 => direct.add(val),
            1 => one.add(val),
            _ => far.add(val),
        }
    }
    EdgeGradientSummary {
        homophilous: homo.mean(),
        heterophilous: hetero.mean(),
        direct: direct.mean(),
        one_hop: one.mean(),
        far: far.mean(),
    }
}

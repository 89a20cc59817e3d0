//! Pseudo-labels and confidence from a deterministic pass, per-class
//! confidence pools, and inter-/intra-class node synthesis.

use rand::Rng as _;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::gcn::{argmax, edge_gradient_map, EdgeGradients, ForwardTrace, Gradients};
use crate::graph::Graph;
use crate::linalg::{sparse::combine_rows, Csr, Matrix};
use crate::scalar::Scalar;
use crate::{fraction_count, Rng};

/// Beta parameter for the mixing ratio. With α = 1, λ is uniform on [0, 1].
pub const MIXUP_ALPHA: f64 = 1.0;

/// Per-epoch byproducts of the deterministic signals pass.
#[derive(Clone, Debug)]
pub struct EpochSignals<T> {
    pub pseudo_labels: Vec<usize>,
    pub confidence: Vec<T>,
    pub edge_gradients: Option<EdgeGradients<T>>,
}

/// Argmax/max per `Ŷ` row, plus the symmetric edge-gradient map when
/// adjacency gradients are supplied.
pub fn extract_signals<T: Scalar>(
    g: &Graph<T>,
    trace: &ForwardTrace<'_, T>,
    grads: Option<&Gradients<T>>,
) -> Result<EpochSignals<T>> {
    let probs = trace.probs();
    let (pseudo_labels, confidence) = (0..probs.rows()).map(|i| argmax(probs.row(i))).unzip();
    let edge_gradients = grads
        .map(|gr| edge_gradient_map(g, trace.adjacency(), gr))
        .transpose()?;
    Ok(EpochSignals {
        pseudo_labels,
        confidence,
        edge_gradients,
    })
}

/// Confidence-ranked slices of one class.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassPool {
    /// Top ⌈r·n⌉ by confidence.
    pub high: Vec<usize>,
    /// Bottom ⌈r·n⌉, truncated so it never overlaps `high`.
    pub low: Vec<usize>,
    /// ⌈2r·n⌉ nodes centered on the median rank.
    pub mid: Vec<usize>,
    /// Class size n.
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixupPools {
    pub classes: Vec<ClassPool>,
}

/// Class used for pooling: the true label on training nodes, the
/// pseudo-label elsewhere.
pub fn pool_membership<T: Scalar>(g: &Graph<T>, signals: &EpochSignals<T>) -> Vec<usize> {
    let mut class = signals.pseudo_labels.clone();
    for &v in &g.splits().train {
        if let Some(c) = g.label(v) {
            class[v] = c;
        }
    }
    class
}

/// Splits every class's confidence ranking into high / low / mid pools.
pub fn build_pools<T: Scalar>(
    g: &Graph<T>,
    signals: &EpochSignals<T>,
    r: f64,
) -> Result<MixupPools> {
    if !(r > 0.0 && r <= 0.5) {
        return Err(Error::config("r", format!("{r} outside (0, 0.5]")));
    }
    let n = g.num_nodes();
    if signals.confidence.len() != n || signals.pseudo_labels.len() != n {
        return Err(Error::Shape {
            context: "build_pools",
            expected: format!("{n} signal rows"),
            actual: signals.confidence.len().to_string(),
        });
    }
    let membership = pool_membership(g, signals);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); g.num_classes()];
    for (v, &c) in membership.iter().enumerate() {
        members[c].push(v);
    }
    let classes = members
        .into_iter()
        .map(|mut nodes| {
            nodes.sort_by(|&a, &b| {
                signals.confidence[b]
                    .partial_cmp(&signals.confidence[a])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            slice_pool(&nodes, r)
        })
        .collect();
    Ok(MixupPools { classes })
}

/// Slices a list already sorted by descending confidence.
pub(crate) fn slice_pool(ranked: &[usize], r: f64) -> ClassPool {
    let n = ranked.len();
    let tail = fraction_count(r, n).min(n);
    let high = ranked[..tail].to_vec();
    let low_len = tail.min(n - tail);
    let low = ranked[n - low_len..].to_vec();
    let mid_len = fraction_count(2.0 * r, n).min(n);
    let start = (n - mid_len) / 2;
    let mid = ranked[start..start + mid_len].to_vec();
    ClassPool {
        high,
        low,
        mid,
        size: n,
    }
}

/// One Beta(α, α) draw with α = [`MIXUP_ALPHA`].
pub fn sample_lambda(rng: &mut Rng) -> f64 {
    Beta::new(MIXUP_ALPHA, MIXUP_ALPHA)
        .expect("valid Beta parameters")
        .sample(rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixKind {
    Inter,
    Intra,
}

/// Synthesized nodes for one epoch, row-aligned across all fields.
#[derive(Clone, Debug)]
pub struct MixupBatch<T> {
    pub kinds: Vec<MixKind>,
    pub features: Csr<T>,
    pub soft_labels: Matrix<T>,
    pub sources: Vec<(usize, usize)>,
    pub lambdas: Vec<T>,
    /// Base nodes each new node connects to, sorted. Starts as the two
    /// sources; the edge selector widens it.
    pub attachments: Vec<Vec<usize>>,
}

impl<T: Scalar> MixupBatch<T> {
    pub fn empty(num_features: usize, num_classes: usize) -> Self {
        Self {
            kinds: Vec::new(),
            features: Csr::empty(num_features),
            soft_labels: Matrix::zeros(0, num_classes),
            sources: Vec::new(),
            lambdas: Vec::new(),
            attachments: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn push(
        &mut self,
        kind: MixKind,
        sources: (usize, usize),
        lambda: T,
        features: Vec<(usize, T)>,
        label: Vec<T>,
    ) {
        let (i, j) = sources;
        self.kinds.push(kind);
        self.features.push_row(features);
        self.soft_labels.push_row(&label);
        self.sources.push(sources);
        self.lambdas.push(lambda);
        self.attachments.push(if i < j { vec![i, j] } else { vec![j, i] });
    }

    pub fn append(&mut self, other: MixupBatch<T>) {
        for r in 0..other.len() {
            let (idx, val) = other.features.row(r);
            self.kinds.push(other.kinds[r]);
            self.features.push_row(idx.iter().copied().zip(val.iter().copied()));
            self.soft_labels.push_row(other.soft_labels.row(r));
            self.sources.push(other.sources[r]);
            self.lambdas.push(other.lambdas[r]);
            self.attachments.push(other.attachments[r].clone());
        }
    }

    /// Local row indices of the given kind.
    pub fn rows_of(&self, kind: MixKind) -> Vec<usize> {
        (0..self.len()).filter(|&r| self.kinds[r] == kind).collect()
    }
}

/// `λ·x_i + (1−λ)·x_j` as sparse entries.
pub fn mix_features<T: Scalar>(g: &Graph<T>, i: usize, j: usize, lambda: T) -> Vec<(usize, T)> {
    combine_rows(lambda, g.features().row(i), T::one() - lambda, g.features().row(j))
}

/// Inter-class mixup: `total` rows, each from the mid pools of an ordered
/// pair of distinct classes drawn uniformly.
pub fn inter_mix<T: Scalar>(
    g: &Graph<T>,
    pools: &MixupPools,
    total: usize,
    rng: &mut Rng,
) -> MixupBatch<T> {
    let c = g.num_classes();
    let mut batch = MixupBatch::empty(g.num_features(), c);
    let eligible: Vec<usize> = (0..pools.classes.len())
        .filter(|&k| !pools.classes[k].mid.is_empty())
        .collect();
    if eligible.len() < 2 {
        log::warn!("inter-class mixup skipped: fewer than two classes with a mid pool");
        return batch;
    }
    for _ in 0..total {
        let ia = rng.random_range(0..eligible.len());
        let mut ib = rng.random_range(0..eligible.len() - 1);
        if ib >= ia {
            ib += 1;
        }
        let (a, b) = (eligible[ia], eligible[ib]);
        let (pa, pb) = (&pools.classes[a].mid, &pools.classes[b].mid);
        let i = pa[rng.random_range(0..pa.len())];
        let j = pb[rng.random_range(0..pb.len())];
        let lambda = T::of(sample_lambda(rng));
        let mut label = vec![T::zero(); c];
        label[a] = lambda;
        label[b] = T::one() - lambda;
        batch.push(MixKind::Inter, (i, j), lambda, mix_features(g, i, j, lambda), label);
    }
    batch
}

/// Intra-class mixup: `per_class` rows per class, pairing a high-confidence
/// node with a low-confidence node of the same class under its one-hot label.
pub fn intra_mix<T: Scalar>(
    g: &Graph<T>,
    pools: &MixupPools,
    per_class: usize,
    rng: &mut Rng,
) -> MixupBatch<T> {
    let c = g.num_classes();
    let mut batch = MixupBatch::empty(g.num_features(), c);
    for (class, pool) in pools.classes.iter().enumerate() {
        if pool.high.is_empty() || pool.low.is_empty() {
            if pool.size > 0 {
                log::warn!("intra-class mixup skipped class {class}: empty high or low pool");
            }
            continue;
        }
        for _ in 0..per_class {
            let i = pool.high[rng.random_range(0..pool.high.len())];
            let j = pool.low[rng.random_range(0..pool.low.len())];
            let lambda = T::of(sample_lambda(rng));
            let mut label = vec![T::zero(); c];
            label[class] = T::one();
            batch.push(MixKind::Intra, (i, j), lambda, mix_features(g, i, j, lambda), label);
        }
    }
    batch
}

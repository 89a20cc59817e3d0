//! Gradient-percentile attachment of synthesized nodes to base nodes.

use crate::error::{Error, Result};
use crate::fraction_count;
use crate::gcn::EdgeGradients;
use crate::graph::Graph;
use crate::mixup::MixupBatch;
use crate::scalar::Scalar;

/// Which candidate edges qualify.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeRule<T> {
    /// `e ≥ t`: the top-m% rule.
    AtLeast(T),
    /// `e ≤ t`: the mirrored bottom-m% rule.
    AtMost(T),
    /// Only the two sources.
    SourcesOnly,
}

impl<T: Scalar> EdgeRule<T> {
    #[inline]
    pub fn admits(&self, e: T) -> bool {
        match *self {
            EdgeRule::AtLeast(t) => e >= t,
            EdgeRule::AtMost(t) => e <= t,
            EdgeRule::SourcesOnly => false,
        }
    }
}

fn sorted_gradients<T: Scalar>(e: &EdgeGradients<T>, m: f64) -> Result<(Vec<T>, usize)> {
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::config("m", format!("{m} outside (0, 1]")));
    }
    if e.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    if e.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("edge gradients".into()));
    }
    let mut v = e.values().to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let k = fraction_count(m, v.len()).clamp(1, v.len());
    Ok((v, k))
}

/// Value `t` such that `e ≥ t` selects the top ⌈m·|E|⌉ edges; ties at `t`
/// are all included.
pub fn gradient_threshold<T: Scalar>(e: &EdgeGradients<T>, m: f64) -> Result<T> {
    let (v, k) = sorted_gradients(e, m)?;
    Ok(v[v.len() - k])
}

/// Mirror of [`gradient_threshold`]: `e ≤ t` selects the bottom ⌈m·|E|⌉.
pub fn low_gradient_threshold<T: Scalar>(e: &EdgeGradients<T>, m: f64) -> Result<T> {
    let (v, k) = sorted_gradients(e, m)?;
    Ok(v[k - 1])
}

/// `{i, j} ∪ {k ∈ N(i) : rule(e_ki)} ∪ {k ∈ N(j) : rule(e_kj)}`, sorted.
pub fn select_edges<T: Scalar>(
    sources: (usize, usize),
    g: &Graph<T>,
    e: &EdgeGradients<T>,
    rule: EdgeRule<T>,
) -> Vec<usize> {
    let (i, j) = sources;
    let mut out = vec![i, j];
    if !matches!(rule, EdgeRule::SourcesOnly) {
        for q in [i, j] {
            for (&k, &id) in g.neighbors(q).iter().zip(g.neighbor_edge_ids(q)) {
                if rule.admits(e.get(id)) {
                    out.push(k);
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Fills every row's attachment list according to `rule`.
pub fn attach_edges<T: Scalar>(
    batch: &mut MixupBatch<T>,
    g: &Graph<T>,
    e: &EdgeGradients<T>,
    rule: EdgeRule<T>,
) {
    for (row, &src) in batch.sources.iter().enumerate() {
        batch.attachments[row] = select_edges(src, g, e, rule);
    }
}

use crate::error::{Error, Result};
use crate::graph::normalize::with_self_loop;
use crate::graph::{Graph, NormalizedAdjacency};
use crate::linalg::{Csr, CsrBuilder, Matrix};
use crate::mixup::MixupBatch;
use crate::scalar::Scalar;

/// Base graph plus one epoch's synthesized nodes. New nodes occupy indices
/// `N..N+M` and only ever connect to base nodes.
#[derive(Debug)]
pub struct AugmentedView<'g, T> {
    base: &'g Graph<T>,
    new_features: Csr<T>,
    new_soft_labels: Matrix<T>,
    new_edges: Vec<(usize, usize)>,
    normalized: NormalizedAdjacency<T>,
}

pub fn build_augmented_view<'g, T: Scalar>(
    g: &'g Graph<T>,
    batch: &MixupBatch<T>,
) -> Result<AugmentedView<'g, T>> {
    let n = g.num_nodes();
    let m = batch.len();
    if batch.features.cols() != g.num_features() {
        return Err(Error::Shape {
            context: "build_augmented_view",
            expected: format!("{} feature columns", g.num_features()),
            actual: batch.features.cols().to_string(),
        });
    }
    let mut extra: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut new_edges = Vec::new();
    for (row, targets) in batch.attachments.iter().enumerate() {
        let (i, j) = batch.sources[row];
        if i >= n || j >= n {
            return Err(Error::validation(
                format!("mixup row {row}"),
                format!("source ({i}, {j}) out of range (N = {n})"),
            ));
        }
        if targets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation(
                format!("mixup row {row}"),
                "attachments must be sorted and distinct",
            ));
        }
        for &k in targets {
            if k >= n {
                return Err(Error::validation(
                    format!("mixup row {row}"),
                    format!("attachment {k} is not a base node"),
                ));
            }
            extra[k].push(n + row);
            new_edges.push((row, k));
        }
    }

    let mut b = CsrBuilder::new(n + m);
    for (k, added) in extra.iter().enumerate() {
        let row = with_self_loop(k, g.neighbors(k).iter().copied()).chain(added.iter().copied());
        b.push_row(row.map(|j| (j, T::one())));
    }
    for (row, targets) in batch.attachments.iter().enumerate() {
        b.push_row(
            targets
                .iter()
                .copied()
                .chain(std::iter::once(n + row))
                .map(|j| (j, T::one())),
        );
    }
    let normalized = NormalizedAdjacency::from_raw(b.finish())?;
    Ok(AugmentedView {
        base: g,
        new_features: batch.features.clone(),
        new_soft_labels: batch.soft_labels.clone(),
        new_edges,
        normalized,
    })
}

impl<'g, T: Scalar> AugmentedView<'g, T> {
    pub fn base(&self) -> &'g Graph<T> {
        self.base
    }

    pub fn num_new(&self) -> usize {
        self.new_features.rows()
    }

    pub fn num_nodes(&self) -> usize {
        self.base.num_nodes() + self.num_new()
    }

    pub fn new_features(&self) -> &Csr<T> {
        &self.new_features
    }

    pub fn new_soft_labels(&self) -> &Matrix<T> {
        &self.new_soft_labels
    }

    /// `(new-node local index, base node)` attachment pairs.
    pub fn new_edges(&self) -> &[(usize, usize)] {
        &self.new_edges
    }

    pub fn normalized(&self) -> &NormalizedAdjacency<T> {
        &self.normalized
    }

    /// Base features with the synthesized rows appended.
    pub fn stacked_features(&self) -> Csr<T> {
        self.base
            .features()
            .vstack(&self.new_features)
            .expect("batch width checked at construction")
    }

    /// Neighbor count of new node `local` excluding its self-loop.
    pub fn new_node_degree(&self, local: usize) -> usize {
        let row = self.base.num_nodes() + local;
        self.normalized.matrix().row(row).0.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, normalize, GraphInput, Splits};
    use crate::mixup::{MixKind, MixupBatch};

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph<f64> {
        build_graph(GraphInput {
            name: "a".into(),
            num_classes: 2,
            class_names: vec![],
            features: Csr::from_dense(&Matrix::from_fn(n, 2, |i, j| (i * 2 + j) as f64)),
            labels: (0..n).map(|i| Some(i % 2)).collect(),
            edges: edges.to_vec(),
            splits: Splits::default(),
        })
        .unwrap()
    }

    fn batch(g: &Graph<f64>, rows: &[((usize, usize), Vec<usize>)]) -> MixupBatch<f64> {
        let mut b = MixupBatch::empty(g.num_features(), g.num_classes());
        for ((i, j), attach) in rows {
            b.push(
                MixKind::Intra,
                (*i, *j),
                0.5,
                vec![(0, 1.0)],
                vec![1.0, 0.0],
            );
            *b.attachments.last_mut().unwrap() = attach.clone();
        }
        b
    }

    #[test]
    fn empty_batch_matches_base_normalization() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]);
        let view = build_augmented_view(&g, &MixupBatch::empty(2, 2)).unwrap();
        let base = normalize(&g);
        assert_eq!(view.normalized().matrix(), base.matrix());
    }

    #[test]
    fn new_node_on_its_sources() {
        let g = graph(4, &[(0, 1), (2, 3)]);
        let view = build_augmented_view(&g, &batch(&g, &[((0, 2), vec![0, 2])])).unwrap();
        let a = view.normalized();
        assert_eq!(a.degrees()[4], 3.0);
        assert!((a.value(4, 4) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(view.new_node_degree(0), 2);
        assert_eq!(view.new_edges(), &[(0, 0), (0, 2)]);
        assert_eq!(view.stacked_features().rows(), 5);
    }

    #[test]
    fn shared_neighbor_row_is_rescaled() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let base = normalize(&g);
        let k = 2;
        let view = build_augmented_view(
            &g,
            &batch(&g, &[((1, 3), vec![1, 2, 3]), ((0, 4), vec![0, 2, 4])]),
        )
        .unwrap();
        let a = view.normalized();
        let (old, new) = (base.degrees()[k], a.degrees()[k]);
        assert_eq!(new, old + 2.0);
        // Row k recomputed from the closed form: only d̃_k and the new
        // neighbors' degrees change.
        let ratio = (old / new).sqrt();
        for &j in &[2usize, 1, 3] {
            let expect = base.value(k, j) * ratio * (base.degrees()[j] / a.degrees()[j]).sqrt();
            assert!((a.value(k, j) - expect).abs() < 1e-15);
        }
        assert!((a.value(k, k) - base.value(k, k) * ratio * ratio).abs() < 1e-15);
        // New nodes never touch each other.
        assert_eq!(a.value(5, 6), 0.0);
    }

    #[test]
    fn rejects_bad_attachment() {
        let g = graph(3, &[(0, 1)]);
        assert!(build_augmented_view(&g, &batch(&g, &[((0, 1), vec![0, 9])])).is_err());
        assert!(build_augmented_view(&g, &batch(&g, &[((0, 1), vec![1, 0])])).is_err());
    }
}

//! Immutable base graph plus the normalization, homophily and augmentation
//! operations defined over it.

mod augment;
mod homophily;
mod normalize;

pub use augment::{build_augmented_view, AugmentedView};
pub use homophily::{homophily_ratios, mean_homophily};
pub use normalize::{normalize, NormalizedAdjacency};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Csr;
use crate::scalar::Scalar;

/// Train/validation/test node index sets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Which split a node-level query refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Raw material for [`build_graph`].
#[derive(Clone, Debug)]
pub struct GraphInput<T> {
    pub name: String,
    pub num_classes: usize,
    pub class_names: Vec<String>,
    pub features: Csr<T>,
    pub labels: Vec<Option<usize>>,
    pub edges: Vec<(usize, usize)>,
    pub splits: Splits,
}

/// Counts of input edge records that did not survive construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub input_records: usize,
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
}

/// Undirected, unweighted attributed graph with sorted CSR neighbor lists.
///
/// Self-loops are never stored; they only appear inside
/// [`NormalizedAdjacency`].
#[derive(Clone, Debug)]
pub struct Graph<T> {
    name: String,
    num_classes: usize,
    class_names: Vec<String>,
    features: Csr<T>,
    labels: Vec<Option<usize>>,
    indptr: Vec<usize>,
    neighbors: Vec<usize>,
    edge_ids: Vec<usize>,
    edges: Vec<(usize, usize)>,
    splits: Splits,
    stats: BuildStats,
}

/// Validates `input`, symmetrizes and deduplicates its edge list, and packs it
/// into CSR form.
pub fn build_graph<T: Scalar>(input: GraphInput<T>) -> Result<Graph<T>> {
    let n = input.features.rows();
    if input.labels.len() != n {
        return Err(Error::validation(
            "labels",
            format!("{} labels for {n} nodes", input.labels.len()),
        ));
    }
    if input.num_classes == 0 {
        return Err(Error::validation("num_classes", "must be positive"));
    }
    for (i, l) in input.labels.iter().enumerate() {
        if let Some(c) = *l {
            if c >= input.num_classes {
                return Err(Error::validation(
                    format!("label row {i}"),
                    format!("class {c} out of range (|C| = {})", input.num_classes),
                ));
            }
        }
    }
    for (name, set) in [
        ("train", &input.splits.train),
        ("val", &input.splits.val),
        ("test", &input.splits.test),
    ] {
        for (row, &v) in set.iter().enumerate() {
            if v >= n {
                return Err(Error::validation(
                    format!("{name} mask row {row}"),
                    format!("node {v} out of range (N = {n})"),
                ));
            }
            if input.labels[v].is_none() {
                return Err(Error::validation(
                    format!("{name} mask row {row}"),
                    format!("node {v} has no label"),
                ));
            }
        }
    }
    let mut owner = vec![None::<&str>; n];
    for (name, set) in [
        ("train", &input.splits.train),
        ("val", &input.splits.val),
        ("test", &input.splits.test),
    ] {
        for &v in set {
            match owner[v] {
                Some(prev) if prev != name => {
                    return Err(Error::validation(
                        "masks",
                        format!("node {v} is in both {prev} and {name}"),
                    ))
                }
                Some(_) => {
                    return Err(Error::validation(
                        format!("{name} mask"),
                        format!("node {v} listed twice"),
                    ))
                }
                None => owner[v] = Some(name),
            }
        }
    }

    let mut stats = BuildStats {
        input_records: input.edges.len(),
        ..BuildStats::default()
    };
    let mut pairs = BTreeSet::new();
    for (row, &(u, v)) in input.edges.iter().enumerate() {
        if u >= n || v >= n {
            return Err(Error::validation(
                format!("edge row {row}"),
                format!("endpoint ({u}, {v}) out of range (N = {n})"),
            ));
        }
        if u == v {
            stats.self_loops_dropped += 1;
            continue;
        }
        if !pairs.insert((u.min(v), u.max(v))) {
            stats.duplicates_dropped += 1;
        }
    }
    if stats.self_loops_dropped > 0 {
        log::warn!(
            "{}: dropped {} self-loop edge records",
            input.name,
            stats.self_loops_dropped
        );
    }
    let edges: Vec<(usize, usize)> = pairs.into_iter().collect();

    let mut degree = vec![0usize; n];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    let mut indptr = Vec::with_capacity(n + 1);
    indptr.push(0);
    for d in &degree {
        indptr.push(indptr.last().unwrap() + d);
    }
    let mut cursor = indptr[..n].to_vec();
    let mut neighbors = vec![0; indptr[n]];
    let mut edge_ids = vec![0; indptr[n]];
    // Edges are sorted by (min, max), which fills every row in ascending order.
    for (id, &(u, v)) in edges.iter().enumerate() {
        neighbors[cursor[u]] = v;
        edge_ids[cursor[u]] = id;
        cursor[u] += 1;
    }
    for (id, &(u, v)) in edges.iter().enumerate() {
        neighbors[cursor[v]] = u;
        edge_ids[cursor[v]] = id;
        cursor[v] += 1;
    }
    for i in 0..n {
        let span = indptr[i]..indptr[i + 1];
        let mut row: Vec<(usize, usize)> = neighbors[span.clone()]
            .iter()
            .copied()
            .zip(edge_ids[span.clone()].iter().copied())
            .collect();
        row.sort_unstable();
        for (k, (nb, id)) in row.into_iter().enumerate() {
            neighbors[span.start + k] = nb;
            edge_ids[span.start + k] = id;
        }
    }

    let class_names = if input.class_names.is_empty() {
        (0..input.num_classes).map(|c| format!("class_{c}")).collect()
    } else if input.class_names.len() == input.num_classes {
        input.class_names
    } else {
        return Err(Error::validation(
            "class_names",
            format!(
                "{} names for {} classes",
                input.class_names.len(),
                input.num_classes
            ),
        ));
    };

    Ok(Graph {
        name: input.name,
        num_classes: input.num_classes,
        class_names,
        features: input.features,
        labels: input.labels,
        indptr,
        neighbors,
        edge_ids,
        edges,
        splits: input.splits,
        stats,
    })
}

impl<T: Scalar> Graph<T> {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn features(&self) -> &Csr<T> {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, node: usize) -> Option<usize> {
        self.labels[node]
    }

    /// Undirected edges as `(u, v)` with `u < v`, sorted; position = edge id.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[self.indptr[node]..self.indptr[node + 1]]
    }

    /// Edge ids parallel to [`Graph::neighbors`].
    #[inline]
    pub fn neighbor_edge_ids(&self, node: usize) -> &[usize] {
        &self.edge_ids[self.indptr[node]..self.indptr[node + 1]]
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.indptr[node + 1] - self.indptr[node]
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    pub fn split(&self, which: Split) -> &[usize] {
        match which {
            Split::Train => &self.splits.train,
            Split::Val => &self.splits.val,
            Split::Test => &self.splits.test,
        }
    }

    pub fn build_stats(&self) -> BuildStats {
        self.stats
    }

    /// Copy of this graph with each feature row divided by its L1 norm (the
    /// plain row sum for non-negative features).
    pub fn with_row_normalized_features(&self) -> Self {
        Self {
            features: self.features.row_normalized(),
            ..self.clone()
        }
    }

    pub fn cast<U: Scalar>(&self) -> Graph<U> {
        Graph {
            name: self.name.clone(),
            num_classes: self.num_classes,
            class_names: self.class_names.clone(),
            features: self.features.cast(),
            labels: self.labels.clone(),
            indptr: self.indptr.clone(),
            neighbors: self.neighbors.clone(),
            edge_ids: self.edge_ids.clone(),
            edges: self.edges.clone(),
            splits: self.splits.clone(),
            stats: self.stats,
        }
    }

    /// Edge id of `{u, v}`, if the edge exists.
    pub fn edge_id(&self, u: usize, v: usize) -> Option<usize> {
        let nb = self.neighbors(u);
        nb.binary_search(&v)
            .ok()
            .map(|k| self.neighbor_edge_ids(u)[k])
    }
}

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph, GraphInput, Splits};
use crate::linalg::CsrBuilder;
use crate::scalar::Scalar;
use crate::Rng;

/// Stochastic block model with balanced classes and Gaussian class-mean
/// features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub num_features: usize,
    /// Standard deviation of the isotropic noise added to each class mean.
    pub noise: f64,
    /// Target fraction of same-class neighbors, in `[0, 1]`.
    pub homophily: f64,
    pub mean_degree: f64,
    pub train_per_class: usize,
    pub num_val: usize,
    pub num_test: usize,
    pub seed: u64,
}

impl Default for SbmSpec {
    fn default() -> Self {
        Self {
            num_nodes: 2000,
            num_classes: 4,
            num_features: 32,
            noise: 3.0,
            homophily: 0.7,
            mean_degree: 10.0,
            train_per_class: 20,
            num_val: 500,
            num_test: 1000,
            seed: 0,
        }
    }
}

/// `(p_in, p_out)` such that a node expects `h·d` same-class and `(1−h)·d`
/// other-class neighbors.
pub fn sbm_probabilities(spec: &SbmSpec) -> Result<(f64, f64)> {
    let n = spec.num_nodes as f64;
    let c = spec.num_classes as f64;
    let h = spec.homophily;
    let d = spec.mean_degree;
    if spec.num_classes < 2 || spec.num_nodes < 2 * spec.num_classes {
        return Err(Error::Infeasible(format!(
            "need at least 2 classes of 2 nodes each, got N = {}, |C| = {}",
            spec.num_nodes, spec.num_classes
        )));
    }
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::Infeasible(format!("homophily {h} outside [0, 1]")));
    }
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::Infeasible(format!("mean degree {d} must be non-negative")));
    }
    let per_class = n / c;
    let p_in = h * d / (per_class - 1.0);
    let p_out = (1.0 - h) * d / (n - per_class);
    if p_in > 1.0 || p_out > 1.0 {
        let mut d_max = f64::INFINITY;
        if h > 0.0 {
            d_max = d_max.min((per_class - 1.0) / h);
        }
        if h < 1.0 {
            d_max = d_max.min((n - per_class) / (1.0 - h));
        }
        return Err(Error::Infeasible(format!(
            "p_in = {p_in:.4}, p_out = {p_out:.4}; with N = {}, |C| = {}, h = {h} the mean degree must lie in [0, {d_max:.3}]",
            spec.num_nodes, spec.num_classes
        )));
    }
    Ok((p_in, p_out))
}

/// Samples a graph from `spec`. Node `i` belongs to class `i·|C| / N`.
pub fn generate_sbm<T: Scalar>(spec: &SbmSpec) -> Result<Graph<T>> {
    let (p_in, p_out) = sbm_probabilities(spec)?;
    let n = spec.num_nodes;
    let c = spec.num_classes;
    let needed = spec.train_per_class * c + spec.num_val + spec.num_test;
    if needed > n {
        return Err(Error::Infeasible(format!(
            "splits need {needed} nodes, graph has {n}"
        )));
    }
    if !(spec.noise.is_finite() && spec.noise >= 0.0) {
        return Err(Error::Infeasible(format!("noise {} must be non-negative", spec.noise)));
    }
    let mut rng = Rng::seed_from_u64(spec.seed);
    let class_of = |i: usize| i * c / n;

    let means: Vec<Vec<f64>> = (0..c)
        .map(|_| {
            (0..spec.num_features)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect()
        })
        .collect();
    let mut b = CsrBuilder::new(spec.num_features);
    let mut row = vec![T::zero(); spec.num_features];
    for i in 0..n {
        for (f, slot) in row.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *slot = T::of(means[class_of(i)][f] + spec.noise * z);
        }
        b.push_dense_row(&row);
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if class_of(i) == class_of(j) { p_in } else { p_out };
            if p > 0.0 && rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut taken = vec![0usize; c];
    let mut splits = Splits::default();
    let mut rest = Vec::new();
    for &v in &order {
        if taken[class_of(v)] < spec.train_per_class {
            taken[class_of(v)] += 1;
            splits.train.push(v);
        } else {
            rest.push(v);
        }
    }
    splits.val = rest[..spec.num_val].to_vec();
    splits.test = rest[spec.num_val..spec.num_val + spec.num_test].to_vec();
    for s in [&mut splits.train, &mut splits.val, &mut splits.test] {
        s.sort_unstable();
    }

    build_graph(GraphInput {
        name: format!("sbm-n{n}-c{c}-h{}-s{}", spec.homophily, spec.seed),
        num_classes: c,
        class_names: (0..c).map(|k| format!("block{k}")).collect(),
        features: b.finish(),
        labels: (0..n).map(|i| Some(class_of(i))).collect(),
        edges,
        splits,
    })
}

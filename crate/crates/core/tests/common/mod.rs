//! Test-only oracles. Nothing here calls into the library's numeric kernels:
//! the dense GCN below is a straight-line re-evaluation of the closed form.
#![allow(dead_code)]

use rand::{Rng as _, SeedableRng};
use smixup::gcn::{GcnModel, LossSpec};
use smixup::graph::{build_graph, Graph, GraphInput, Splits};
use smixup::linalg::{Csr, Matrix};
use smixup::Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn to_dense(m: &Matrix<f64>) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for p in 0..k {
            for j in 0..m {
                out[i][j] += a[i][p] * b[p][j];
            }
        }
    }
    out
}

/// `D̃^{-1/2} Ã D̃^{-1/2}` with row-sum degrees.
pub fn dense_normalize(raw: &Dense) -> Dense {
    let n = raw.len();
    let d: Vec<f64> = raw.iter().map(|r| r.iter().sum()).collect();
    (0..n)
        .map(|i| (0..n).map(|j| raw[i][j] / (d[i] * d[j]).sqrt()).collect())
        .collect()
}

/// `softmax(Â relu(Â X W1) W2)` evaluated from scratch.
pub fn dense_forward(raw: &Dense, x: &Dense, w1: &Dense, w2: &Dense) -> Dense {
    let a = dense_normalize(raw);
    let h: Dense = matmul(&a, &matmul(x, w1))
        .into_iter()
        .map(|r| r.into_iter().map(|v| v.max(0.0)).collect())
        .collect();
    matmul(&a, &matmul(&h, w2))
        .into_iter()
        .map(|z| {
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

pub struct DenseTarget {
    pub rows: Vec<usize>,
    pub targets: Dense,
    pub weight: f64,
}

pub fn dense_loss(probs: &Dense, specs: &[DenseTarget]) -> f64 {
    let mut total = 0.0;
    for s in specs {
        let mut acc = 0.0;
        for (r, &node) in s.rows.iter().enumerate() {
            for c in 0..probs[node].len() {
                if s.targets[r][c] != 0.0 {
                    acc -= s.targets[r][c] * probs[node][c].max(1e-12).ln();
                }
            }
        }
        total += s.weight * acc;
    }
    total
}

/// Random small problem: graph, model, and a mixed one-hot/soft loss.
pub struct Fixture {
    pub graph: Graph<f64>,
    pub model: GcnModel<f64>,
    pub specs: Vec<LossSpec<f64>>,
    pub dense_specs: Vec<DenseTarget>,
}

pub struct FixtureSize {
    pub nodes: usize,
    pub features: usize,
    pub hidden: usize,
    pub classes: usize,
}

pub fn random_size(rng: &mut Rng) -> FixtureSize {
    FixtureSize {
        nodes: rng.random_range(3..=15),
        features: rng.random_range(1..=6),
        hidden: rng.random_range(1..=8),
        classes: rng.random_range(2..=4),
    }
}

pub fn random_fixture(seed: u64, size: FixtureSize) -> Fixture {
    let mut rng = Rng::seed_from_u64(seed);
    let FixtureSize {
        nodes: n,
        features: f,
        hidden: d,
        classes: c,
    } = size;
    let x = Matrix::from_fn(n, f, |_, _| {
        if rng.random::<f64>() < 0.2 {
            0.0
        } else {
            rng.random_range(-1.0..1.0)
        }
    });
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < 0.35 {
                edges.push((i, j));
            }
        }
    }
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
    let graph = build_graph(GraphInput {
        name: format!("fixture-{seed}"),
        num_classes: c,
        class_names: vec![],
        features: Csr::from_dense(&x),
        labels: labels.iter().map(|&l| Some(l)).collect(),
        edges,
        splits: Splits::default(),
    })
    .unwrap();
    let w1 = Matrix::from_fn(f, d, |_, _| rng.random_range(-1.0..1.0));
    let w2 = Matrix::from_fn(d, c, |_, _| rng.random_range(-1.0..1.0));
    let model = GcnModel::from_weights(w1, w2).unwrap();

    let hard: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.5).collect();
    let soft: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.4).collect();
    let hard_targets: Dense = hard
        .iter()
        .map(|&v| (0..c).map(|k| if k == labels[v] { 1.0 } else { 0.0 }).collect())
        .collect();
    let soft_targets: Dense = soft
        .iter()
        .map(|_| {
            let raw: Vec<f64> = (0..c).map(|_| rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        })
        .collect();
    let w_hard = 1.0 / hard.len().max(1) as f64;
    let w_soft = 0.7 / soft.len().max(1) as f64;
    // an empty row list would give a 0 x 0 matrix
    let target_matrix = |rows: &Dense| {
        if rows.is_empty() {
            Matrix::zeros(0, c)
        } else {
            Matrix::from_rows(rows).unwrap()
        }
    };
    let specs = vec![
        LossSpec::new(hard.clone(), target_matrix(&hard_targets), w_hard).unwrap(),
        LossSpec::new(soft.clone(), target_matrix(&soft_targets), w_soft).unwrap(),
    ];
    let dense_specs = vec![
        DenseTarget {
            rows: hard,
            targets: hard_targets,
            weight: w_hard,
        },
        DenseTarget {
            rows: soft,
            targets: soft_targets,
            weight: w_soft,
        },
    ];
    Fixture {
        graph,
        model,
        specs,
        dense_specs,
    }
}

/// `Ã = A + I` as a dense matrix.
pub fn dense_raw_adjacency(g: &Graph<f64>) -> Dense {
    let n = g.num_nodes();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = 1.0;
        for &j in g.neighbors(i) {
            a[i][j] = 1.0;
        }
    }
    a
}

/// Agreement statistics between analytic and finite-difference gradients.
#[derive(Debug, Default, Clone, Copy)]
pub struct GradCheck {
    pub max_rel: f64,
    pub max_abs_small: f64,
    pub checked: usize,
}

impl GradCheck {
    pub fn record(&mut self, analytic: f64, numeric: f64) {
        self.checked += 1;
        if analytic.abs() < 1e-8 {
            self.max_abs_small = self.max_abs_small.max((analytic - numeric).abs());
        } else {
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
            self.max_rel = self.max_rel.max(rel);
        }
    }

    pub fn merge(&mut self, other: GradCheck) {
        self.max_rel = self.max_rel.max(other.max_rel);
        self.max_abs_small = self.max_abs_small.max(other.max_abs_small);
        self.checked += other.checked;
    }

    pub fn passes(&self) -> bool {
        self.max_rel < 1e-4 && self.max_abs_small < 1e-8
    }
}

pub const FD_STEP: f64 = 1e-5;

/// Central differences on every W1, W2 and stored Ã entry against the
/// library's analytic gradients.
pub fn check_fixture(fx: &Fixture) -> GradCheck {
    use smixup::gcn::{backward, forward, Mode};
    use smixup::graph::normalize;

    let g = &fx.graph;
    let adj = normalize(g);
    let trace = forward(&fx.model, &adj, g.features(), Mode::Deterministic).unwrap();
    let grads = backward(&fx.model, &trace, &fx.specs, true).unwrap();

    let x = to_dense(&g.features().to_dense());
    let w1 = to_dense(fx.model.w1());
    let w2 = to_dense(fx.model.w2());
    let raw = dense_raw_adjacency(g);
    let eval = |raw: &Dense, w1: &Dense, w2: &Dense| {
        dense_loss(&dense_forward(raw, &x, w1, w2), &fx.dense_specs)
    };
    let h = FD_STEP;
    let mut check = GradCheck::default();

    for i in 0..w1.len() {
        for j in 0..w1[i].len() {
            let (mut p, mut m) = (w1.clone(), w1.clone());
            p[i][j] += h;
            m[i][j] -= h;
            let fd = (eval(&raw, &p, &w2) - eval(&raw, &m, &w2)) / (2.0 * h);
            check.record(grads.w1.get(i, j), fd);
        }
    }
    for i in 0..w2.len() {
        for j in 0..w2[i].len() {
            let (mut p, mut m) = (w2.clone(), w2.clone());
            p[i][j] += h;
            m[i][j] -= h;
            let fd = (eval(&raw, &w1, &p) - eval(&raw, &w1, &m)) / (2.0 * h);
            check.record(grads.w2.get(i, j), fd);
        }
    }
    let d_adj = grads.adjacency.as_ref().unwrap();
    let csr = adj.matrix();
    for i in 0..csr.rows() {
        for pos in csr.row_span(i) {
            let j = csr.indices()[pos];
            let (mut p, mut m) = (raw.clone(), raw.clone());
            p[i][j] += h;
            m[i][j] -= h;
            let fd = (eval(&p, &w1, &w2) - eval(&m, &w1, &w2)) / (2.0 * h);
            check.record(d_adj[pos], fd);
        }
    }
    check
}

/// Directory holding converted benchmark bundles: `$SMIXUP_DATA` or
/// `<workspace>/data`.
pub fn data_root() -> std::path::PathBuf {
    std::env::var_os("SMIXUP_DATA")
        .map(Into::into)
        .unwrap_or_else(|| std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

pub fn bundle(name: &str) -> Option<std::path::PathBuf> {
    let p = data_root().join(name);
    p.join("meta.json").exists().then_some(p)
}

/// `⌈p·n / q⌉` in integer arithmetic.
pub fn ceil_frac(p: usize, q: usize, n: usize) -> usize {
    (p * n).div_ceil(q)
}

/// Pools recomputed from scratch: `(high, low, mid)` per class for
/// `r = p/q`.
pub fn pool_oracle(
    membership: &[usize],
    confidence: &[f64],
    classes: usize,
    p: usize,
    q: usize,
) -> Vec<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    (0..classes)
        .map(|c| {
            let mut members: Vec<(f64, usize)> = membership
                .iter()
                .enumerate()
                .filter(|(_, &m)| m == c)
                .map(|(v, _)| (confidence[v], v))
                .collect();
            // Descending confidence, ascending index.
            members.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let ranked: Vec<usize> = members.into_iter().map(|(_, v)| v).collect();
            let n = ranked.len();
            let h = ceil_frac(p, q, n).min(n);
            let l = h.min(n - h);
            let m = ceil_frac(2 * p, q, n).min(n);
            let s = (n - m) / 2;
            (
                ranked[..h].to_vec(),
                ranked[n - l..].to_vec(),
                ranked[s..s + m].to_vec(),
            )
        })
        .collect()
}

/// Threshold of the top `⌈p·|E|/q⌉` gradients by full descending sort.
pub fn threshold_oracle(values: &[f64], p: usize, q: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let k = ceil_frac(p, q, v.len()).clamp(1, v.len());
    v[k - 1]
}

/// Mixup batch invariants; returns a description of the first violation.
pub fn check_batch<T: smixup::Scalar>(
    g: &Graph<T>,
    batch: &smixup::mixup::MixupBatch<T>,
    membership: &[usize],
) -> Result<(), String> {
    use smixup::mixup::MixKind;
    let tol = 1e-9_f64.max(64.0 * T::epsilon().as_f64());
    for r in 0..batch.len() {
        let label: Vec<f64> = batch.soft_labels.row(r).iter().map(|v| v.as_f64()).collect();
        let sum: f64 = label.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(format!("row {r}: label sums to {sum}"));
        }
        let support: Vec<usize> = (0..label.len()).filter(|&c| label[c] != 0.0).collect();
        let (i, j) = batch.sources[r];
        let lambda = batch.lambdas[r].as_f64();
        if !(0.0..=1.0).contains(&lambda) {
            return Err(format!("row {r}: lambda {lambda}"));
        }
        match batch.kinds[r] {
            MixKind::Intra => {
                if support.len() != 1 || label[support[0]] != 1.0 {
                    return Err(format!("row {r}: intra label not one-hot: {label:?}"));
                }
                if membership[i] != support[0] || membership[j] != support[0] {
                    return Err(format!("row {r}: intra sources outside class"));
                }
            }
            MixKind::Inter => {
                if support.len() > 2 {
                    return Err(format!("row {r}: inter support {support:?}"));
                }
                let (ci, cj) = (membership[i], membership[j]);
                if ci == cj {
                    return Err(format!("row {r}: inter sources share class {ci}"));
                }
                if (label[ci] - lambda).abs() > tol || (label[cj] - (1.0 - lambda)).abs() > tol {
                    return Err(format!("row {r}: inter label {label:?} vs lambda {lambda}"));
                }
                if lambda != 0.5 {
                    let heavy = if lambda > 0.5 { ci } else { cj };
                    let arg = (0..label.len()).fold(0, |b, c| if label[c] > label[b] { c } else { b });
                    if arg != heavy {
                        return Err(format!("row {r}: argmax {arg}, heavier source class {heavy}"));
                    }
                }
            }
        }
        let xi = g.features().dense_row(i);
        let xj = g.features().dense_row(j);
        let x = batch.features.dense_row(r);
        for f in 0..x.len() {
            let (a, b, v) = (xi[f].as_f64(), xj[f].as_f64(), x[f].as_f64());
            let expect = lambda * a + (1.0 - lambda) * b;
            if (v - expect).abs() > tol * (1.0 + a.abs() + b.abs()) {
                return Err(format!("row {r} col {f}: {v} vs {expect}"));
            }
            if v < a.min(b) - tol || v > a.max(b) + tol {
                return Err(format!("row {r} col {f}: {v} off segment [{a}, {b}]"));
            }
        }
        if lambda == 1.0 && x != xi {
            return Err(format!("row {r}: lambda 1 does not reproduce source"));
        }
        if lambda == 0.0 && x != xj {
            return Err(format!("row {r}: lambda 0 does not reproduce source"));
        }
    }
    Ok(())
}

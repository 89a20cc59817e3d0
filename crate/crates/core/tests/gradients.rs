mod common;

use common::*;
use rand::SeedableRng;
use smixup::gcn::{backward, edge_gradient_map, forward, loss, GcnModel, Gradients, LossSpec, Mode};
use smixup::graph::{build_graph, normalize, GraphInput, NormalizedAdjacency, Splits};
use smixup::linalg::{Csr, Matrix};
use smixup::Rng;

#[test]
fn analytic_gradients_match_central_differences() {
    let mut sizes = Rng::seed_from_u64(2024);
    let mut total = GradCheck::default();
    for seed in 0..12 {
        let fx = random_fixture(seed, random_size(&mut sizes));
        let c = check_fixture(&fx);
        assert!(c.passes(), "fixture {seed}: {c:?}");
        total.merge(c);
    }
    assert!(total.checked > 500);
}

#[test]
fn forward_matches_straight_line_evaluation() {
    let fx = random_fixture(
        77,
        FixtureSize {
            nodes: 8,
            features: 5,
            hidden: 4,
            classes: 3,
        },
    );
    let adj = normalize(&fx.graph);
    let trace = forward(&fx.model, &adj, fx.graph.features(), Mode::Deterministic).unwrap();
    let oracle = dense_forward(
        &dense_raw_adjacency(&fx.graph),
        &to_dense(&fx.graph.features().to_dense()),
        &to_dense(fx.model.w1()),
        &to_dense(fx.model.w2()),
    );
    for i in 0..8 {
        let row = trace.probs().row(i);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for c in 0..3 {
            assert!((row[c] - oracle[i][c]).abs() < 1e-12);
            assert!(row[c] > 0.0 && row[c] < 1.0);
        }
    }
    let l = loss(&trace, &fx.specs).unwrap();
    assert!((l - dense_loss(&oracle, &fx.dense_specs)).abs() < 1e-12);
}

fn isolated(n: usize, f: usize, c: usize) -> smixup::graph::Graph<f64> {
    build_graph(GraphInput {
        name: "iso".into(),
        num_classes: c,
        class_names: vec![],
        features: Csr::from_dense(&Matrix::from_fn(n, f, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0)),
        labels: vec![Some(0); n],
        edges: vec![],
        splits: Splits::default(),
    })
    .unwrap()
}

#[test]
fn zero_weights_give_uniform_probabilities() {
    let g = isolated(1, 3, 4);
    let adj = normalize(&g);
    let model = GcnModel::from_weights(Matrix::zeros(3, 2), Matrix::zeros(2, 4)).unwrap();
    let t = forward(&model, &adj, g.features(), Mode::Deterministic).unwrap();
    assert_eq!(t.probs().row(0), &[0.25; 4]);
}

#[test]
fn identity_propagation_reduces_to_mlp() {
    let g = isolated(5, 3, 2);
    let adj = normalize(&g);
    let mut rng = Rng::seed_from_u64(5);
    let model = GcnModel::<f64>::new(3, 4, 2, &mut rng);
    let t = forward(&model, &adj, g.features(), Mode::Deterministic).unwrap();
    let x = g.features().to_dense();
    let h = x.matmul(model.w1()).unwrap().map(|v| v.max(0.0));
    let z = h.matmul(model.w2()).unwrap();
    assert!(t.logits().max_abs_diff(&z) < 1e-15);
}

#[test]
fn loss_examples() {
    let g = isolated(2, 1, 7);
    let adj = normalize(&g);
    let model = GcnModel::from_weights(Matrix::zeros(1, 1), Matrix::zeros(1, 7)).unwrap();
    let t = forward(&model, &adj, g.features(), Mode::Deterministic).unwrap();
    let uniform = Matrix::from_fn(2, 7, |_, _| 1.0 / 7.0);
    let spec = LossSpec::new(vec![0, 1], uniform, 1.0).unwrap();
    let l = loss(&t, &[spec]).unwrap();
    assert!((l - 2.0 * 7f64.ln()).abs() < 1e-12);
    assert!((7f64.ln() - 1.9459).abs() < 1e-4);

    // One-hot target with p_c = 1 − ε gives loss ≈ ε.
    let eps: f64 = 1e-6;
    let w2 = Matrix::from_fn(1, 2, |_, j| if j == 0 { 0.0 } else { ((1.0 - eps) / eps).ln() });
    let w1 = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
    let model = GcnModel::from_weights(w1, w2).unwrap();
    let one = build_graph(GraphInput {
        name: "one".into(),
        num_classes: 2,
        class_names: vec![],
        features: Csr::from_dense(&Matrix::from_vec(1, 1, vec![1.0]).unwrap()),
        labels: vec![Some(1)],
        edges: vec![],
        splits: Splits::default(),
    })
    .unwrap();
    let adj = normalize(&one);
    let t = forward(&model, &adj, one.features(), Mode::Deterministic).unwrap();
    assert!((t.probs().get(0, 1) - (1.0 - eps)).abs() < 1e-12);
    let spec = LossSpec::one_hot(vec![0], &[1], 2, 1.0).unwrap();
    assert!((loss(&t, &[spec]).unwrap() - eps).abs() < 1e-11);
}

#[test]
fn one_hot_loss_is_negative_log_true_class() {
    let fx = random_fixture(3, FixtureSize { nodes: 9, features: 4, hidden: 3, classes: 3 });
    let adj = normalize(&fx.graph);
    let t = forward(&fx.model, &adj, fx.graph.features(), Mode::Deterministic).unwrap();
    let rows = vec![0, 2, 5];
    let classes = [2, 0, 1];
    let spec = LossSpec::one_hot(rows.clone(), &classes, 3, 1.0).unwrap();
    let expect: f64 = rows.iter().zip(classes).map(|(&r, c)| -t.probs().get(r, c).ln()).sum();
    assert!((loss(&t, &[spec]).unwrap() - expect).abs() < 1e-12);
}

#[test]
fn zero_weight_spec_gives_zero_gradients() {
    let fx = random_fixture(11, FixtureSize { nodes: 10, features: 4, hidden: 5, classes: 3 });
    let adj = normalize(&fx.graph);
    let t = forward(&fx.model, &adj, fx.graph.features(), Mode::Deterministic).unwrap();
    let specs: Vec<_> = fx.specs.iter().cloned().map(|s| s.with_weight(0.0)).collect();
    let g = backward(&fx.model, &t, &specs, true).unwrap();
    assert!(g.w1.as_slice().iter().all(|&v| v == 0.0));
    assert!(g.w2.as_slice().iter().all(|&v| v == 0.0));
    assert!(g.adjacency.unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn symmetric_perturbation_is_sum_of_directed_gradients() {
    let fx = random_fixture(21, FixtureSize { nodes: 12, features: 5, hidden: 6, classes: 3 });
    let g = &fx.graph;
    let adj = normalize(g);
    let t = forward(&fx.model, &adj, g.features(), Mode::Deterministic).unwrap();
    let grads = backward(&fx.model, &t, &fx.specs, true).unwrap();
    let d = grads.adjacency.as_ref().unwrap();
    let h = 1e-5;
    let eval = |shift: f64, u: usize, v: usize| {
        let mut raw = adj.raw_values().to_vec();
        let m = adj.matrix();
        raw[m.position(u, v).unwrap()] += shift;
        raw[m.position(v, u).unwrap()] += shift;
        let a2 = NormalizedAdjacency::from_raw(m.with_values(raw)).unwrap();
        let t2 = forward(&fx.model, &a2, g.features(), Mode::Deterministic).unwrap();
        loss(&t2, &fx.specs).unwrap()
    };
    for &(u, v) in g.edges().iter().take(6) {
        let fd = (eval(h, u, v) - eval(-h, u, v)) / (2.0 * h);
        let m = adj.matrix();
        let analytic = d[m.position(u, v).unwrap()] + d[m.position(v, u).unwrap()];
        assert!((fd - analytic).abs() <= 1e-6 * analytic.abs().max(1e-3), "{fd} vs {analytic}");
    }
}

#[test]
fn deterministic_passes_are_bit_identical() {
    let fx = random_fixture(8, FixtureSize { nodes: 14, features: 6, hidden: 8, classes: 4 });
    let adj = normalize(&fx.graph);
    let run = || {
        let t = forward(&fx.model, &adj, fx.graph.features(), Mode::Deterministic).unwrap();
        let g = backward(&fx.model, &t, &fx.specs, true).unwrap();
        (t.probs().clone(), g.w1, g.w2, g.adjacency.unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn trimmed_trace_cannot_backpropagate() {
    let fx = random_fixture(2, FixtureSize { nodes: 6, features: 2, hidden: 2, classes: 2 });
    let adj = normalize(&fx.graph);
    let mut t = forward(&fx.model, &adj, fx.graph.features(), Mode::Deterministic).unwrap();
    t.discard_intermediates();
    assert!(matches!(
        backward(&fx.model, &t, &fx.specs, true),
        Err(smixup::Error::Contract(_))
    ));
}

#[test]
fn forward_shape_errors_name_dimensions() {
    let fx = random_fixture(2, FixtureSize { nodes: 6, features: 2, hidden: 2, classes: 2 });
    let adj = normalize(&fx.graph);
    let bad = GcnModel::from_weights(Matrix::zeros(3, 2), Matrix::zeros(2, 2)).unwrap();
    let err = forward(&bad, &adj, fx.graph.features(), Mode::Deterministic).unwrap_err();
    assert!(err.to_string().contains("expected 3, got 2"), "{err}");
}

#[test]
fn edge_gradient_map_examples() {
    let fx = random_fixture(4, FixtureSize { nodes: 7, features: 3, hidden: 3, classes: 2 });
    let g = &fx.graph;
    let adj = normalize(g);
    let nnz = adj.nnz();
    let zero = Gradients { w1: Matrix::zeros(0, 0), w2: Matrix::zeros(0, 0), adjacency: Some(vec![0.0; nnz]) };
    assert!(edge_gradient_map(g, &adj, &zero).unwrap().values().iter().all(|&v| v == 0.0));

    // Antisymmetric: dA_ij = −dA_ji = g.
    let m = adj.matrix();
    let mut anti = vec![0.0; nnz];
    for (id, &(u, v)) in g.edges().iter().enumerate() {
        let val = (id as f64 + 1.0) * 0.1;
        anti[m.position(u, v).unwrap()] = val;
        anti[m.position(v, u).unwrap()] = -val;
    }
    let e = edge_gradient_map(g, &adj, &Gradients { adjacency: Some(anti.clone()), ..zero.clone() }).unwrap();
    for (id, &v) in e.values().iter().enumerate() {
        assert!((v - (id as f64 + 1.0) * 0.1).abs() < 1e-15);
    }

    // Random dA vs a direct per-edge loop.
    let mut rng = Rng::seed_from_u64(1);
    let rand_d: Vec<f64> = (0..nnz).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
    let e = edge_gradient_map(g, &adj, &Gradients { adjacency: Some(rand_d.clone()), ..zero.clone() }).unwrap();
    assert_eq!(e.len(), g.num_edges());
    for (id, &(u, v)) in g.edges().iter().enumerate() {
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..m.rows() {
            for p in m.row_span(i) {
                let j = m.indices()[p];
                if (i, j) == (u, v) {
                    a = rand_d[p];
                }
                if (i, j) == (v, u) {
                    b = rand_d[p];
                }
            }
        }
        assert_eq!(e.get(id), (a.abs() + b.abs()) / 2.0);
    }

    let missing = Gradients { adjacency: None, ..zero };
    assert!(edge_gradient_map(g, &adj, &missing).is_err());
}

use crate::error::{Error, Result};
use crate::gcn::{ForwardTrace, GcnModel, LossSpec, PROB_FLOOR};
use crate::graph::{Graph, NormalizedAdjacency};
use crate::linalg::{dense::dot, Matrix};
use crate::scalar::Scalar;

/// Loss gradients for both weight matrices and, optionally, for every stored
/// entry of `Ã` (parallel to the normalized adjacency's CSR values).
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub w1: Matrix<T>,
    pub w2: Matrix<T>,
    pub adjacency: Option<Vec<T>>,
}

/// Reverse pass through the stored trace.
///
/// Soft-target cross entropy through softmax: with `a_c = −t_c` where
/// `Ŷ_c > floor` (0 where the clamp is active), `∂L/∂z_k = a_k − Ŷ_k Σ_c a_c`.
pub fn backward<T: Scalar>(
    model: &GcnModel<T>,
    trace: &ForwardTrace<'_, T>,
    specs: &[LossSpec<T>],
    want_adjacency: bool,
) -> Result<Gradients<T>> {
    if !trace.complete {
        return Err(Error::Contract(
            "backward needs a trace with its intermediates".into(),
        ));
    }
    let probs = trace.probs();
    let (n, c) = probs.shape();
    if model.num_classes() != c || model.hidden() != trace.hidden.cols() {
        return Err(Error::Shape {
            context: "backward: model vs trace",
            expected: format!("hidden {} / classes {}", trace.hidden.cols(), c),
            actual: format!("hidden {} / classes {}", model.hidden(), model.num_classes()),
        });
    }
    let floor = T::of(PROB_FLOOR);
    let mut d_logits = Matrix::zeros(n, c);
    for spec in specs {
        spec.check_against(n, c)?;
        let w = spec.weight();
        if w == T::zero() {
            continue;
        }
        for (r, &node) in spec.rows().iter().enumerate() {
            let p = probs.row(node);
            let t = spec.targets().row(r);
            let mut a_sum = T::zero();
            for (&tc, &pc) in t.iter().zip(p) {
                if pc > floor {
                    a_sum -= tc;
                }
            }
            let out = d_logits.row_mut(node);
            for k in 0..c {
                let a_k = if p[k] > floor { -t[k] } else { T::zero() };
                out[k] += w * (a_k - p[k] * a_sum);
            }
        }
    }

    let a = trace.adj.matrix();
    let d_hw = a.t_spmm(&d_logits)?;
    let hidden_used = trace.hidden_dropped.as_ref().unwrap_or(&trace.hidden);
    let d_w2 = hidden_used.t_matmul(&d_hw)?;
    let mut d_h_pre = d_hw.matmul_t(model.w2())?;
    {
        let scale = trace.hidden_scale.as_deref();
        let pre = trace.h_pre.as_slice();
        for (k, g) in d_h_pre.as_mut_slice().iter_mut().enumerate() {
            let s = scale.map_or(T::one(), |s| s[k]);
            *g = if pre[k] > T::zero() { *g * s } else { T::zero() };
        }
    }
    let d_xw = a.t_spmm(&d_h_pre)?;
    let d_w1 = trace.input.t_spmm(&d_xw)?;

    let adjacency = want_adjacency.then(|| {
        let mut d_norm = Vec::with_capacity(a.nnz());
        for i in 0..n {
            let (cols, _) = a.row(i);
            for &j in cols {
                d_norm.push(
                    dot(d_logits.row(i), trace.hw.row(j)) + dot(d_h_pre.row(i), trace.xw.row(j)),
                );
            }
        }
        trace.adj.chain_to_raw(&d_norm)
    });

    Ok(Gradients {
        w1: d_w1,
        w2: d_w2,
        adjacency,
    })
}

/// Symmetrized per-edge gradient magnitude `e_ij = (|∂L/∂Ã_ij| + |∂L/∂Ã_ji|) / 2`,
/// one value per undirected base edge (indexed by edge id).
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeGradients<T> {
    values: Vec<T>,
}

impl<T: Scalar> EdgeGradients<T> {
    pub fn from_values(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, edge_id: usize) -> T {
        self.values[edge_id]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn edge_gradient_map<T: Scalar>(
    g: &Graph<T>,
    adj: &NormalizedAdjacency<T>,
    grads: &Gradients<T>,
) -> Result<EdgeGradients<T>> {
    let d = grads
        .adjacency
        .as_ref()
        .ok_or_else(|| Error::Contract("edge gradients need adjacency gradients".into()))?;
    if adj.num_nodes() < g.num_nodes() || d.len() != adj.nnz() {
        return Err(Error::Shape {
            context: "edge_gradient_map",
            expected: format!("{} adjacency gradient entries", adj.nnz()),
            actual: d.len().to_string(),
        });
    }
    let m = adj.matrix();
    let half = T::of(0.5);
    let mut values = Vec::with_capacity(g.num_edges());
    for &(u, v) in g.edges() {
        let (p, q) = match (m.position(u, v), m.position(v, u)) {
            (Some(p), Some(q)) => (p, q),
            _ => {
                return Err(Error::Contract(format!(
                    "edge ({u}, {v}) missing from the normalized adjacency"
                )))
            }
        };
        values.push((d[p].abs() + d[q].abs()) * half);
    }
    Ok(EdgeGradients { values })
}

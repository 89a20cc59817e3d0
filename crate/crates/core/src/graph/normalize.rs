use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{Csr, CsrBuilder};
use crate::scalar::Scalar;

/// `Â = D̃^{-1/2} Ã D̃^{-1/2}` with `Ã = A + I` and `d̃_i = Σ_j Ã_ij`.
///
/// Keeps `Ã` alongside `Â` (same sparsity pattern, diagonal always stored) so
/// gradients with respect to `Â` can be chained back to `Ã`.
#[derive(Clone, Debug)]
pub struct NormalizedAdjacency<T> {
    matrix: Csr<T>,
    raw: Vec<T>,
    degrees: Vec<T>,
    inv_sqrt: Vec<T>,
    diagonal: Vec<usize>,
}

/// Normalized transition matrix of the base graph.
pub fn normalize<T: Scalar>(g: &Graph<T>) -> NormalizedAdjacency<T> {
    let n = g.num_nodes();
    let mut b = CsrBuilder::new(n);
    for i in 0..n {
        b.push_row(with_self_loop(i, g.neighbors(i).iter().copied()).map(|j| (j, T::one())));
    }
    NormalizedAdjacency::from_raw(b.finish()).expect("graph rows are sorted with a diagonal")
}

/// Merges `i` into an ascending neighbor sequence that does not contain it.
pub(crate) fn with_self_loop(
    i: usize,
    neighbors: impl Iterator<Item = usize>,
) -> impl Iterator<Item = usize> {
    let mut placed = false;
    let mut pending = neighbors.peekable();
    std::iter::from_fn(move || {
        if !placed {
            match pending.peek() {
                Some(&j) if j < i => return pending.next(),
                _ => {
                    placed = true;
                    return Some(i);
                }
            }
        }
        pending.next()
    })
}

impl<T: Scalar> NormalizedAdjacency<T> {
    /// Normalizes an arbitrary nonnegative `Ã` whose rows all store their
    /// diagonal. Entries need not be symmetric in value.
    pub fn from_raw(raw: Csr<T>) -> Result<Self> {
        let n = raw.rows();
        if raw.cols() != n {
            return Err(Error::Shape {
                context: "NormalizedAdjacency::from_raw",
                expected: "square matrix".into(),
                actual: format!("{}x{}", n, raw.cols()),
            });
        }
        let mut diagonal = Vec::with_capacity(n);
        let mut degrees = Vec::with_capacity(n);
        for i in 0..n {
            let pos = raw
                .position(i, i)
                .ok_or_else(|| Error::validation(format!("row {i}"), "missing diagonal entry"))?;
            diagonal.push(pos);
            let (_, vals) = raw.row(i);
            let d: T = vals.iter().copied().sum();
            if d <= T::zero() {
                return Err(Error::validation(format!("row {i}"), "nonpositive degree"));
            }
            degrees.push(d);
        }
        let inv_sqrt: Vec<T> = degrees.iter().map(|d| d.sqrt().recip()).collect();
        let mut values = Vec::with_capacity(raw.nnz());
        for i in 0..n {
            let (idx, vals) = raw.row(i);
            for (&j, &a) in idx.iter().zip(vals) {
                values.push(a / (degrees[i] * degrees[j]).sqrt());
            }
        }
        Ok(Self {
            matrix: raw.with_values(values),
            raw: raw.values().to_vec(),
            degrees,
            inv_sqrt,
            diagonal,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.matrix.rows()
    }

    /// `Â` in CSR form.
    pub fn matrix(&self) -> &Csr<T> {
        &self.matrix
    }

    /// `Ã` values, parallel to `matrix().values()`.
    pub fn raw_values(&self) -> &[T] {
        &self.raw
    }

    /// Self-loop-inclusive degrees `d̃`.
    pub fn degrees(&self) -> &[T] {
        &self.degrees
    }

    pub fn diagonal_position(&self, i: usize) -> usize {
        self.diagonal[i]
    }

    pub fn nnz(&self) -> usize {
        self.raw.len()
    }

    /// `Â_ij`, zero when not stored.
    pub fn value(&self, i: usize, j: usize) -> T {
        self.matrix
            .position(i, j)
            .map_or(T::zero(), |p| self.matrix.values()[p])
    }

    /// Chains `∂L/∂Â` (parallel to the stored entries) to `∂L/∂Ã`, including
    /// the dependence of every `d̃_k` on row `k` of `Ã`.
    ///
    /// With `s_k = d̃_k^{-1/2}`:
    /// `∂L/∂Ã_kl = g_kl s_k s_l − ½ d̃_k^{-3/2} q_k` where
    /// `q_k = Σ_j g_kj Ã_kj s_j + Σ_i g_ik Ã_ik s_i`.
    pub fn chain_to_raw(&self, d_norm: &[T]) -> Vec<T> {
        assert_eq!(d_norm.len(), self.nnz());
        let n = self.num_nodes();
        let s = &self.inv_sqrt;
        let mut q = vec![T::zero(); n];
        for i in 0..n {
            let span = self.matrix.row_span(i);
            let cols = &self.matrix.indices()[span.clone()];
            for (k, &j) in span.zip(cols) {
                let c = d_norm[k] * self.raw[k];
                q[i] += c * s[j];
                q[j] += c * s[i];
            }
        }
        let half = T::of(0.5);
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..n {
            let span = self.matrix.row_span(i);
            let cols = &self.matrix.indices()[span.clone()];
            let shift = half * s[i] * s[i] * s[i] * q[i];
            for (k, &j) in span.zip(cols) {
                out.push(d_norm[k] * s[i] * s[j] - shift);
            }
        }
        out
    }
}

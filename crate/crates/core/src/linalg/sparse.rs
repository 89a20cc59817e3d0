use crate::error::{Error, Result};
use crate::linalg::dense::{axpy, Matrix};
use crate::scalar::Scalar;

/// Compressed sparse row matrix. Column indices within a row are strictly
/// increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    pub fn new(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if indptr.len() != rows + 1 || indptr[0] != 0 || indptr[rows] != indices.len() {
            return Err(Error::Shape {
                context: "Csr::new",
                expected: format!("indptr of length {} ending at {}", rows + 1, indices.len()),
                actual: format!("length {}", indptr.len()),
            });
        }
        if values.len() != indices.len() {
            return Err(Error::Shape {
                context: "Csr::new",
                expected: format!("{} values", indices.len()),
                actual: values.len().to_string(),
            });
        }
        for r in 0..rows {
            let cols_r = &indices[indptr[r]..indptr[r + 1]];
            if cols_r.windows(2).any(|w| w[0] >= w[1]) || cols_r.iter().any(|&c| c >= cols) {
                return Err(Error::validation(
                    format!("row {r}"),
                    "column indices must be strictly increasing and in range",
                ));
            }
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn empty(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Keeps every nonzero of `dense`.
    pub fn from_dense(dense: &Matrix<T>) -> Self {
        let mut b = CsrBuilder::new(dense.cols());
        for i in 0..dense.rows() {
            b.push_dense_row(dense.row(i));
        }
        b.finish()
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let span = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    #[inline]
    pub fn row_span(&self, i: usize) -> std::ops::Range<usize> {
        self.indptr[i]..self.indptr[i + 1]
    }

    /// Appends a row of strictly increasing `(column, value)` pairs.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, T)>) {
        for (c, v) in entries {
            debug_assert!(c < self.cols);
            self.indices.push(c);
            self.values.push(v);
        }
        self.indptr.push(self.indices.len());
        self.rows += 1;
    }

    /// Dense copy of row `i`.
    pub fn dense_row(&self, i: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        let (idx, val) = self.row(i);
        for (&c, &v) in idx.iter().zip(val) {
            out[c] = v;
        }
        out
    }

    pub fn to_dense(&self) -> Matrix<T> {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            let r = out.row_mut(i);
            for (&c, &v) in idx.iter().zip(val) {
                r[c] = v;
            }
        }
        out
    }

    /// Position of entry `(i, j)` in the value array, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let span = self.row_span(i);
        self.indices[span.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| span.start + k)
    }

    /// Same sparsity pattern with different values.
    pub fn with_values<U: Scalar>(&self, values: Vec<U>) -> Csr<U> {
        assert_eq!(values.len(), self.values.len());
        Csr {
            rows: self.rows,
            cols: self.cols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values,
        }
    }

    pub fn cast<U: Scalar>(&self) -> Csr<U> {
        self.with_values(self.values.iter().map(|v| U::of(v.as_f64())).collect())
    }

    /// Divides each row by its L1 norm; all-zero rows are left untouched.
    pub fn row_normalized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows {
            let span = self.row_span(i);
            let sum: T = out.values[span.clone()].iter().map(|v| v.abs()).sum();
            if sum != T::zero() {
                for v in &mut out.values[span] {
                    *v /= sum;
                }
            }
        }
        out
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Csr<T>) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Shape {
                context: "Csr::vstack",
                expected: format!("{} columns", self.cols),
                actual: other.cols.to_string(),
            });
        }
        let base = self.nnz();
        let mut indptr = self.indptr.clone();
        indptr.extend(other.indptr[1..].iter().map(|p| p + base));
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            indptr,
            indices,
            values,
        })
    }

    /// `self · rhs` for a dense right-hand side.
    pub fn spmm(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != rhs.rows() {
            return Err(Error::Shape {
                context: "Csr::spmm",
                expected: format!("{} rhs rows", self.cols),
                actual: rhs.rows().to_string(),
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols());
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            let o = out.row_mut(i);
            for (&c, &v) in idx.iter().zip(val) {
                axpy(v, rhs.row(c), o);
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn t_spmm(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.rows != rhs.rows() {
            return Err(Error::Shape {
                context: "Csr::t_spmm",
                expected: format!("{} rhs rows", self.rows),
                actual: rhs.rows().to_string(),
            });
        }
        let mut out = Matrix::zeros(self.cols, rhs.cols());
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            let r = rhs.row(i);
            for (&c, &v) in idx.iter().zip(val) {
                axpy(v, r, out.row_mut(c));
            }
        }
        Ok(out)
    }
}

/// Row-at-a-time CSR construction.
#[derive(Debug)]
pub struct CsrBuilder<T> {
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrBuilder<T> {
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a row given as strictly increasing `(column, value)` pairs.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, T)>) {
        for (c, v) in entries {
            debug_assert!(c < self.cols);
            debug_assert!(self.indices.len() == *self.indptr.last().unwrap()
                || *self.indices.last().unwrap() < c);
            self.indices.push(c);
            self.values.push(v);
        }
        self.indptr.push(self.indices.len());
    }

    pub fn push_dense_row(&mut self, row: &[T]) {
        self.push_row(
            row.iter()
                .enumerate()
                .filter(|(_, v)| **v != T::zero())
                .map(|(c, &v)| (c, v)),
        );
    }

    pub fn finish(self) -> Csr<T> {
        Csr {
            rows: self.indptr.len() - 1,
            cols: self.cols,
            indptr: self.indptr,
            indices: self.indices,
            values: self.values,
        }
    }
}

/// `a·x + b·y` for two sparse rows, merged by column. Exact zeros are
/// dropped.
pub fn combine_rows<T: Scalar>(
    a: T,
    x: (&[usize], &[T]),
    b: T,
    y: (&[usize], &[T]),
) -> Vec<(usize, T)> {
    let (xi, xv) = x;
    let (yi, yv) = y;
    let mut out = Vec::with_capacity(xi.len() + yi.len());
    let (mut p, mut q) = (0, 0);
    while p < xi.len() || q < yi.len() {
        let take_x = q >= yi.len() || (p < xi.len() && xi[p] < yi[q]);
        let take_y = p >= xi.len() || (q < yi.len() && yi[q] < xi[p]);
        if take_x {
            out.push((xi[p], a * xv[p]));
            p += 1;
        } else if take_y {
            out.push((yi[q], b * yv[q]));
            q += 1;
        } else {
            out.push((xi[p], a * xv[p] + b * yv[q]));
            p += 1;
            q += 1;
        }
    }
    out.retain(|&(_, v)| v != T::zero());
    out
}

use std::borrow::Cow;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::gcn::GcnModel;
use crate::graph::NormalizedAdjacency;
use crate::linalg::{Csr, Matrix};
use crate::scalar::Scalar;
use crate::Rng;

/// Forward-pass mode. Dropout (inverted, rate `dropout`) hits the input
/// features and the hidden layer in train mode only.
#[derive(Debug)]
pub enum Mode<'r> {
    Train { dropout: f64, rng: &'r mut Rng },
    Deterministic,
}

/// Every intermediate of `Ŷ = softmax(Â σ(Â X W¹) W²)` needed by backward.
#[derive(Clone, Debug)]
pub struct ForwardTrace<'a, T: Scalar> {
    pub(crate) adj: &'a NormalizedAdjacency<T>,
    pub(crate) input: Cow<'a, Csr<T>>,
    pub(crate) xw: Matrix<T>,
    pub(crate) h_pre: Matrix<T>,
    pub(crate) hidden: Matrix<T>,
    /// Post-dropout hidden layer; `None` when no dropout was applied.
    pub(crate) hidden_dropped: Option<Matrix<T>>,
    pub(crate) hidden_scale: Option<Vec<T>>,
    pub(crate) hw: Matrix<T>,
    pub(crate) logits: Matrix<T>,
    pub(crate) probs: Matrix<T>,
    pub(crate) complete: bool,
}

impl<'a, T: Scalar> ForwardTrace<'a, T> {
    pub fn adjacency(&self) -> &'a NormalizedAdjacency<T> {
        self.adj
    }

    /// Row-softmax probabilities `Ŷ`.
    pub fn probs(&self) -> &Matrix<T> {
        &self.probs
    }

    pub fn logits(&self) -> &Matrix<T> {
        &self.logits
    }

    /// Hidden representation `σ(Â X W¹)` before dropout.
    pub fn hidden(&self) -> &Matrix<T> {
        &self.hidden
    }

    pub fn num_nodes(&self) -> usize {
        self.probs.rows()
    }

    pub fn used_dropout(&self) -> bool {
        self.hidden_scale.is_some()
    }

    /// Releases the intermediates, keeping only hidden, logits and
    /// probabilities. Backward refuses a trimmed trace.
    pub fn discard_intermediates(&mut self) {
        self.xw = Matrix::zeros(0, 0);
        self.h_pre = Matrix::zeros(0, 0);
        self.hw = Matrix::zeros(0, 0);
        self.hidden_dropped = None;
        self.input = Cow::Owned(Csr::empty(0));
        self.complete = false;
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Argmax per row, lowest class index on ties.
    pub fn predictions(&self) -> Vec<usize> {
        (0..self.probs.rows()).map(|i| argmax(self.probs.row(i)).0).collect()
    }
}

/// `(index, value)` of the row maximum; the first maximal index wins.
pub fn argmax<T: Scalar>(row: &[T]) -> (usize, T) {
    let mut best = (0, row[0]);
    for (c, &v) in row.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (c, v);
        }
    }
    best
}

pub(crate) fn softmax_rows<T: Scalar>(logits: &Matrix<T>) -> Matrix<T> {
    let mut probs = logits.clone();
    for i in 0..probs.rows() {
        let row = probs.row_mut(i);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    probs
}

pub fn forward<'a, T: Scalar>(
    model: &GcnModel<T>,
    adj: &'a NormalizedAdjacency<T>,
    features: &'a Csr<T>,
    mode: Mode<'_>,
) -> Result<ForwardTrace<'a, T>> {
    if features.rows() != adj.num_nodes() {
        return Err(Error::Shape {
            context: "forward: feature rows vs adjacency nodes",
            expected: adj.num_nodes().to_string(),
            actual: features.rows().to_string(),
        });
    }
    if features.cols() != model.num_features() {
        return Err(Error::Shape {
            context: "forward: feature columns vs W1 rows",
            expected: model.num_features().to_string(),
            actual: features.cols().to_string(),
        });
    }
    let (input, mut dropout) = match mode {
        Mode::Train { dropout, rng } if dropout > 0.0 => {
            if !(0.0..1.0).contains(&dropout) {
                return Err(Error::Contract(format!("dropout rate {dropout} outside [0, 1)")));
            }
            let keep = T::of(1.0 / (1.0 - dropout));
            let mut x = features.clone();
            for v in x.values_mut() {
                *v = if rng.random::<f64>() < dropout { T::zero() } else { *v * keep };
            }
            (Cow::Owned(x), Some((dropout, keep, rng)))
        }
        _ => (Cow::Borrowed(features), None),
    };

    let a = adj.matrix();
    let xw = input.spmm(model.w1())?;
    let h_pre = a.spmm(&xw)?;
    let hidden = h_pre.map(|v| v.max(T::zero()));
    let (hidden_dropped, hidden_scale) = match dropout.as_mut() {
        Some((p, keep, rng)) => {
            let scale: Vec<T> = (0..hidden.as_slice().len())
                .map(|_| if rng.random::<f64>() < *p { T::zero() } else { *keep })
                .collect();
            let mut hd = hidden.clone();
            for (v, &s) in hd.as_mut_slice().iter_mut().zip(&scale) {
                *v *= s;
            }
            (Some(hd), Some(scale))
        }
        None => (None, None),
    };
    let hw = hidden_dropped.as_ref().unwrap_or(&hidden).matmul(model.w2())?;
    let logits = a.spmm(&hw)?;
    let probs = softmax_rows(&logits);
    Ok(ForwardTrace {
        adj,
        input,
        xw,
        h_pre,
        hidden,
        hidden_dropped,
        hidden_scale,
        hw,
        logits,
        probs,
        complete: true,
    })
}

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::gcn::Gradients;
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::Rng;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment accumulators for both weight matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m1: Matrix<T>,
    pub v1: Matrix<T>,
    pub m2: Matrix<T>,
    pub v2: Matrix<T>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    fn zeros(w1: &Matrix<T>, w2: &Matrix<T>) -> Self {
        Self {
            m1: Matrix::zeros(w1.rows(), w1.cols()),
            v1: Matrix::zeros(w1.rows(), w1.cols()),
            m2: Matrix::zeros(w2.rows(), w2.cols()),
            v2: Matrix::zeros(w2.rows(), w2.cols()),
            step: 0,
        }
    }
}

/// Two-layer GCN weights `W¹ (F×D)`, `W² (D×|C|)` and their optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnModel<T> {
    w1: Matrix<T>,
    w2: Matrix<T>,
    adam: AdamState<T>,
}

/// Glorot-uniform sample in `±sqrt(6 / (fan_in + fan_out))`.
fn glorot<T: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> Matrix<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| T::of(rng.random_range(-bound..bound)))
}

impl<T: Scalar> GcnModel<T> {
    pub fn new(features: usize, hidden: usize, classes: usize, rng: &mut Rng) -> Self {
        let w1 = glorot(features, hidden, rng);
        let w2 = glorot(hidden, classes, rng);
        let adam = AdamState::zeros(&w1, &w2);
        Self { w1, w2, adam }
    }

    pub fn from_weights(w1: Matrix<T>, w2: Matrix<T>) -> Result<Self> {
        if w1.cols() != w2.rows() {
            return Err(Error::Shape {
                context: "GcnModel::from_weights",
                expected: format!("W2 with {} rows", w1.cols()),
                actual: w2.rows().to_string(),
            });
        }
        let adam = AdamState::zeros(&w1, &w2);
        Ok(Self { w1, w2, adam })
    }

    pub fn from_parts(w1: Matrix<T>, w2: Matrix<T>, adam: AdamState<T>) -> Result<Self> {
        let mut model = Self::from_weights(w1, w2)?;
        if adam.m1.shape() != model.w1.shape()
            || adam.v1.shape() != model.w1.shape()
            || adam.m2.shape() != model.w2.shape()
            || adam.v2.shape() != model.w2.shape()
        {
            return Err(Error::Shape {
                context: "GcnModel::from_parts",
                expected: "moments shaped like their weights".into(),
                actual: format!("{:?}/{:?}", adam.m1.shape(), adam.m2.shape()),
            });
        }
        model.adam = adam;
        Ok(model)
    }

    pub fn w1(&self) -> &Matrix<T> {
        &self.w1
    }

    pub fn w2(&self) -> &Matrix<T> {
        &self.w2
    }

    pub fn adam(&self) -> &AdamState<T> {
        &self.adam
    }

    pub fn num_features(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.w2.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.w1.is_finite() && self.w2.is_finite()
    }

    /// Adam step with L2 weight decay folded into the gradient. `Ã` is not a
    /// parameter, so adjacency gradients are ignored here.
    pub fn step(&mut self, grads: &Gradients<T>, lr: f64, weight_decay: f64) -> Result<()> {
        if grads.w1.shape() != self.w1.shape() || grads.w2.shape() != self.w2.shape() {
            return Err(Error::Shape {
                context: "GcnModel::step",
                expected: format!("{:?} and {:?}", self.w1.shape(), self.w2.shape()),
                actual: format!("{:?} and {:?}", grads.w1.shape(), grads.w2.shape()),
            });
        }
        if !grads.w1.is_finite() || !grads.w2.is_finite() {
            return Err(Error::NonFinite(format!(
                "weight gradients at optimizer step {}",
                self.adam.step + 1
            )));
        }
        self.adam.step += 1;
        let t = self.adam.step as i32;
        let b1 = T::of(ADAM_BETA1);
        let b2 = T::of(ADAM_BETA2);
        let c1 = T::one() - T::of(ADAM_BETA1.powi(t));
        let c2 = T::one() - T::of(ADAM_BETA2.powi(t));
        let lr = T::of(lr);
        let wd = T::of(weight_decay);
        let eps = T::of(ADAM_EPS);
        let update = |w: &mut Matrix<T>, m: &mut Matrix<T>, v: &mut Matrix<T>, g: &Matrix<T>| {
            let w = w.as_mut_slice();
            let m = m.as_mut_slice();
            let v = v.as_mut_slice();
            for (k, &gk) in g.as_slice().iter().enumerate() {
                let gk = gk + wd * w[k];
                m[k] = b1 * m[k] + (T::one() - b1) * gk;
                v[k] = b2 * v[k] + (T::one() - b2) * gk * gk;
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                w[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        };
        update(&mut self.w1, &mut self.adam.m1, &mut self.adam.v1, &grads.w1);
        update(&mut self.w2, &mut self.adam.m2, &mut self.adam.v2, &grads.w2);
        Ok(())
    }
}

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::{AdamState, GcnModel};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::Rng;

const FORMAT: &str = "smixup-gcn-checkpoint";
const VERSION: u32 = 1;

/// Versioned JSON dump of the weights, Adam moments, step counter and
/// (optionally) the training RNG. Values are stored as `f64`, which is exact
/// for both supported scalars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub scalar: String,
    pub num_features: usize,
    pub hidden: usize,
    pub num_classes: usize,
    pub step: u64,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub m1: Vec<f64>,
    pub v1: Vec<f64>,
    pub m2: Vec<f64>,
    pub v2: Vec<f64>,
    pub rng: Option<Rng>,
}

fn flat<T: Scalar>(m: &Matrix<T>) -> Vec<f64> {
    m.as_slice().iter().map(|v| v.as_f64()).collect()
}

fn unflat<T: Scalar>(rows: usize, cols: usize, v: &[f64], what: &str) -> Result<Matrix<T>> {
    Matrix::from_vec(rows, cols, v.iter().map(|&x| T::of(x)).collect()).map_err(|_| {
        Error::validation(
            format!("checkpoint field {what}"),
            format!("expected {} values, found {}", rows * cols, v.len()),
        )
    })
}

impl Checkpoint {
    pub fn capture<T: Scalar>(model: &GcnModel<T>, rng: Option<&Rng>) -> Self {
        let adam = model.adam();
        Self {
            format: FORMAT.into(),
            version: VERSION,
            scalar: T::NAME.into(),
            num_features: model.num_features(),
            hidden: model.hidden(),
            num_classes: model.num_classes(),
            step: adam.step,
            w1: flat(model.w1()),
            w2: flat(model.w2()),
            m1: flat(&adam.m1),
            v1: flat(&adam.v1),
            m2: flat(&adam.m2),
            v2: flat(&adam.v2),
            rng: rng.cloned(),
        }
    }

    pub fn restore<T: Scalar>(&self) -> Result<GcnModel<T>> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::validation(
                "checkpoint header",
                format!("unsupported format {} v{}", self.format, self.version),
            ));
        }
        let (f, d, c) = (self.num_features, self.hidden, self.num_classes);
        let adam = AdamState {
            m1: unflat(f, d, &self.m1, "m1")?,
            v1: unflat(f, d, &self.v1, "v1")?,
            m2: unflat(d, c, &self.m2, "m2")?,
            v2: unflat(d, c, &self.v2, "v2")?,
            step: self.step,
        };
        GcnModel::from_parts(unflat(f, d, &self.w1, "w1")?, unflat(d, c, &self.w2, "w2")?, adam)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).expect("checkpoint serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

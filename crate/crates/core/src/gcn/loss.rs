use crate::error::{Error, Result};
use crate::gcn::ForwardTrace;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Probabilities are clamped here before the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Weighted cross-entropy term over a set of rows with simplex targets.
#[derive(Clone, Debug)]
pub struct LossSpec<T> {
    rows: Vec<usize>,
    targets: Matrix<T>,
    weight: T,
}

fn simplex_tolerance<T: Scalar>() -> f64 {
    (64.0 * T::epsilon().as_f64()).max(1e-9)
}

impl<T: Scalar> LossSpec<T> {
    pub fn new(rows: Vec<usize>, targets: Matrix<T>, weight: T) -> Result<Self> {
        if targets.rows() != rows.len() {
            return Err(Error::Shape {
                context: "LossSpec::new",
                expected: format!("{} target rows", rows.len()),
                actual: targets.rows().to_string(),
            });
        }
        let tol = simplex_tolerance::<T>();
        for r in 0..targets.rows() {
            let row = targets.row(r);
            let sum: T = row.iter().copied().sum();
            if row.iter().any(|&v| v < T::zero()) || (sum.as_f64() - 1.0).abs() > tol {
                return Err(Error::validation(
                    format!("target row {r}"),
                    format!("not on the probability simplex (sum {sum})"),
                ));
            }
        }
        Ok(Self {
            rows,
            targets,
            weight,
        })
    }

    /// One-hot targets for `rows` from their class indices.
    pub fn one_hot(rows: Vec<usize>, classes: &[usize], num_classes: usize, weight: T) -> Result<Self> {
        if rows.len() != classes.len() {
            return Err(Error::Shape {
                context: "LossSpec::one_hot",
                expected: format!("{} classes", rows.len()),
                actual: classes.len().to_string(),
            });
        }
        let mut targets = Matrix::zeros(rows.len(), num_classes);
        for (r, &c) in classes.iter().enumerate() {
            if c >= num_classes {
                return Err(Error::validation(format!("target row {r}"), format!("class {c} ≥ {num_classes}")));
            }
            targets.set(r, c, T::one());
        }
        Self::new(rows, targets, weight)
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn targets(&self) -> &Matrix<T> {
        &self.targets
    }

    pub fn weight(&self) -> T {
        self.weight
    }

    pub fn with_weight(mut self, weight: T) -> Self {
        self.weight = weight;
        self
    }

    pub(crate) fn check_against(&self, n: usize, c: usize) -> Result<()> {
        if self.targets.cols() != c {
            return Err(Error::Shape {
                context: "loss targets vs classes",
                expected: c.to_string(),
                actual: self.targets.cols().to_string(),
            });
        }
        if let Some(&bad) = self.rows.iter().find(|&&r| r >= n) {
            return Err(Error::validation("loss rows", format!("row {bad} ≥ {n} nodes")));
        }
        Ok(())
    }
}

/// `Σ_specs weight · (−Σ_rows Σ_c target[c] · log max(Ŷ[c], floor))`.
pub fn loss<T: Scalar>(trace: &ForwardTrace<'_, T>, specs: &[LossSpec<T>]) -> Result<T> {
    let probs = trace.probs();
    let floor = T::of(PROB_FLOOR);
    let mut total = T::zero();
    for spec in specs {
        spec.check_against(probs.rows(), probs.cols())?;
        let mut acc = T::zero();
        for (r, &node) in spec.rows.iter().enumerate() {
            for (&t, &p) in spec.targets.row(r).iter().zip(probs.row(node)) {
                if t != T::zero() {
                    acc -= t * p.max(floor).ln();
                }
            }
        }
        total += spec.weight * acc;
    }
    Ok(total)
}

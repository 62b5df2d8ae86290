use nalgebra::DMatrix;

use super::form::VectorField;
use crate::error::{Error, Result};

/// A vector field that can be evaluated pointwise together with its
/// Jacobian `J[(i, k)] = ∂_k X^i`.
pub trait FieldEval: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>>;
}

impl FieldEval for VectorField {
    fn dim(&self) -> usize {
        self.components().len()
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval_at(x).map_err(|e| Error::eval(x, e))
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut j = DMatrix::zeros(n, x.len());
        for (i, c) in self.components().iter().enumerate() {
            let jet = c.eval_jet(x).map_err(|e| Error::eval(x, e))?;
            for (k, p) in jet.partials.iter().enumerate() {
                j[(i, k)] = *p;
            }
        }
        Ok(j)
    }
}

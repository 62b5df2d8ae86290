use nalgebra::{DMatrix, DVector};

use crate::calculus::{exterior_derivative, pointwise_solve, DifferentialForm, FormValue};
use crate::error::{Error, Result};

/// Reeb field of a contact form on a 3-chart, evaluated pointwise.
#[derive(Debug, Clone)]
pub struct ReebField {
    alpha: DifferentialForm,
    dalpha: DifferentialForm,
}

pub fn reeb_field(alpha: &DifferentialForm) -> Result<ReebField> {
    if alpha.degree() != 1 {
        return Err(Error::Degree("Reeb field of a non-1-form".into()));
    }
    Ok(ReebField {
        alpha: alpha.clone(),
        dalpha: exterior_derivative(alpha)?,
    })
}

impl ReebField {
    pub fn at(&self, p: &[f64]) -> Result<Vec<f64>> {
        let ev = |f: &DifferentialForm| f.eval_at(p).map_err(|e| Error::eval(p, e));
        reeb_at(&ev(&self.alpha)?, &ev(&self.dalpha)?, p)
    }
}

/// Solve `ι_R dα = 0`, `α(R) = 1` from values at a point.
pub(crate) fn reeb_at(alpha: &FormValue, dalpha: &FormValue, p: &[f64]) -> Result<Vec<f64>> {
    let dim = alpha.dim();
    if dim.is_multiple_of(2) {
        return Err(Error::Dimension("contact forms live in odd dimension".into()));
    }
    let k = (dim - 1) / 2;
    let vol = alpha.wedge(&dalpha.wedge_power(k, 1.0)?)?.top_coefficient()?;
    let scale = alpha.max_abs() * dalpha.max_abs().powi(k as i32);
    if !(vol.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::NotContact { point: p.to_vec() });
    }
    let omega = dalpha.to_matrix()?;
    let mut m = DMatrix::zeros(dim + 1, dim);
    m.rows_mut(0, dim).copy_from(&omega);
    for j in 0..dim {
        m[(dim, j)] = alpha.components()[j];
    }
    let mut rhs = DVector::zeros(dim + 1);
    rhs[dim] = 1.0;
    let s = pointwise_solve(&m, &rhs).map_err(|e| Error::solve(p, e))?;
    Ok(s.x.iter().copied().collect())
}

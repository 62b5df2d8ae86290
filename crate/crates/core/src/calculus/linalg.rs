//! Pointwise dense linear algebra on form and field values.

use nalgebra::{DMatrix, DVector};

use super::form::{basis, mask_indices, DifferentialForm, Form, FormValue};
use crate::error::{Error, Result, SolveError};

/// Largest condition number accepted by [`pointwise_solve`].
pub const MAX_CONDITION: f64 = 1e8;
/// Relative singular-value cutoff for rank and kernel decisions.
pub const RANK_CUTOFF: f64 = 1e-8;
/// Below this relative size a singular value is treated as exactly zero.
const SINGULAR_CUTOFF: f64 = 1e-13;

/// Solution of a pointwise system with its diagnostics.
#[derive(Debug, Clone)]
pub struct PointSolution {
    pub x: DVector<f64>,
    pub residual: f64,
    pub condition: f64,
    /// Moore-Penrose pseudo-inverse of the system matrix (used for implicit
    /// differentiation of the solution).
    pub pinv: DMatrix<f64>,
}

/// Solve `a x = b` for a full-column-rank, possibly over-determined but
/// consistent system.
pub fn pointwise_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<PointSolution, SolveError> {
    let n = a.ncols();
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let sigma_min = if a.nrows() < n {
        0.0
    } else {
        sv.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    if sigma_max == 0.0 || sigma_min <= SINGULAR_CUTOFF * sigma_max {
        return Err(SolveError::SingularSystem {
            sigma_min,
            residual: f64::NAN,
        });
    }
    let condition = sigma_max / sigma_min;
    if condition > MAX_CONDITION {
        return Err(SolveError::IllConditioned { kappa: condition });
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut s_inv = DMatrix::zeros(n, sv.len());
    for (i, s) in sv.iter().enumerate() {
        s_inv[(i, i)] = 1.0 / s;
    }
    let pinv = v_t.transpose() * s_inv * u.transpose();
    let x = refined(a, &pinv, b);
    let residual = (a * &x - b).norm();
    if residual > 1e-10 * (1.0 + b.norm()) {
        return Err(SolveError::SingularSystem {
            sigma_min,
            residual,
        });
    }
    Ok(PointSolution {
        x,
        residual,
        condition,
        pinv,
    })
}

/// `pinv·b` followed by a few steps of iterative refinement; the SVD alone
/// can leave residuals near `1e-9` on well-conditioned systems.
pub fn refined(a: &DMatrix<f64>, pinv: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut x = pinv * b;
    for _ in 0..3 {
        let r = b - a * &x;
        if r.norm() <= f64::EPSILON * (1.0 + b.norm()) {
            break;
        }
        x += pinv * r;
    }
    x
}

/// Singular values in decreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().singular_values().iter().cloned().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Number of singular values above `RANK_CUTOFF` times the largest.
pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let sv = singular_values(a);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_CUTOFF * top).count()
}

/// Unit vector spanning the (assumed one-dimensional) kernel of a square
/// matrix, with the relative size of the two smallest singular values.
pub fn kernel_vector(a: &DMatrix<f64>) -> (DVector<f64>, f64, f64) {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let top = sv[order[0]].max(f64::MIN_POSITIVE);
    let last = order[order.len() - 1];
    let second_last = order[order.len().saturating_sub(2)];
    let k = v_t.row(last).transpose().into_owned();
    (k, sv[last] / top, sv[second_last] / top)
}

/// Affine map `x ↦ matrix·x + translation` between charts of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub matrix: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>, translation: DVector<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != translation.len() {
            return Err(Error::Dimension("linear map must be square".into()));
        }
        let det = matrix.determinant();
        if det.abs() <= 1e-14 * matrix.norm().powi(matrix.nrows() as i32).max(1e-300) {
            return Err(Error::SingularMap { det });
        }
        Ok(LinearMap {
            matrix,
            translation,
        })
    }

    pub fn linear(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(matrix, DVector::zeros(n))
    }

    pub fn identity(n: usize) -> Self {
        LinearMap {
            matrix: DMatrix::identity(n, n),
            translation: DVector::zeros(n),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(x) + &self.translation;
        v.iter().cloned().collect()
    }

    pub fn compose(&self, inner: &LinearMap) -> LinearMap {
        LinearMap {
            matrix: &self.matrix * &inner.matrix,
            translation: &self.matrix * &inner.translation + &self.translation,
        }
    }
}

/// Pull back a form value living at the image point: the coefficient on the
/// index set `I` is `Σ_J f_J · det(L[J, I])`.
pub fn pullback_value(value: &FormValue, map: &LinearMap) -> Result<FormValue> {
    let dim = value.dim();
    if map.matrix.nrows() != dim {
        return Err(Error::Dimension("map and form dimensions differ".into()));
    }
    let k = value.degree();
    let masks = basis(dim, k);
    let coeffs = masks
        .iter()
        .map(|&mi| {
            let cols = mask_indices(mi);
            value
                .masks()
                .iter()
                .zip(value.coeffs())
                .map(|(&mj, f)| {
                    let rows = mask_indices(mj);
                    let minor = DMatrix::from_fn(k, k, |r, c| map.matrix[(rows[r], cols[c])]);
                    f * if k == 0 { 1.0 } else { minor.determinant() }
                })
                .sum()
        })
        .collect();
    Form::from_coeffs(dim, k, coeffs)
}

/// `(F^* f)_x` for an affine `F`: evaluate `f` at `F(x)` (periodic
/// coordinates handled by the caller's chart) and pull back.
pub fn pullback_along_linear(
    map: &LinearMap,
    form: &DifferentialForm,
    point: &[f64],
    reduce: impl Fn(&mut [f64]),
) -> Result<FormValue> {
    let mut image = map.apply(point);
    reduce(&mut image);
    let value = form.eval_at(&image).map_err(|e| Error::eval(&image, e))?;
    pullback_value(&value, map)
}

//! Differential forms and vector fields on a single chart.
//!
//! A k-form stores one coefficient per strictly increasing multi-index
//! `i_1 < ... < i_k`, in lexicographic order. The same container is used for
//! symbolic forms (`Form<Expr>`) and for their values at a point
//! (`Form<f64>`), so wedge and interior products are written once.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{DomainError, Error, Result};
use crate::expr::Expr;

/// Coefficient ring for forms.
pub trait Coeff:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Coeff for Expr {
    fn zero() -> Self {
        Expr::zero()
    }
    fn is_zero(&self) -> bool {
        Expr::is_zero(self)
    }
}

/// Bit masks of the increasing multi-indices of length `k` in `0..dim`,
/// in lexicographic order of the index lists.
pub fn basis(dim: usize, k: usize) -> Vec<u32> {
    fn rec(start: usize, dim: usize, left: usize, mask: u32, out: &mut Vec<u32>) {
        if left == 0 {
            out.push(mask);
            return;
        }
        for i in start..dim {
            rec(i + 1, dim, left - 1, mask | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    if k <= dim {
        rec(0, dim, k, 0, &mut out);
    }
    out
}

pub fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Sign of the shuffle that sorts the concatenation `a ++ b` (disjoint masks).
fn shuffle_sign(a: u32, b: u32) -> bool {
    let mut inversions = 0u32;
    for j in mask_indices(b) {
        // elements of a greater than j
        inversions += (a >> (j + 1)).count_ones();
    }
    inversions % 2 == 1
}

/// `(-1)^{#{j in mask : j < i}}`, true when negative.
fn insertion_sign(i: usize, mask: u32) -> bool {
    (mask & ((1u32 << i) - 1)).count_ones() % 2 == 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct Form<C> {
    dim: usize,
    degree: usize,
    masks: Vec<u32>,
    coeffs: Vec<C>,
}

pub type DifferentialForm = Form<Expr>;
pub type FormValue = Form<f64>;

impl<C: Coeff> Form<C> {
    pub fn zero(dim: usize, degree: usize) -> Result<Self> {
        if degree > dim {
            return Err(Error::Degree(format!("degree {degree} exceeds dimension {dim}")));
        }
        let masks = basis(dim, degree);
        let coeffs = vec![C::zero(); masks.len()];
        Ok(Form {
            dim,
            degree,
            masks,
            coeffs,
        })
    }

    /// Coefficients in basis order (see [`basis`]).
    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<C>) -> Result<Self> {
        let mut f = Self::zero(dim, degree)?;
        if coeffs.len() != f.coeffs.len() {
            return Err(Error::Dimension(format!(
                "{}-form on dimension {dim} needs {} coefficients, got {}",
                degree,
                f.coeffs.len(),
                coeffs.len()
            )));
        }
        f.coeffs = coeffs;
        Ok(f)
    }

    pub fn scalar(dim: usize, value: C) -> Self {
        Form {
            dim,
            degree: 0,
            masks: vec![0],
            coeffs: vec![value],
        }
    }

    pub fn one_form(components: Vec<C>) -> Self {
        let dim = components.len();
        Form {
            dim,
            degree: 1,
            masks: basis(dim, 1),
            coeffs: components,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn masks(&self) -> &[u32] {
        &self.masks
    }

    fn position(&self, mask: u32) -> usize {
        self.masks
            .iter()
            .position(|m| *m == mask)
            .expect("mask belongs to basis")
    }

    /// Coefficient of `dx^{i_1} ^ ... ^ dx^{i_k}` for an increasing index list.
    pub fn get(&self, indices: &[usize]) -> C {
        let mask = indices.iter().fold(0u32, |m, i| m | (1 << i));
        self.coeffs[self.position(mask)].clone()
    }

    pub fn set(&mut self, indices: &[usize], value: C) {
        let mask = indices.iter().fold(0u32, |m, i| m | (1 << i));
        let p = self.position(mask);
        self.coeffs[p] = value;
    }

    pub fn map<D: Coeff>(&self, f: impl FnMut(&C) -> D) -> Form<D> {
        Form {
            dim: self.dim,
            degree: self.degree,
            masks: self.masks.clone(),
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        self.map(|x| c.clone() * x.clone())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.degree != other.degree {
            return Err(Error::Dimension(format!(
                "cannot combine {}-form on dim {} with {}-form on dim {}",
                self.degree, self.dim, other.degree, other.dim
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a = a.clone() + b.clone();
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a = a.clone() - b.clone();
        }
        Ok(out)
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Dimension("wedge of forms on different charts".into()));
        }
        let degree = self.degree + other.degree;
        if degree > self.dim {
            return Err(Error::Degree(format!(
                "wedge degree {degree} exceeds dimension {}",
                self.dim
            )));
        }
        let mut out = Self::zero(self.dim, degree)?;
        for (ma, ca) in self.masks.iter().zip(&self.coeffs) {
            if ca.is_zero() {
                continue;
            }
            for (mb, cb) in other.masks.iter().zip(&other.coeffs) {
                if ma & mb != 0 || cb.is_zero() {
                    continue;
                }
                let p = out.position(ma | mb);
                let term = ca.clone() * cb.clone();
                out.coeffs[p] = if shuffle_sign(*ma, *mb) {
                    out.coeffs[p].clone() - term
                } else {
                    out.coeffs[p].clone() + term
                };
            }
        }
        Ok(out)
    }

    /// `k`-fold wedge power; the 0th power is the constant 1.
    pub fn wedge_power(&self, k: usize, one: C) -> Result<Self> {
        let mut acc = Self::scalar(self.dim, one);
        for _ in 0..k {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    pub fn interior(&self, field: &Field<C>) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::Degree("interior product of a 0-form".into()));
        }
        if field.dim() != self.dim {
            return Err(Error::Dimension("field and form on different charts".into()));
        }
        let mut out = Self::zero(self.dim, self.degree - 1)?;
        for (m, c) in self.masks.iter().zip(&self.coeffs) {
            if c.is_zero() {
                continue;
            }
            for i in mask_indices(*m) {
                let xi = &field.components()[i];
                if xi.is_zero() {
                    continue;
                }
                let rest = m & !(1 << i);
                let p = out.position(rest);
                let term = xi.clone() * c.clone();
                out.coeffs[p] = if insertion_sign(i, rest) {
                    out.coeffs[p].clone() - term
                } else {
                    out.coeffs[p].clone() + term
                };
            }
        }
        Ok(out)
    }

    /// Evaluate on `degree` vectors: `f(v_1, ..., v_k)`.
    pub fn apply(&self, vectors: &[&Field<C>]) -> Result<C> {
        if vectors.len() != self.degree {
            return Err(Error::Degree(format!(
                "{}-form applied to {} vectors",
                self.degree,
                vectors.len()
            )));
        }
        let mut f = self.clone();
        for v in vectors {
            f = f.interior(v)?;
        }
        Ok(f.coeffs[0].clone())
    }

    /// The single coefficient of a top-degree form.
    pub fn top_coefficient(&self) -> Result<C> {
        if self.degree != self.dim {
            return Err(Error::Degree(format!(
                "{}-form is not top degree on dimension {}",
                self.degree, self.dim
            )));
        }
        Ok(self.coeffs[0].clone())
    }
}

impl DifferentialForm {
    pub fn eval_at(&self, point: &[f64]) -> std::result::Result<FormValue, DomainError> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.eval(point))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Form {
            dim: self.dim,
            degree: self.degree,
            masks: self.masks.clone(),
            coeffs,
        })
    }

    /// Same coefficients viewed on a chart with extra trailing coordinates
    /// (pull-back along the projection that forgets them).
    pub fn extend(&self, new_dim: usize) -> Result<Self> {
        if new_dim < self.dim {
            return Err(Error::Dimension("cannot shrink a chart".into()));
        }
        let mut out = Self::zero(new_dim, self.degree)?;
        for (m, c) in self.masks.iter().zip(&self.coeffs) {
            let p = out.position(*m);
            out.coeffs[p] = c.clone();
        }
        Ok(out)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.coeffs.iter().filter_map(|c| c.max_var()).max()
    }
}

impl FormValue {
    /// Matrix `M[i][j] = f(e_i, e_j)` of a 2-form value.
    pub fn to_matrix(&self) -> Result<nalgebra::DMatrix<f64>> {
        if self.degree != 2 {
            return Err(Error::Degree("matrix of a non-2-form".into()));
        }
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (mask, c) in self.masks.iter().zip(&self.coeffs) {
            let idx = mask_indices(*mask);
            m[(idx[0], idx[1])] = *c;
            m[(idx[1], idx[0])] = -*c;
        }
        Ok(m)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn components(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn apply_vectors(&self, vectors: &[&[f64]]) -> Result<f64> {
        let fields: Vec<Field<f64>> = vectors.iter().map(|v| Field::new(v.to_vec())).collect();
        let refs: Vec<&Field<f64>> = fields.iter().collect();
        self.apply(&refs)
    }
}

/// Vector field (or a vector at a point, for `Field<f64>`).
#[derive(Debug, Clone, PartialEq)]
pub struct Field<C> {
    components: Vec<C>,
}

pub type VectorField = Field<Expr>;

impl<C: Coeff> Field<C> {
    pub fn new(components: Vec<C>) -> Self {
        Field { components }
    }

    pub fn zero(dim: usize) -> Self {
        Field {
            components: vec![C::zero(); dim],
        }
    }

    /// Coordinate field `∂_i`.
    pub fn coordinate(dim: usize, i: usize, one: C) -> Self {
        let mut f = Self::zero(dim);
        f.components[i] = one;
        f
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[C] {
        &self.components
    }

    pub fn scale(&self, c: &C) -> Self {
        Field {
            components: self.components.iter().map(|x| c.clone() * x.clone()).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension("adding fields of different dimension".into()));
        }
        Ok(Field {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        })
    }
}

impl VectorField {
    pub fn eval_at(&self, point: &[f64]) -> std::result::Result<Vec<f64>, DomainError> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }
}

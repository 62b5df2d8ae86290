//! Liouville-Hamiltonian structures `(M, η, β)`.
//!
//! `dη` has corank one, its kernel lies in `ker η` and is transverse to
//! `ker β`. From these data come the Liouville field `ζ` (`ι_ζ dη = η`,
//! `β(ζ) = 0`) and the characteristic field `C` (`ι_C dη = 0`, `β(C) = 1`).

mod axioms;
mod deformation;
mod grid;
mod normal;
mod stabham;

use nalgebra::{DMatrix, DVector};

use crate::calculus::{
    exterior_derivative, pointwise_solve, pullback_value, refined, Chart, DifferentialForm, FieldEval,
    FormValue, LinearMap,
};
use crate::error::{Error, Result, SolveError};
use crate::expr::Jet1;
use crate::report::Worst;

pub use axioms::{check_axioms, TRANSVERSALITY_MIN};
pub use deformation::{
    contact_sign, deformation_at, deformation_type, ContactSignReport, DeformationVerdict,
    PointDeformation, BOUNDARY_TOL,
};
pub use grid::GridSpec;
pub use normal::{normal_change, NormalChange, NormalChangeReport};
pub use stabham::{stabham_scan, StabhamReport};

/// Deck transformation `(θ, t) ↦ (L θ, scale · t)` of a torus bundle over
/// the circle, with fundamental domain `1 ≤ t < scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeckMap {
    linear: [[i64; 2]; 2],
    scale: f64,
    periodic: [usize; 2],
    fiber: usize,
}

impl DeckMap {
    pub fn new(linear: [[i64; 2]; 2], scale: f64, periodic: [usize; 2], fiber: usize) -> Result<Self> {
        let det = linear[0][0] * linear[1][1] - linear[0][1] * linear[1][0];
        if det.abs() != 1 {
            return Err(Error::InvalidInput(format!("deck linear part has determinant {det}")));
        }
        if !(scale > 1.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("deck scale {scale} must exceed 1")));
        }
        if periodic[0] == periodic[1] || periodic.contains(&fiber) {
            return Err(Error::InvalidInput("deck coordinates must be distinct".into()));
        }
        Ok(DeckMap {
            linear,
            scale,
            periodic,
            fiber,
        })
    }

    pub fn linear(&self) -> [[i64; 2]; 2] {
        self.linear
    }

    /// Inverse of the integer linear part.
    pub fn linear_inverse(&self) -> [[i64; 2]; 2] {
        let [[a, b], [c, d]] = self.linear;
        let det = a * d - b * c;
        [[d * det, -b * det], [-c * det, a * det]]
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `ν = ln(scale)`, the length of the fundamental interval in `ln t`.
    pub fn log_scale(&self) -> f64 {
        self.scale.ln()
    }

    pub fn periodic(&self) -> [usize; 2] {
        self.periodic
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn fundamental_interval(&self) -> (f64, f64) {
        (1.0, self.scale)
    }

    fn act(&self, m: [[i64; 2]; 2], factor: f64, x: &mut [f64]) {
        let [i, j] = self.periodic;
        let (a, b) = (x[i], x[j]);
        x[i] = m[0][0] as f64 * a + m[0][1] as f64 * b;
        x[j] = m[1][0] as f64 * a + m[1][1] as f64 * b;
        x[self.fiber] *= factor;
    }

    /// `Φ(x)` (periodic coordinates not reduced).
    pub fn apply(&self, x: &mut [f64]) {
        self.act(self.linear, self.scale, x)
    }

    /// `Φ⁻¹(x)`.
    pub fn apply_inverse(&self, x: &mut [f64]) {
        self.act(self.linear_inverse(), 1.0 / self.scale, x)
    }

    /// `Φ` as an affine map of the full chart.
    pub fn as_linear_map(&self, dim: usize) -> LinearMap {
        let mut m = DMatrix::identity(dim, dim);
        let [i, j] = self.periodic;
        m[(i, i)] = self.linear[0][0] as f64;
        m[(i, j)] = self.linear[0][1] as f64;
        m[(j, i)] = self.linear[1][0] as f64;
        m[(j, j)] = self.linear[1][1] as f64;
        m[(self.fiber, self.fiber)] = self.scale;
        LinearMap {
            matrix: m,
            translation: DVector::zeros(dim),
        }
    }

    /// Move `x` into the fundamental interval by powers of `Φ`; returns the
    /// power applied, so the new point is `Φ^k` of the old one.
    pub fn wrap(&self, x: &mut [f64]) -> Result<i32> {
        let t = x[self.fiber];
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("fiber coordinate {t} is not positive")));
        }
        let mut k = 0;
        while x[self.fiber] >= self.scale {
            self.apply_inverse(x);
            k -= 1;
        }
        while x[self.fiber] < 1.0 {
            self.apply(x);
            k += 1;
        }
        Ok(k)
    }
}

/// A Liouville-Hamiltonian structure on one chart of `M` (dimension `2n-1`).
#[derive(Debug, Clone)]
pub struct LHStructure {
    chart: Chart,
    eta: DifferentialForm,
    beta: DifferentialForm,
    n: usize,
    quotient: Option<DeckMap>,
    deta: DifferentialForm,
    dbeta: DifferentialForm,
}

impl LHStructure {
    pub fn new(
        chart: Chart,
        eta: DifferentialForm,
        beta: DifferentialForm,
        n: usize,
        quotient: Option<DeckMap>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("n = {n}: structures need n >= 2")));
        }
        if chart.dim() != 2 * n - 1 {
            return Err(Error::Dimension(format!(
                "chart of dimension {} does not match n = {n}",
                chart.dim()
            )));
        }
        for (name, f) in [("eta", &eta), ("beta", &beta)] {
            if f.degree() != 1 {
                return Err(Error::Degree(format!("{name} must be a 1-form")));
            }
            if f.dim() != chart.dim() || f.max_var().is_some_and(|v| v >= chart.dim()) {
                return Err(Error::Dimension(format!("{name} does not live on the chart")));
            }
        }
        if let Some(q) = &quotient {
            let idx = q.periodic();
            if idx.iter().chain([&q.fiber()]).any(|&i| i >= chart.dim())
                || !idx.iter().all(|&i| chart.kinds()[i].is_periodic())
            {
                return Err(Error::InvalidInput("deck map does not fit the chart".into()));
            }
        }
        let deta = exterior_derivative(&eta)?;
        let dbeta = exterior_derivative(&beta)?;
        Ok(LHStructure {
            chart,
            eta,
            beta,
            n,
            quotient,
            deta,
            dbeta,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }
    pub fn eta(&self) -> &DifferentialForm {
        &self.eta
    }
    pub fn beta(&self) -> &DifferentialForm {
        &self.beta
    }
    pub fn deta(&self) -> &DifferentialForm {
        &self.deta
    }
    pub fn dbeta(&self) -> &DifferentialForm {
        &self.dbeta
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }
    pub fn quotient(&self) -> Option<&DeckMap> {
        self.quotient.as_ref()
    }

    /// Same structure with `β` replaced.
    pub fn with_beta(&self, beta: DifferentialForm) -> Result<Self> {
        LHStructure::new(self.chart.clone(), self.eta.clone(), beta, self.n, self.quotient.clone())
    }

    pub fn without_quotient(&self) -> Self {
        LHStructure {
            quotient: None,
            ..self.clone()
        }
    }

    /// Values of `η, β, dη, dβ` at a point (periodic coordinates reduced).
    pub fn at(&self, point: &[f64]) -> Result<PointData> {
        if point.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, chart has {}",
                point.len(),
                self.dim()
            )));
        }
        let p = self.chart.reduced(point);
        let ev = |f: &DifferentialForm| f.eval_at(&p).map_err(|e| Error::eval(&p, e));
        Ok(PointData {
            eta: ev(&self.eta)?,
            beta: ev(&self.beta)?,
            deta: ev(&self.deta)?,
            dbeta: ev(&self.dbeta)?,
            point: p,
        })
    }

    /// `ζ` and `C` at a point.
    pub fn canonical_at(&self, point: &[f64]) -> Result<(PointData, Canonical)> {
        let data = self.at(point)?;
        let c = data.canonical()?;
        Ok((data, c))
    }

    pub fn liouville_at(&self, point: &[f64]) -> Result<Vec<f64>> {
        Ok(self.canonical_at(point)?.1.zeta)
    }

    pub fn characteristic_at(&self, point: &[f64]) -> Result<Vec<f64>> {
        Ok(self.canonical_at(point)?.1.c)
    }

    /// `dβ(C, ζ)` at a point.
    pub fn dbeta_c_zeta(&self, point: &[f64]) -> Result<f64> {
        let (d, c) = self.canonical_at(point)?;
        d.dbeta.apply_vectors(&[&c.c, &c.zeta])
    }

    /// Largest deviation of `Φ^*η` from `η` and of `Φ^*β` from `β` over the
    /// points; zero when there is no quotient.
    pub fn deck_residual(&self, points: &[Vec<f64>]) -> Result<Worst> {
        let mut w = Worst::max();
        let Some(q) = &self.quotient else {
            return Ok(w);
        };
        let map = q.as_linear_map(self.dim());
        for p in points {
            let here = self.at(p)?;
            let mut image = p.clone();
            q.apply(&mut image);
            let there = self.at(&image)?;
            let mut r: f64 = 0.0;
            for (pulled, orig) in [(&there.eta, &here.eta), (&there.beta, &here.beta)] {
                let back = pullback_value(pulled, &map)?;
                let diff = back.try_sub(orig)?;
                r = r.max(diff.max_abs() / (1.0 + orig.max_abs()));
            }
            w.push(r, p);
        }
        Ok(w)
    }

    pub fn liouville_field(&self) -> CanonicalField<'_> {
        CanonicalField {
            s: self,
            kind: CanonicalKind::Liouville,
        }
    }

    pub fn characteristic_field(&self) -> CanonicalField<'_> {
        CanonicalField {
            s: self,
            kind: CanonicalKind::Characteristic,
        }
    }
}

/// Form values of a structure at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointData {
    pub point: Vec<f64>,
    pub eta: FormValue,
    pub beta: FormValue,
    pub deta: FormValue,
    pub dbeta: FormValue,
}

/// `ζ` and `C` at a point, with the conditioning of the joint system.
#[derive(Debug, Clone, PartialEq)]
pub struct Canonical {
    pub zeta: Vec<f64>,
    pub c: Vec<f64>,
    pub condition: f64,
    pinv: DMatrix<f64>,
}

/// `(dim + 1) × dim` matrix `[-Ω; βᵀ]` with `Ω_ij = dη(e_i, e_j)`, so that
/// `M X = [ι_X dη; β(X)]`.
fn system_matrix(deta: &[f64], beta: &[f64], masks: &[u32], dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim + 1, dim);
    for (mask, c) in masks.iter().zip(deta) {
        let i = mask.trailing_zeros() as usize;
        let j = (31 - mask.leading_zeros()) as usize;
        // (ι_X dη)_j = Σ_i X_i Ω_ij
        m[(j, i)] += c;
        m[(i, j)] -= c;
    }
    for (k, b) in beta.iter().enumerate() {
        m[(dim, k)] = *b;
    }
    m
}

impl PointData {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn system(&self) -> DMatrix<f64> {
        system_matrix(
            self.deta.components(),
            self.beta.components(),
            self.deta.masks(),
            self.dim(),
        )
    }

    pub fn canonical(&self) -> Result<Canonical> {
        let dim = self.dim();
        let m = self.system();
        let mut rhs = DVector::zeros(dim + 1);
        rhs.rows_mut(0, dim).copy_from_slice(self.eta.components());
        let sol = pointwise_solve(&m, &rhs).map_err(|e| Error::solve(&self.point, e))?;
        let mut e_last = DVector::zeros(dim + 1);
        e_last[dim] = 1.0;
        let c = refined(&m, &sol.pinv, &e_last);
        let residual = (&m * &c - &e_last).norm();
        if residual > 2e-10 {
            return Err(Error::solve(
                &self.point,
                SolveError::SingularSystem {
                    sigma_min: f64::NAN,
                    residual,
                },
            ));
        }
        Ok(Canonical {
            zeta: sol.x.iter().copied().collect(),
            c: c.iter().copied().collect(),
            condition: sol.condition,
            pinv: sol.pinv,
        })
    }

    /// `‖ι_ζ dη − η‖, |β(ζ)|, ‖ι_C dη‖, |β(C) − 1|`.
    pub fn canonical_residuals(&self, c: &Canonical) -> Result<[f64; 4]> {
        let iz = self.deta.interior(&crate::calculus::Field::new(c.zeta.clone()))?;
        let ic = self.deta.interior(&crate::calculus::Field::new(c.c.clone()))?;
        let r1 = iz.try_sub(&self.eta)?.max_abs();
        let r2 = self.beta.apply_vectors(&[&c.zeta])?.abs();
        let r3 = ic.max_abs();
        let r4 = (self.beta.apply_vectors(&[&c.c])? - 1.0).abs();
        Ok([r1, r2, r3, r4])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalKind {
    Liouville,
    Characteristic,
}

/// `ζ` or `C` as a pointwise evaluator with an exact Jacobian obtained by
/// differentiating the defining linear system.
#[derive(Debug, Clone, Copy)]
pub struct CanonicalField<'a> {
    s: &'a LHStructure,
    kind: CanonicalKind,
}

fn jets(f: &DifferentialForm, p: &[f64]) -> Result<Vec<Jet1>> {
    f.coeffs()
        .iter()
        .map(|c| c.eval_jet(p).map_err(|e| Error::eval(p, e)))
        .collect()
}

impl FieldEval for CanonicalField<'_> {
    fn dim(&self) -> usize {
        self.s.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (_, c) = self.s.canonical_at(x)?;
        Ok(match self.kind {
            CanonicalKind::Liouville => c.zeta,
            CanonicalKind::Characteristic => c.c,
        })
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let dim = self.s.dim();
        let (data, c) = self.s.canonical_at(x)?;
        let p = &data.point;
        let eta_j = jets(&self.s.eta, p)?;
        let beta_j = jets(&self.s.beta, p)?;
        let deta_j = jets(&self.s.deta, p)?;
        let sol = DVector::from_vec(match self.kind {
            CanonicalKind::Liouville => c.zeta.clone(),
            CanonicalKind::Characteristic => c.c.clone(),
        });
        let m = data.system();
        let mut jac = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let d_deta: Vec<f64> = deta_j.iter().map(|j| j.partials[k]).collect();
            let d_beta: Vec<f64> = beta_j.iter().map(|j| j.partials[k]).collect();
            let dm = system_matrix(&d_deta, &d_beta, data.deta.masks(), dim);
            let mut db = DVector::zeros(dim + 1);
            if self.kind == CanonicalKind::Liouville {
                for (i, j) in eta_j.iter().enumerate() {
                    db[i] = j.partials[k];
                }
            }
            let col = refined(&m, &c.pinv, &(db - dm * &sol));
            jac.set_column(k, &col);
        }
        Ok(jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::CoordKind;
    use crate::expr::Expr;

    /// η = p dq, β = dz on (q, p, z).
    fn contact() -> LHStructure {
        let chart = Chart::new([
            ("q", CoordKind::Bounded { lo: -1.0, hi: 1.0 }),
            ("p", CoordKind::Bounded { lo: -1.0, hi: 1.0 }),
            ("z", CoordKind::Bounded { lo: -1.0, hi: 1.0 }),
        ])
        .unwrap();
        let eta = DifferentialForm::one_form(vec![Expr::var(1), Expr::zero(), Expr::zero()]);
        let beta = DifferentialForm::one_form(vec![Expr::zero(), Expr::zero(), Expr::one()]);
        LHStructure::new(chart, eta, beta, 2, None).unwrap()
    }

    #[test]
    fn contactisation_fields() {
        let s = contact();
        let (d, c) = s.canonical_at(&[0.3, 0.7, -0.2]).unwrap();
        assert!((c.zeta[1] - 0.7).abs() < 1e-14 && c.zeta[0].abs() < 1e-14);
        assert_eq!(c.c.iter().map(|x| x.round()).collect::<Vec<_>>(), vec![0.0, 0.0, 1.0]);
        for r in d.canonical_residuals(&c).unwrap() {
            assert!(r < 1e-12);
        }
        assert!(s.dbeta_c_zeta(&[0.3, 0.7, -0.2]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn zeta_vanishes_where_eta_does() {
        let s = contact();
        let z = s.liouville_at(&[0.5, 0.0, 0.1]).unwrap();
        assert!(z.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn doubled_beta_halves_c() {
        let s = contact();
        let s2 = s.with_beta(s.beta().scale(&Expr::constant(2.0))).unwrap();
        let c1 = s.characteristic_at(&[0.1, 0.2, 0.3]).unwrap();
        let c2 = s2.characteristic_at(&[0.1, 0.2, 0.3]).unwrap();
        for (a, b) in c1.iter().zip(&c2) {
            assert!((a - 2.0 * b).abs() < 1e-14);
        }
    }

    #[test]
    fn liouville_jacobian_matches_finite_differences() {
        let s = contact();
        let f = s.liouville_field();
        let x = [0.2, 0.4, 0.1];
        let j = f.jacobian(&x).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut a = x;
            let mut b = x;
            a[k] += h;
            b[k] -= h;
            let (fa, fb) = (f.eval(&a).unwrap(), f.eval(&b).unwrap());
            for i in 0..3 {
                assert!((j[(i, k)] - (fa[i] - fb[i]) / (2.0 * h)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn deck_wrap_counts_powers() {
        let q = DeckMap::new([[1, -1], [-1, 2]], 2.5, [0, 1], 2).unwrap();
        let mut x = [0.1, 0.2, 7.0];
        let k = q.wrap(&mut x).unwrap();
        assert_eq!(k, -2);
        assert!((x[2] - 7.0 / 6.25).abs() < 1e-15);
        let mut y = x;
        q.apply(&mut y);
        q.apply(&mut y);
        assert!((y[2] - 7.0).abs() < 1e-12);
        assert!(DeckMap::new([[2, 0], [0, 1]], 2.0, [0, 1], 2).is_err());
        assert!(DeckMap::new([[1, 0], [0, 1]], 0.5, [0, 1], 2).is_err());
    }

    #[test]
    fn rejects_wrong_dimension() {
        let s = contact();
        assert!(LHStructure::new(s.chart().clone(), s.eta().clone(), s.beta().clone(), 3, None).is_err());
    }
}

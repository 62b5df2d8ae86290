//! The Liouville domain `(M × [-ε, ε]_s, λ = η + sβ)` of a structure.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::calculus::{
    exterior_derivative, pointwise_solve, Chart, CoordKind, DifferentialForm, FormValue,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lhs::{
    contact_sign, deformation_type, ContactSignReport, GridSpec, LHStructure, PointData,
    BOUNDARY_TOL,
};
use crate::par;

/// Collar width: a number or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Epsilon {
    Value(f64),
    Keyword(EpsilonKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonKeyword {
    Auto,
}

impl Default for Epsilon {
    fn default() -> Self {
        Epsilon::Value(DEFAULT_EPSILON)
    }
}

pub const DEFAULT_EPSILON: f64 = 0.1;
const MAX_HALVINGS: usize = 10;
/// Smallest accepted `|Pf(dλ)| / ‖dλ‖^n`.
const PFAFFIAN_MIN: f64 = 1e-8;
/// Measured slopes at or below this count as not repelling.
const REPELLING_MIN: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SuspensionDomain {
    base: LHStructure,
    epsilon: f64,
    chart: Chart,
    lambda: DifferentialForm,
    dlambda: DifferentialForm,
    /// Smallest normalised Pfaffian seen while building (signed against
    /// the value at `s = 0`).
    pub min_pfaffian_ratio: f64,
    pub halvings: usize,
}

/// Values of `dλ` at `(p, s)` from the base values at `p`:
/// `dλ = dη + ds ∧ β + s dβ`.
fn dlambda_value(d: &PointData, s: f64) -> Result<FormValue> {
    let dim = d.dim();
    let base = d.deta.try_add(&d.dbeta.scale(&s))?;
    let mut out = FormValue::zero(dim + 1, 2)?;
    for i in 0..dim {
        for j in i + 1..dim {
            out.set(&[i, j], base.get(&[i, j]));
        }
        // ds ∧ β_i dx^i = -β_i dx^i ∧ ds
        out.set(&[i, dim], -d.beta.components()[i]);
    }
    Ok(out)
}

fn pfaffian(omega: &FormValue) -> Result<(f64, f64)> {
    let n = omega.dim() / 2;
    let top = omega.wedge_power(n, 1.0)?.top_coefficient()?;
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let scale = omega.max_abs().powi(n as i32).max(f64::MIN_POSITIVE);
    Ok((top / fact, scale))
}

fn s_samples(grid: &GridSpec, epsilon: f64) -> Vec<f64> {
    let k = (grid.samples_per_coord / 4).max(2);
    (0..=2 * k)
        .map(|i| epsilon * (i as f64 - k as f64) / k as f64)
        .collect()
}

/// Assemble `λ = η + sβ` and check that `dλ` is symplectic with a
/// constant orientation on `base grid × s-samples`.
pub fn build(s: &LHStructure, epsilon: f64, grid: &GridSpec) -> Result<SuspensionDomain> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let dim = s.dim();
    let mut name = String::from("s");
    while s.chart().index_of(&name).is_some() {
        name.push('_');
    }
    let chart = s.chart().extended(
        &name,
        CoordKind::Bounded {
            lo: -epsilon,
            hi: epsilon,
        },
    )?;
    let lambda = s
        .eta()
        .extend(dim + 1)?
        .try_add(&s.beta().extend(dim + 1)?.scale(&Expr::var(dim)))?;
    let dlambda = exterior_derivative(&lambda)?;

    let points = grid.points(s.chart())?;
    let svals = s_samples(grid, epsilon);
    let worst = par::try_map(grid.exec, &points, |p| -> Result<(f64, Vec<f64>)> {
        let d = s.at(p)?;
        let (pf0, sc0) = pfaffian(&dlambda_value(&d, 0.0)?)?;
        let sign = pf0.signum();
        let mut worst = (pf0.abs() / sc0, {
            let mut q = d.point.clone();
            q.push(0.0);
            q
        });
        for &sv in &svals {
            let (pf, sc) = pfaffian(&dlambda_value(&d, sv)?)?;
            let r = sign * pf / sc;
            if r < worst.0 {
                let mut q = d.point.clone();
                q.push(sv);
                worst = (r, q);
            }
        }
        Ok(worst)
    })?;
    let mut min_ratio = f64::INFINITY;
    let mut min_point = Vec::new();
    for (r, q) in worst {
        if r < min_ratio {
            min_ratio = r;
            min_point = q;
        }
    }
    if !(min_ratio >= PFAFFIAN_MIN) {
        let base: Vec<f64> = min_point[..dim].to_vec();
        let d = s.at(&base)?;
        let (pf, _) = pfaffian(&dlambda_value(&d, min_point[dim])?)?;
        return Err(Error::NotSymplectic {
            point: min_point,
            pfaffian: pf,
        });
    }
    Ok(SuspensionDomain {
        base: s.clone(),
        epsilon,
        chart,
        lambda,
        dlambda,
        min_pfaffian_ratio: min_ratio,
        halvings: 0,
    })
}

/// [`build`] with `ε = 0.1`, halved on `NotSymplectic` up to ten times.
pub fn build_auto(s: &LHStructure, grid: &GridSpec) -> Result<SuspensionDomain> {
    let mut eps = DEFAULT_EPSILON;
    let mut last = None;
    for halvings in 0..=MAX_HALVINGS {
        match build(s, eps, grid) {
            Ok(mut d) => {
                d.halvings = halvings;
                return Ok(d);
            }
            Err(e @ Error::NotSymplectic { .. }) => {
                last = Some(e);
                eps /= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

pub fn build_with(s: &LHStructure, epsilon: Epsilon, grid: &GridSpec) -> Result<SuspensionDomain> {
    match epsilon {
        Epsilon::Value(e) => build(s, e, grid),
        Epsilon::Keyword(EpsilonKeyword::Auto) => build_auto(s, grid),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormCheck {
    pub point: Vec<f64>,
    pub f_formula: f64,
    pub f_measured: f64,
    /// `‖ζ_λ(p, 0) − (ζ_η(p), 0)‖∞`.
    pub restriction_residual: f64,
    /// Size of the measured order-`s` tangential part of `ζ_λ`.
    pub tangential: f64,
    /// `det dλ` at `(p, 0)`.
    pub det_dlambda: f64,
}

impl NormalFormCheck {
    pub fn slope_error(&self) -> f64 {
        (self.f_measured - self.f_formula).abs() / self.f_formula.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub checks: Vec<NormalFormCheck>,
    pub max_restriction_residual: f64,
    pub max_slope_error: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// Measured slope `F > 0` at every sample.
    pub repelling: bool,
    /// `1 + dβ(C, ζ) > 0` at every sample.
    pub repelling_formula: bool,
    /// Both repelling verdicts equal the linear-type verdict of the base.
    pub agrees_with_deformation: bool,
}

impl SuspensionDomain {
    pub fn base(&self) -> &LHStructure {
        &self.base
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn chart(&self) -> &Chart {
        &self.chart
    }
    pub fn lambda(&self) -> &DifferentialForm {
        &self.lambda
    }
    pub fn dlambda(&self) -> &DifferentialForm {
        &self.dlambda
    }

    fn reduced(&self, x: &[f64]) -> Vec<f64> {
        self.chart.reduced(x)
    }

    /// `λ` at a point of the collar.
    pub fn lambda_at(&self, x: &[f64]) -> Result<FormValue> {
        let x = self.reduced(x);
        self.lambda.eval_at(&x).map_err(|e| Error::eval(&x, e))
    }

    /// Solve `ι_Z dλ = λ` at a point of the collar.
    pub fn ambient_liouville_field(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.chart.dim() {
            return Err(Error::Dimension("point is not on the collar chart".into()));
        }
        let x = self.reduced(x);
        let lam = self.lambda.eval_at(&x).map_err(|e| Error::eval(&x, e))?;
        let om = self.dlambda.eval_at(&x).map_err(|e| Error::eval(&x, e))?;
        let m: DMatrix<f64> = -om.to_matrix()?;
        let rhs = DVector::from_column_slice(lam.components());
        let sol = pointwise_solve(&m, &rhs).map_err(|e| Error::solve(&x, e))?;
        Ok(sol.x.iter().copied().collect())
    }

    /// `‖ι_Z dλ − λ‖∞` for the solved field at a point.
    pub fn liouville_residual(&self, x: &[f64]) -> Result<f64> {
        let z = self.ambient_liouville_field(x)?;
        let x = self.reduced(x);
        let lam = self.lambda.eval_at(&x).map_err(|e| Error::eval(&x, e))?;
        let om = self.dlambda.eval_at(&x).map_err(|e| Error::eval(&x, e))?;
        let iz = om.interior(&crate::calculus::Field::new(z))?;
        Ok(iz.try_sub(&lam)?.max_abs())
    }

    fn s_component(&self, p: &[f64], s: f64) -> Result<Vec<f64>> {
        let mut x = p.to_vec();
        x.push(s);
        self.ambient_liouville_field(&x)
    }

    /// Normal-form check at one base point.
    pub fn normal_form_at(&self, p: &[f64]) -> Result<NormalFormCheck> {
        let dim = self.base.dim();
        let (d, c) = self.base.canonical_at(p)?;
        let r = d.dbeta.apply_vectors(&[&c.c, &c.zeta])?;
        let z0 = self.s_component(&d.point, 0.0)?;
        let mut restriction = z0[dim].abs();
        for k in 0..dim {
            restriction = restriction.max((z0[k] - c.zeta[k]).abs());
        }
        let diff = |h: f64| -> Result<Vec<f64>> {
            let a = self.s_component(&d.point, h)?;
            let b = self.s_component(&d.point, -h)?;
            Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
        };
        let h1 = self.epsilon / 100.0;
        let d1 = diff(h1)?;
        let d2 = diff(h1 / 2.0)?;
        let rich: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
        let tangential = rich[..dim].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let det = dlambda_value(&d, 0.0)?.to_matrix()?.determinant();
        Ok(NormalFormCheck {
            point: d.point.clone(),
            f_formula: 1.0 + r,
            f_measured: rich[dim],
            restriction_residual: restriction,
            tangential,
            det_dlambda: det,
        })
    }

    /// Check `ζ_λ|_{s=0} = ζ_η` and `∂_s(ds(ζ_λ))|_{s=0} = 1 + dβ(C, ζ)` on
    /// the base grid, and compare the measured repelling verdict with the
    /// linear-type verdict of the base.
    pub fn classification_check(&self, grid: &GridSpec) -> Result<ClassificationReport> {
        let points = grid.points(self.base.chart())?;
        let checks = par::try_map(grid.exec, &points, |p| self.normal_form_at(p))?;
        let verdict = deformation_type(&self.base, grid)?;
        let mut rep = ClassificationReport {
            checks: Vec::new(),
            max_restriction_residual: 0.0,
            max_slope_error: 0.0,
            f_min: f64::INFINITY,
            f_max: f64::NEG_INFINITY,
            repelling: true,
            repelling_formula: true,
            agrees_with_deformation: true,
        };
        for c in &checks {
            rep.max_restriction_residual = rep.max_restriction_residual.max(c.restriction_residual);
            rep.max_slope_error = rep.max_slope_error.max(c.slope_error());
            rep.f_min = rep.f_min.min(c.f_formula);
            rep.f_max = rep.f_max.max(c.f_formula);
            rep.repelling &= c.f_measured > REPELLING_MIN;
            rep.repelling_formula &= c.f_formula > BOUNDARY_TOL;
        }
        rep.agrees_with_deformation = rep.repelling == verdict.is_linear_type
            && rep.repelling == rep.repelling_formula
            && verdict.agreement;
        rep.checks = checks;
        Ok(rep)
    }

    /// `(η + εβ, η − εβ)` on `M`.
    pub fn boundary_contact_forms(&self) -> Result<(DifferentialForm, DifferentialForm)> {
        let e = Expr::constant(self.epsilon);
        let eb = self.base.beta().scale(&e);
        Ok((self.base.eta().try_add(&eb)?, self.base.eta().try_sub(&eb)?))
    }

    /// Contact signs of the two boundary forms.
    pub fn boundary_contact_signs(&self, grid: &GridSpec) -> Result<(ContactSignReport, ContactSignReport)> {
        Ok((
            contact_sign(&self.base, self.epsilon, grid)?,
            contact_sign(&self.base, -self.epsilon, grid)?,
        ))
    }
}

/// `point..., F_formula, F_measured, det_dlambda` rows with a header.
pub fn classification_csv(names: &[String], checks: &[NormalFormCheck]) -> String {
    let mut out = String::new();
    for n in names {
        out.push_str(n);
        out.push(',');
    }
    out.push_str("F_formula,F_measured,det_dlambda\n");
    for c in checks {
        for x in &c.point {
            out.push_str(&format!("{x:.16e},"));
        }
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            c.f_formula, c.f_measured, c.det_dlambda
        ));
    }
    out
}

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde_json::json;

use super::reeb::reeb_at;
use crate::calculus::{exterior_derivative, pointwise_solve, Chart, CoordKind, DifferentialForm, FormValue};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lhs::{GridSpec, LHStructure};
use crate::par;
use crate::report::{CheckRecord, VerificationReport, Worst};

/// Unit cotangent bundle of the upper half plane in coordinates
/// `(x, y > 0, θ)`, `θ` of period `2π`, with
/// `α = (cos θ dx + sin θ dy)/y` and `Θ = dθ + dx/y`.
#[derive(Debug, Clone)]
pub struct McDuffModel {
    pub chart: Chart,
    pub alpha: DifferentialForm,
    pub theta_form: DifferentialForm,
    pub dalpha: DifferentialForm,
    pub dtheta_form: DifferentialForm,
    /// `(η, β) = (α − Θ, α)`.
    pub structure: LHStructure,
}

/// Frame `(R, ∂θ, h)` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub reeb: Vec<f64>,
    pub dtheta: Vec<f64>,
    pub h: Vec<f64>,
}

pub const RELATION_TOL: f64 = 1e-9;

pub const RELATIONS: [&str; 8] = [
    "alpha(dtheta)=0",
    "Theta(R)=0",
    "alpha(R)=1",
    "Theta(dtheta)=1",
    "i_R dalpha=0",
    "i_dtheta dTheta=0",
    "dalpha(dtheta,h)=1",
    "dTheta(h,R)=-1",
];

struct Values {
    alpha: FormValue,
    theta: FormValue,
    dalpha: FormValue,
    dtheta: FormValue,
}

pub fn mcduff_chart() -> Result<Chart> {
    Chart::new([
        ("x", CoordKind::Bounded { lo: -1.0, hi: 1.0 }),
        ("y", CoordKind::Bounded { lo: 0.5, hi: 2.0 }),
        ("theta", CoordKind::Periodic { period: TAU }),
    ])
}

impl McDuffModel {
    fn values(&self, p: &[f64]) -> Result<Values> {
        let ev = |f: &DifferentialForm| f.eval_at(p).map_err(|e| Error::eval(p, e));
        Ok(Values {
            alpha: ev(&self.alpha)?,
            theta: ev(&self.theta_form)?,
            dalpha: ev(&self.dalpha)?,
            dtheta: ev(&self.dtheta_form)?,
        })
    }

    /// `R` from the Reeb solve, and `h` from `α(h) = Θ(h) = 0`,
    /// `dα(∂θ, h) = 1`.
    pub fn frame_at(&self, p: &[f64]) -> Result<Frame> {
        let p = self.chart.reduced(p);
        let v = self.values(&p)?;
        let reeb = reeb_at(&v.alpha, &v.dalpha, &p)?;
        let dtheta = vec![0.0, 0.0, 1.0];
        let i_dtheta = v.dalpha.interior(&crate::calculus::Field::new(dtheta.clone()))?;
        let mut m = DMatrix::zeros(3, 3);
        for k in 0..3 {
            m[(0, k)] = v.alpha.components()[k];
            m[(1, k)] = v.theta.components()[k];
            m[(2, k)] = i_dtheta.components()[k];
        }
        let rhs = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let h = pointwise_solve(&m, &rhs).map_err(|e| Error::solve(&p, e))?;
        Ok(Frame {
            reeb,
            dtheta,
            h: h.x.iter().copied().collect(),
        })
    }

    /// Residuals of the eight relations at a point, in [`RELATIONS`] order.
    pub fn relation_residuals(&self, p: &[f64]) -> Result<[f64; 8]> {
        let p = self.chart.reduced(p);
        let v = self.values(&p)?;
        let f = self.frame_at(&p)?;
        let one = |form: &FormValue, x: &[f64]| form.apply_vectors(&[x]);
        let i_r = v.dalpha.interior(&crate::calculus::Field::new(f.reeb.clone()))?;
        let i_t = v.dtheta.interior(&crate::calculus::Field::new(f.dtheta.clone()))?;
        Ok([
            one(&v.alpha, &f.dtheta)?.abs(),
            one(&v.theta, &f.reeb)?.abs(),
            (one(&v.alpha, &f.reeb)? - 1.0).abs(),
            (one(&v.theta, &f.dtheta)? - 1.0).abs(),
            i_r.max_abs(),
            i_t.max_abs(),
            (v.dalpha.apply_vectors(&[&f.dtheta, &f.h])? - 1.0).abs(),
            (v.dtheta.apply_vectors(&[&f.h, &f.reeb])? + 1.0).abs(),
        ])
    }

    /// `det(h, R, ∂θ)` divided by the sign of `α ∧ dα`; positive when the
    /// frame is positively oriented.
    pub fn orientation_at(&self, p: &[f64]) -> Result<f64> {
        let p = self.chart.reduced(p);
        let v = self.values(&p)?;
        let f = self.frame_at(&p)?;
        let vol = v.alpha.wedge(&v.dalpha)?.top_coefficient()?;
        let m = DMatrix::from_columns(&[
            DVector::from_column_slice(&f.h),
            DVector::from_column_slice(&f.reeb),
            DVector::from_column_slice(&f.dtheta),
        ]);
        Ok(m.determinant() * vol.signum())
    }

    /// Relation audit plus the structure-level identities on a grid.
    pub fn audit(&self, grid: &GridSpec) -> Result<VerificationReport> {
        struct Row {
            rel: [f64; 8],
            orient: f64,
            zeta_h: f64,
            c_frame: f64,
            dbeta: f64,
        }
        let points = grid.points(&self.chart)?;
        let rows = par::try_map(grid.exec, &points, |p| -> Result<Row> {
            let rel = self.relation_residuals(p)?;
            let f = self.frame_at(p)?;
            let (_, c) = self.structure.canonical_at(p)?;
            let dist = |a: &[f64], b: &[f64]| {
                a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
            };
            let c_expected: Vec<f64> = f.reeb.iter().zip(&f.dtheta).map(|(a, b)| a + b).collect();
            Ok(Row {
                rel,
                orient: self.orientation_at(p)?,
                zeta_h: dist(&c.zeta, &f.h),
                c_frame: dist(&c.c, &c_expected),
                dbeta: (self.structure.dbeta_c_zeta(p)? - 1.0).abs(),
            })
        })?;
        let mut rel: Vec<Worst> = (0..8).map(|_| Worst::max()).collect();
        let mut orient = Worst::min();
        let mut zeta_h = Worst::max();
        let mut c_frame = Worst::max();
        let mut dbeta = Worst::max();
        for (p, r) in points.iter().zip(&rows) {
            for k in 0..8 {
                rel[k].push(r.rel[k], p);
            }
            orient.push(r.orient, p);
            zeta_h.push(r.zeta_h, p);
            c_frame.push(r.c_frame, p);
            dbeta.push(r.dbeta, p);
        }
        let mut report = VerificationReport::new();
        for (k, w) in rel.iter().enumerate() {
            report.push(
                CheckRecord::from_worst(format!("mcduff_relation_{}", k + 1), w, RELATION_TOL)
                    .with_detail(json!({ "relation": RELATIONS[k] })),
            );
        }
        let mut o = CheckRecord::from_worst("mcduff_frame_orientation", &orient, 0.0);
        o.pass = orient.samples > 0 && orient.value > 0.0;
        report.push(o);
        report.push(CheckRecord::from_worst("mcduff_zeta_equals_h", &zeta_h, RELATION_TOL));
        report.push(CheckRecord::from_worst("mcduff_c_equals_r_plus_dtheta", &c_frame, RELATION_TOL));
        report.push(CheckRecord::from_worst("mcduff_dbeta_c_zeta_is_one", &dbeta, RELATION_TOL));
        Ok(report)
    }
}

pub fn mcduff_model() -> Result<McDuffModel> {
    let chart = mcduff_chart()?;
    let (y, th) = (Expr::var(1), Expr::var(2));
    let alpha = DifferentialForm::one_form(vec![
        th.clone().cos() / y.clone(),
        th.clone().sin() / y.clone(),
        Expr::zero(),
    ]);
    let theta_form = DifferentialForm::one_form(vec![Expr::one() / y, Expr::zero(), Expr::one()]);
    let dalpha = exterior_derivative(&alpha)?;
    let dtheta_form = exterior_derivative(&theta_form)?;
    let eta = alpha.try_sub(&theta_form)?;
    let structure = LHStructure::new(chart.clone(), eta, alpha.clone(), 2, None)?;
    let model = McDuffModel {
        chart,
        alpha,
        theta_form,
        dalpha,
        dtheta_form,
        structure,
    };
    let probe = super::verification_grid();
    let points = probe.points(&model.chart)?;
    for p in &points {
        let r = model.relation_residuals(p)?;
        if let Some(k) = (0..8).find(|&k| !(r[k] <= RELATION_TOL)) {
            return Err(Error::RelationViolation {
                relation: RELATIONS[k].into(),
                point: p.clone(),
                residual: r[k],
            });
        }
    }
    super::auto_verify(&model.structure)?;
    Ok(model)
}

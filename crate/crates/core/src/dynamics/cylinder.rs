use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{integrate, PeriodicOrbit};
use crate::calculus::FieldEval;
use crate::error::{Error, Result};
use crate::lhs::LHStructure;
use crate::par::{self, Exec};
use crate::suspension::SuspensionDomain;

/// Bound on `|λ(T)|` and on the boundary Legendrian residuals.
pub const EXACTNESS_TOL: f64 = 1e-8;
pub const MIN_CURVE_SAMPLES: usize = 64;
pub const MIN_S_SAMPLES: usize = 16;
const SUBSTEPS: usize = 16;

/// A closed curve in `M` sampled at equally spaced parameters.
pub trait ClosedCurve: Sync {
    fn period(&self) -> f64;
    /// `(point, tangent)` at parameters `i·period/m`, `i = 0..m`.
    fn samples(&self, m: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>>;
}

/// A periodic orbit of the Liouville flow, integrated on the cover.
pub struct OrbitCurve<'a> {
    pub structure: &'a LHStructure,
    pub orbit: PeriodicOrbit,
}

impl<'a> OrbitCurve<'a> {
    pub fn new(structure: &'a LHStructure, orbit: PeriodicOrbit) -> Self {
        OrbitCurve { structure, orbit }
    }

    /// Distance between the endpoint, brought back by the deck map, and the
    /// start, with periodic coordinates compared mod their period.
    pub fn closure_residual(&self) -> Result<f64> {
        let field = self.structure.liouville_field();
        let step = self.orbit.period / (MIN_CURVE_SAMPLES * SUBSTEPS) as f64;
        let traj = integrate(&field, &self.orbit.point, self.orbit.period, step, false)?;
        let mut x = traj.last_state().to_vec();
        if let Some(deck) = self.structure.quotient() {
            deck.wrap(&mut x)?;
            if x[deck.fiber()] > deck.scale().sqrt() {
                deck.apply_inverse(&mut x);
            }
        }
        let chart = self.structure.chart();
        let mut worst: f64 = 0.0;
        for (i, kind) in chart.kinds().iter().enumerate() {
            let mut d = x[i] - self.orbit.point[i];
            if let crate::calculus::CoordKind::Periodic { period } = kind {
                d -= (d / period).round() * period;
            }
            worst = worst.max(d.abs());
        }
        Ok(worst)
    }
}

impl ClosedCurve for OrbitCurve<'_> {
    fn period(&self) -> f64 {
        self.orbit.period
    }

    fn samples(&self, m: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let field = self.structure.liouville_field();
        let step = self.orbit.period / (m * SUBSTEPS) as f64;
        let traj = integrate(&field, &self.orbit.point, self.orbit.period, step, false)?;
        (0..m)
            .map(|i| {
                let x = traj.states[i * SUBSTEPS].clone();
                let v = field.eval(&x)?;
                Ok((x, v))
            })
            .collect()
    }
}

/// `base + amplitude·sin(2π u/T)·e_coord`.
pub struct PerturbedCurve<C> {
    pub base: C,
    pub coord: usize,
    pub amplitude: f64,
}

impl<C: ClosedCurve> ClosedCurve for PerturbedCurve<C> {
    fn period(&self) -> f64 {
        self.base.period()
    }

    fn samples(&self, m: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let w = TAU / self.period();
        let mut out = self.base.samples(m)?;
        for (i, (x, v)) in out.iter_mut().enumerate() {
            let u = i as f64 * self.period() / m as f64;
            x[self.coord] += self.amplitude * (w * u).sin();
            v[self.coord] += self.amplitude * w * (w * u).cos();
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianCylinder {
    pub orbit: Option<PeriodicOrbit>,
    pub epsilon: f64,
    pub curve_samples: usize,
    pub s_samples: usize,
    /// `max |λ(γ', 0)|` over the sample grid.
    pub flow_residual: f64,
    /// `max |λ(∂s)|`.
    pub s_residual: f64,
    /// `max |(η ± εβ)(γ')|` on the two boundary curves.
    pub boundary_residual: [f64; 2],
    pub worst_point: Vec<f64>,
}

impl LagrangianCylinder {
    pub fn max_residual(&self) -> f64 {
        self.flow_residual
            .max(self.s_residual)
            .max(self.boundary_residual[0])
            .max(self.boundary_residual[1])
    }
}

/// Sample `(u, s) ↦ (γ(u), s)` and check that `λ` vanishes on both tangent
/// directions and that the boundary curves are Legendrian.
pub fn build_cylinder_on(
    d: &SuspensionDomain,
    curve: &dyn ClosedCurve,
    epsilon: f64,
    samples: [usize; 2],
    exec: Exec,
) -> Result<LagrangianCylinder> {
    if !(epsilon >= 0.0 && epsilon <= d.epsilon()) {
        return Err(Error::InvalidInput(format!(
            "cylinder half-width {epsilon} must lie in [0, {}]",
            d.epsilon()
        )));
    }
    let [m, k] = samples;
    if m < MIN_CURVE_SAMPLES || k < MIN_S_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "cylinder grid must be at least {MIN_CURVE_SAMPLES}x{MIN_S_SAMPLES}"
        )));
    }
    let base = d.base();
    let dim = base.dim();
    let pts = curve.samples(m)?;
    let s_values: Vec<f64> = (0..k)
        .map(|j| -epsilon + 2.0 * epsilon * j as f64 / (k - 1) as f64)
        .collect();
    let mut ds = vec![0.0; dim + 1];
    ds[dim] = 1.0;

    struct Row {
        flow: (f64, Vec<f64>),
        s: f64,
        boundary: [f64; 2],
    }
    let rows = par::try_map(exec, &pts, |(x, v)| -> Result<Row> {
        let mut v4 = v.clone();
        v4.push(0.0);
        let mut flow = (0.0f64, Vec::new());
        let mut s_res: f64 = 0.0;
        for &s in &s_values {
            let mut x4 = x.clone();
            x4.push(s);
            let lam = d.lambda_at(&x4)?;
            let a = lam.apply_vectors(&[&v4])?.abs();
            if a > flow.0 || flow.1.is_empty() {
                flow = (a, x4.clone());
            }
            s_res = s_res.max(lam.apply_vectors(&[&ds])?.abs());
        }
        let p = base.at(x)?;
        let eta = p.eta.apply_vectors(&[v])?;
        let beta = p.beta.apply_vectors(&[v])?;
        Ok(Row {
            flow,
            s: s_res,
            boundary: [(eta + epsilon * beta).abs(), (eta - epsilon * beta).abs()],
        })
    })?;

    let mut out = LagrangianCylinder {
        orbit: None,
        epsilon,
        curve_samples: m,
        s_samples: k,
        flow_residual: 0.0,
        s_residual: 0.0,
        boundary_residual: [0.0; 2],
        worst_point: rows.first().map(|r| r.flow.1.clone()).unwrap_or_default(),
    };
    for r in &rows {
        if r.flow.0 > out.flow_residual {
            out.flow_residual = r.flow.0;
            out.worst_point = r.flow.1.clone();
        }
        out.s_residual = out.s_residual.max(r.s);
        for i in 0..2 {
            out.boundary_residual[i] = out.boundary_residual[i].max(r.boundary[i]);
        }
    }
    let value = out.max_residual();
    if !(value <= EXACTNESS_TOL) {
        return Err(Error::ExactnessViolation {
            point: out.worst_point.clone(),
            value,
        });
    }
    Ok(out)
}

/// The cylinder over a periodic Liouville orbit on a 64×16 grid.
pub fn build_cylinder(
    d: &SuspensionDomain,
    orbit: &PeriodicOrbit,
    epsilon: f64,
    exec: Exec,
) -> Result<LagrangianCylinder> {
    let curve = OrbitCurve::new(d.base(), orbit.clone());
    let mut c = build_cylinder_on(d, &curve, epsilon, [MIN_CURVE_SAMPLES, MIN_S_SAMPLES], exec)?;
    c.orbit = Some(orbit.clone());
    Ok(c)
}

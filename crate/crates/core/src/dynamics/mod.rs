//! Liouville flow integration, periodic orbits of torus-bundle flows and
//! exact Lagrangian cylinders over them.

mod census;
mod cylinder;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::calculus::{Chart, FieldEval};
use crate::error::{Error, Result};
use crate::lhs::{DeckMap, LHStructure};

pub use census::{
    algebraic_count, orbit_census, orbits_csv, K_MAX, rational_fixed_points, return_matrix,
    smith_normal_form, CensusRow, OrbitCensus, PeriodicOrbit, Rational, Smith,
};
pub use cylinder::{
    build_cylinder, build_cylinder_on, ClosedCurve, LagrangianCylinder, OrbitCurve,
    PerturbedCurve,
};

const BLOW_UP: f64 = 1e12;
/// Relative one-step error (step vs two half steps) above which a step is
/// rejected as too large.
const STEP_ERROR_MAX: f64 = 1e-4;
const STEP_CHECK_EVERY: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `D φ^t(x0)` for each stored time, in the coordinates of the stored
    /// (wrapped) state.
    pub jacobians: Option<Vec<DMatrix<f64>>>,
    /// Net power of the deck map applied so far, per stored time.
    pub deck_powers: Vec<i32>,
}

impl Trajectory {
    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has a state")
    }

    pub fn last_jacobian(&self) -> Option<&DMatrix<f64>> {
        self.jacobians.as_ref().and_then(|j| j.last())
    }
}

/// Flow of a field, optionally reduced on a quotient: periodic coordinates
/// are taken mod their period and the deck map keeps the fiber coordinate
/// in its fundamental interval.
#[derive(Clone, Copy)]
pub struct Flow<'a> {
    field: &'a dyn FieldEval,
    chart: Option<&'a Chart>,
    deck: Option<&'a DeckMap>,
}

impl<'a> Flow<'a> {
    pub fn new(field: &'a dyn FieldEval) -> Self {
        Flow {
            field,
            chart: None,
            deck: None,
        }
    }

    pub fn with_chart(mut self, chart: &'a Chart) -> Self {
        self.chart = Some(chart);
        self
    }

    pub fn with_deck(mut self, deck: Option<&'a DeckMap>) -> Self {
        self.deck = deck;
        self
    }

    /// The Liouville flow of a structure on its quotient.
    pub fn liouville(field: &'a dyn FieldEval, s: &'a LHStructure) -> Self {
        Flow::new(field).with_chart(s.chart()).with_deck(s.quotient())
    }

    fn rhs(&self, x: &[f64], j: Option<&DMatrix<f64>>) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
        let f = self.field.eval(x)?;
        let dj = match j {
            Some(j) => Some(self.field.jacobian(x)? * j),
            None => None,
        };
        Ok((f, dj))
    }

    /// One classical RK4 step of the state and (optionally) the variational
    /// equation `J' = DX(x) J`.
    fn rk4(&self, x: &[f64], j: Option<&DMatrix<f64>>, h: f64) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
        let axpy = |a: &[f64], k: &[f64], c: f64| -> Vec<f64> {
            a.iter().zip(k).map(|(x, y)| x + c * y).collect()
        };
        let jpy = |a: Option<&DMatrix<f64>>, k: &Option<DMatrix<f64>>, c: f64| -> Option<DMatrix<f64>> {
            a.map(|a| a + k.as_ref().expect("variational slope") * c)
        };
        let (k1, l1) = self.rhs(x, j)?;
        let (k2, l2) = self.rhs(&axpy(x, &k1, h / 2.0), jpy(j, &l1, h / 2.0).as_ref())?;
        let (k3, l3) = self.rhs(&axpy(x, &k2, h / 2.0), jpy(j, &l2, h / 2.0).as_ref())?;
        let (k4, l4) = self.rhs(&axpy(x, &k3, h), jpy(j, &l3, h).as_ref())?;
        let xn: Vec<f64> = (0..x.len())
            .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        let jn = j.map(|j| {
            let (l1, l2, l3, l4) = (l1.unwrap(), l2.unwrap(), l3.unwrap(), l4.unwrap());
            j + (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0)
        });
        Ok((xn, jn))
    }

    /// Bring a state into the fundamental domain, transporting `J`.
    pub fn normalize(&self, x: &mut [f64], j: Option<&mut DMatrix<f64>>) -> Result<i32> {
        let mut k = 0;
        if let Some(deck) = self.deck {
            k = deck.wrap(x)?;
            if let Some(j) = j {
                if k != 0 {
                    let m = deck.as_linear_map(x.len()).matrix;
                    let step = if k > 0 {
                        m
                    } else {
                        m.try_inverse().expect("deck map is invertible")
                    };
                    for _ in 0..k.unsigned_abs() {
                        *j = &step * &*j;
                    }
                }
            }
        }
        if let Some(c) = self.chart {
            c.reduce(x);
        }
        Ok(k)
    }

    pub fn integrate(&self, x0: &[f64], tau: f64, step: f64, with_variational: bool) -> Result<Trajectory> {
        let dim = self.field.dim();
        if x0.len() != dim {
            return Err(Error::Dimension("initial point has the wrong dimension".into()));
        }
        if !(step > 0.0 && step.is_finite() && tau.is_finite()) {
            return Err(Error::InvalidInput("step must be positive and tau finite".into()));
        }
        let n = (tau.abs() / step).ceil() as usize;
        let h = if n == 0 { 0.0 } else { tau / n as f64 };
        let mut x = x0.to_vec();
        let mut j = with_variational.then(|| DMatrix::identity(dim, dim));
        let mut power = self.normalize(&mut x, j.as_mut())?;
        let mut traj = Trajectory {
            times: vec![0.0],
            states: vec![x.clone()],
            jacobians: j.as_ref().map(|j| vec![j.clone()]),
            deck_powers: vec![power],
        };
        for i in 0..n {
            if i % STEP_CHECK_EVERY == 0 {
                let (full, _) = self.rk4(&x, None, h)?;
                let (half, _) = self.rk4(&x, None, h / 2.0)?;
                let (two, _) = self.rk4(&half, None, h / 2.0)?;
                let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let estimate = full
                    .iter()
                    .zip(&two)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                    / 15.0;
                if estimate > STEP_ERROR_MAX * scale {
                    return Err(Error::StepTooLarge { step: h, estimate });
                }
            }
            let (xn, jn) = self.rk4(&x, j.as_ref(), h)?;
            x = xn;
            j = jn;
            let t = (i + 1) as f64 * h;
            if x.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
                return Err(Error::BlowUp { time: t });
            }
            power += self.normalize(&mut x, j.as_mut())?;
            traj.times.push(t);
            traj.states.push(x.clone());
            if let (Some(js), Some(j)) = (traj.jacobians.as_mut(), j.as_ref()) {
                js.push(j.clone());
            }
            traj.deck_powers.push(power);
        }
        Ok(traj)
    }
}

/// Integrate a field without any wrapping.
pub fn integrate(
    field: &dyn FieldEval,
    x0: &[f64],
    tau: f64,
    step: f64,
    with_variational: bool,
) -> Result<Trajectory> {
    Flow::new(field).integrate(x0, tau, step, with_variational)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub point: Vec<f64>,
    pub tau: f64,
    pub step: f64,
    /// `‖(φ^τ)^*η − e^τ η‖ / ‖e^τ η‖` at the point.
    pub eta_residual: f64,
    /// Same for `dη` (Frobenius norms).
    pub deta_residual: f64,
}

/// Compare `(φ^τ)^*η` and `(φ^τ)^*dη` with `e^τ η`, `e^τ dη` at `x0`.
pub fn expansion_check(s: &LHStructure, x0: &[f64], tau: f64, step: f64) -> Result<ExpansionReport> {
    let field = s.liouville_field();
    let flow = Flow::liouville(&field, s);
    let traj = flow.integrate(x0, tau, step, true)?;
    let x1 = traj.last_state();
    let j = traj.last_jacobian().expect("variational run");
    let d0 = s.at(x0)?;
    let d1 = s.at(x1)?;
    let e = tau.exp();
    let eta1 = DVector::from_column_slice(d1.eta.components());
    let eta0 = DVector::from_column_slice(d0.eta.components()) * e;
    let pulled = j.transpose() * eta1;
    let om1 = d1.deta.to_matrix()?;
    let om0 = d0.deta.to_matrix()? * e;
    let pulled_om = j.transpose() * om1 * j;
    let rel = |a: f64, b: f64| if b > 0.0 { a / b } else { a };
    Ok(ExpansionReport {
        point: d0.point.clone(),
        tau,
        step,
        eta_residual: rel((pulled - &eta0).norm(), eta0.norm()),
        deta_residual: rel((pulled_om - &om0).norm(), om0.norm()),
    })
}

/// `η`-law residuals at `step` and `step / 2` and their ratio (about 16
/// for a fourth-order integrator away from roundoff).
pub fn step_halving_ratio(s: &LHStructure, x0: &[f64], tau: f64, step: f64) -> Result<(f64, f64, f64)> {
    let a = expansion_check(s, x0, tau, step)?.eta_residual;
    let b = expansion_check(s, x0, tau, step / 2.0)?.eta_residual;
    Ok((a, b, a / b))
}

use serde::{Deserialize, Serialize};

use super::{GridSpec, LHStructure};
use crate::calculus::{CoordKind, Field};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabhamReport {
    /// Largest `|(ι_ζ dβ + (n-1) β) ∧ dη^(n-1)|` coefficient on the samples.
    pub integrand_sup: f64,
    /// Trapezoid integral of the same top form over one fundamental domain.
    pub integral: f64,
    /// Range of `dβ(C, ζ) − (n − 1)`.
    pub excess_min: f64,
    pub excess_max: f64,
    pub contains_zero: bool,
    /// Deck invariance residual of `η, β` on the samples.
    pub deck_residual: f64,
    pub samples: usize,
}

/// Integrand value and `dβ(C, ζ)` at a point.
fn integrand(s: &LHStructure, p: &[f64]) -> Result<(f64, f64)> {
    let n = s.n();
    let (d, c) = s.canonical_at(p)?;
    let zeta = Field::new(c.zeta.clone());
    let form = d
        .dbeta
        .interior(&zeta)?
        .try_add(&d.beta.scale(&((n - 1) as f64)))?
        .wedge(&d.deta.wedge_power(n - 1, 1.0)?)?;
    let r = d.dbeta.apply_vectors(&[&c.c, &c.zeta])?;
    Ok((form.top_coefficient()?, r))
}

/// Integral obstruction on a closed quotient: `(ι_ζ dβ + (n-1)β) ∧ dη^(n-1)`
/// is exact, so its integral over `M` vanishes and `dβ(C, ζ) = n − 1`
/// somewhere.
///
/// The fundamental domain is sampled with `samples_per_coord` points per
/// direction: a periodic trapezoid on the two torus coordinates and a
/// uniform grid in `u = ln t` on `[0, ν)` (so `dt = t du`).
pub fn stabham_scan(s: &LHStructure, grid: &GridSpec) -> Result<StabhamReport> {
    let q = s.quotient().ok_or(Error::QuotientMissing)?;
    if s.n() < 2 {
        return Err(Error::InvalidInput("the integral obstruction needs n >= 2".into()));
    }
    grid.validate()?;
    let [i, j] = q.periodic();
    let fiber = q.fiber();
    let period = |k: usize| match s.chart().kinds()[k] {
        CoordKind::Periodic { period } => period,
        CoordKind::Bounded { .. } => unreachable!("deck coordinates are periodic"),
    };
    let (pi, pj) = (period(i), period(j));
    let nu = q.log_scale();
    let m = grid.samples_per_coord;
    let mut points = Vec::with_capacity(m * m * m);
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let mut x = vec![0.0; s.dim()];
                x[i] = pi * a as f64 / m as f64;
                x[j] = pj * b as f64 / m as f64;
                x[fiber] = (nu * c as f64 / m as f64).exp();
                points.push(x);
            }
        }
    }
    let values = par::try_map(grid.exec, &points, |p| integrand(s, p))?;
    let cell = pi * pj * nu / (m * m * m) as f64;
    let n1 = (s.n() - 1) as f64;
    let mut r = StabhamReport {
        integrand_sup: 0.0,
        integral: 0.0,
        excess_min: f64::INFINITY,
        excess_max: f64::NEG_INFINITY,
        contains_zero: false,
        deck_residual: 0.0,
        samples: values.len(),
    };
    for (p, (w, db)) in points.iter().zip(&values) {
        r.integrand_sup = r.integrand_sup.max(w.abs());
        r.integral += w * p[fiber] * cell;
        r.excess_min = r.excess_min.min(db - n1);
        r.excess_max = r.excess_max.max(db - n1);
    }
    let tol = 1e-9;
    r.contains_zero = r.excess_min <= tol && r.excess_max >= -tol;
    let stride = (points.len() / 1000).max(1);
    let subset: Vec<Vec<f64>> = points.iter().step_by(stride).cloned().collect();
    r.deck_residual = s.deck_residual(&subset)?.value.max(0.0);
    Ok(r)
}

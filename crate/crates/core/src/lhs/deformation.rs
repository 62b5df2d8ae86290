use serde::{Deserialize, Serialize};

use super::{GridSpec, LHStructure, PointData};
use crate::calculus::FormValue;
use crate::error::{Error, Result};
use crate::par;

/// Values within this distance of a threshold count as not strictly past it.
pub const BOUNDARY_TOL: f64 = 1e-9;
const ZERO_SIGN_TOL: f64 = 1e-12;

/// `β ∧ dη^(n-1)` at a point, with a scale to judge when it vanishes.
fn orientation(d: &PointData, n: usize) -> Result<(f64, f64)> {
    let vol = d.beta.wedge(&d.deta.wedge_power(n - 1, 1.0)?)?.top_coefficient()?;
    let scale = d.beta.max_abs() * d.deta.max_abs().powi(n as i32 - 1);
    if !(vol.abs() > 1e-12 * scale) {
        return Err(Error::ZeroVolume {
            point: d.point.clone(),
        });
    }
    Ok((vol, scale))
}

/// Both equivalent linear-type quantities at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointDeformation {
    /// `(β∧dη^(n-1) + (n-1) η∧dβ∧dη^(n-2)) / (β∧dη^(n-1))`.
    pub condition2_ratio: f64,
    /// `dβ(C, ζ)`.
    pub dbeta_c_zeta: f64,
}

impl PointDeformation {
    pub fn condition2(&self) -> bool {
        self.condition2_ratio > BOUNDARY_TOL
    }
    pub fn condition3(&self) -> bool {
        self.dbeta_c_zeta + 1.0 > BOUNDARY_TOL
    }
    pub fn strong(&self) -> bool {
        self.dbeta_c_zeta > BOUNDARY_TOL
    }
}

pub fn deformation_at(s: &LHStructure, point: &[f64]) -> Result<PointDeformation> {
    let n = s.n();
    let (d, c) = s.canonical_at(point)?;
    let (vol, _) = orientation(&d, n)?;
    let first = d.beta.wedge(&d.deta.wedge_power(n - 1, 1.0)?)?;
    let second = d
        .eta
        .wedge(&d.dbeta)?
        .wedge(&d.deta.wedge_power(n - 2, 1.0)?)?
        .scale(&((n - 1) as f64));
    let t2 = first.try_add(&second)?.top_coefficient()?;
    Ok(PointDeformation {
        condition2_ratio: t2 / vol,
        dbeta_c_zeta: d.dbeta.apply_vectors(&[&c.c, &c.zeta])?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationVerdict {
    pub is_linear_type: bool,
    pub is_strong_type: bool,
    /// Minimum of the condition-(2) ratio over the samples.
    pub condition2_margin: f64,
    /// Minimum of `dβ(C,ζ) + 1`.
    pub condition3_margin: f64,
    pub dbeta_c_zeta_min: f64,
    pub dbeta_c_zeta_max: f64,
    pub agreement: bool,
    pub disagreements: usize,
    /// Largest `|ratio − (1 + dβ(C,ζ))|`; the two routes compute the same
    /// number in different ways.
    pub cross_residual: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
}

impl DeformationVerdict {
    pub fn from_samples(points: &[Vec<f64>], values: &[PointDeformation]) -> Self {
        let mut v = DeformationVerdict {
            is_linear_type: true,
            is_strong_type: true,
            condition2_margin: f64::INFINITY,
            condition3_margin: f64::INFINITY,
            dbeta_c_zeta_min: f64::INFINITY,
            dbeta_c_zeta_max: f64::NEG_INFINITY,
            agreement: true,
            disagreements: 0,
            cross_residual: 0.0,
            worst_point: Vec::new(),
            samples: values.len(),
        };
        for (p, d) in points.iter().zip(values) {
            v.is_linear_type &= d.condition3();
            v.is_strong_type &= d.strong();
            if d.condition2() != d.condition3() {
                v.disagreements += 1;
            }
            v.condition2_margin = v.condition2_margin.min(d.condition2_ratio);
            if d.dbeta_c_zeta + 1.0 < v.condition3_margin {
                v.condition3_margin = d.dbeta_c_zeta + 1.0;
                v.worst_point = p.clone();
            }
            v.dbeta_c_zeta_min = v.dbeta_c_zeta_min.min(d.dbeta_c_zeta);
            v.dbeta_c_zeta_max = v.dbeta_c_zeta_max.max(d.dbeta_c_zeta);
            v.cross_residual = v
                .cross_residual
                .max((d.condition2_ratio - 1.0 - d.dbeta_c_zeta).abs());
        }
        v.agreement = v.disagreements == 0;
        v
    }
}

/// Decide linear contact-deformation type by the wedge criterion and by
/// `dβ(C, ζ) > -1` at every sample, and strong type by `dβ(C, ζ) > 0`.
pub fn deformation_type(s: &LHStructure, grid: &GridSpec) -> Result<DeformationVerdict> {
    let points = grid.points(s.chart())?;
    let values = par::try_map(grid.exec, &points, |p| deformation_at(s, p))?;
    Ok(DeformationVerdict::from_samples(&points, &values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSignReport {
    pub t: f64,
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    /// `(η+tβ)∧(dη+t dβ)^(n-1)` divided by `β∧dη^(n-1)`.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Largest absolute value of the unnormalised top form.
    pub raw_max_abs: f64,
    /// `Some(±1)` or `Some(0)` when every sample has that sign.
    pub uniform_sign: Option<i8>,
    pub samples: usize,
}

fn contact_value(s: &LHStructure, p: &[f64], t: f64) -> Result<(f64, f64)> {
    let n = s.n();
    let d = s.at(p)?;
    let (vol, _) = orientation(&d, n)?;
    let alpha = d.eta.try_add(&d.beta.scale(&t))?;
    let dalpha = d.deta.try_add(&d.dbeta.scale(&t))?;
    let top: FormValue = alpha.wedge(&dalpha.wedge_power(n - 1, 1.0)?)?;
    let raw = top.top_coefficient()?;
    Ok((raw / vol, raw))
}

/// Sign of `(η + tβ) ∧ (dη + t dβ)^(n-1)` against `β ∧ dη^(n-1)`.
pub fn contact_sign(s: &LHStructure, t: f64, grid: &GridSpec) -> Result<ContactSignReport> {
    if !t.is_finite() {
        return Err(Error::InvalidInput("contact parameter must be finite".into()));
    }
    let points = grid.points(s.chart())?;
    let values = par::try_map(grid.exec, &points, |p| contact_value(s, p, t))?;
    let mut r = ContactSignReport {
        t,
        positive: 0,
        negative: 0,
        zero: 0,
        ratio_min: f64::INFINITY,
        ratio_max: f64::NEG_INFINITY,
        raw_max_abs: 0.0,
        uniform_sign: None,
        samples: values.len(),
    };
    for (ratio, raw) in values {
        if ratio.abs() <= ZERO_SIGN_TOL {
            r.zero += 1;
        } else if ratio > 0.0 {
            r.positive += 1;
        } else {
            r.negative += 1;
        }
        r.ratio_min = r.ratio_min.min(ratio);
        r.ratio_max = r.ratio_max.max(ratio);
        r.raw_max_abs = r.raw_max_abs.max(raw.abs());
    }
    r.uniform_sign = match (r.positive, r.negative, r.zero) {
        (p, 0, 0) if p > 0 => Some(1),
        (0, m, 0) if m > 0 => Some(-1),
        (0, 0, z) if z > 0 => Some(0),
        _ => None,
    };
    Ok(r)
}

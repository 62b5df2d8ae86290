use serde::{Deserialize, Serialize};

use super::{GridSpec, LHStructure, TRANSVERSALITY_MIN};
use crate::calculus::{exterior_derivative_at, Field, VectorField};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::par;
use crate::report::Worst;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalChangeReport {
    /// Largest `|dβ'(C', ζ) − (dβ(C, ζ) − dg(ζ) ± e^{-g} (d ι_Ξ dη)(C, ζ))|`.
    pub identity_residual: f64,
    pub identity_worst_point: Option<Vec<f64>>,
    /// Largest `|dg(ζ)|`.
    pub dg_zeta_max: f64,
    /// Largest `‖ζ' − ζ‖∞`.
    pub zeta_shift: f64,
    /// Largest `max(|η(Ξ)|, |β(Ξ)|)`.
    pub xi_off_kernel: f64,
    /// Smallest `|β'(Ĉ)| / ‖β'‖` with `Ĉ` the unit characteristic direction.
    pub transversality: f64,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct NormalChange {
    pub structure: LHStructure,
    pub report: NormalChangeReport,
}

struct Sample {
    identity: f64,
    dg_zeta: f64,
    zeta_shift: f64,
    xi_off: f64,
    transversality: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Replace `β` by `β' = ±e^g β + ι_Ξ dη` and check, at every grid sample,
/// that `β'` stays transverse to `ker dη` and that
/// `dβ'(±e^{-g} C, ζ) = dβ(C, ζ) − dg(ζ) ± e^{-g} (d ι_Ξ dη)(C, ζ)`.
pub fn normal_change(
    s: &LHStructure,
    g: &Expr,
    xi: &VectorField,
    sign: i8,
    grid: &GridSpec,
) -> Result<NormalChange> {
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidInput(format!("sign must be +1 or -1, got {sign}")));
    }
    let dim = s.dim();
    if xi.dim() != dim
        || g.max_var().is_some_and(|v| v >= dim)
        || xi.components().iter().any(|c| c.max_var().is_some_and(|v| v >= dim))
    {
        return Err(Error::Dimension("g and Xi must live on the structure's chart".into()));
    }
    let factor = Expr::constant(sign as f64) * g.clone().exp();
    let xi_deta = s.deta().interior(xi)?;
    let beta2 = s.beta().scale(&factor).try_add(&xi_deta)?;
    let s2 = s.with_beta(beta2)?;

    let points = grid.points(s.chart())?;
    let samples = par::try_map(grid.exec, &points, |p| -> Result<Sample> {
        let (d, c) = s.canonical_at(p)?;
        let d2 = s2.at(p)?;
        let c_unit: Vec<f64> = c.c.iter().map(|x| x / norm(&c.c)).collect();
        let b2n = norm(d2.beta.components());
        let transversality = if b2n > 0.0 {
            d2.beta.apply_vectors(&[&c_unit])?.abs() / b2n
        } else {
            0.0
        };
        if !(transversality >= TRANSVERSALITY_MIN) {
            return Err(Error::AxiomViolation {
                axiom: 3,
                point: d.point.clone(),
                detail: format!("|beta'(C)|/|beta'| = {transversality:e}"),
            });
        }
        let c2 = d2.canonical()?;
        let lhs = d2.dbeta.apply_vectors(&[&c2.c, &c.zeta])?;

        let q = &d.point;
        let gj = g.eval_jet(q).map_err(|e| Error::eval(q, e))?;
        let dg_zeta: f64 = gj.partials.iter().zip(&c.zeta).map(|(a, b)| a * b).sum();
        let d_xi = exterior_derivative_at(&xi_deta, q)?;
        let extra = d_xi.apply_vectors(&[&c.c, &c.zeta])?;
        let r = d.dbeta.apply_vectors(&[&c.c, &c.zeta])?;
        let rhs = r - dg_zeta + sign as f64 * (-gj.value).exp() * extra;

        let xi_v = xi.eval_at(q).map_err(|e| Error::eval(q, e))?;
        let xi_f = Field::new(xi_v);
        let xi_off = d
            .eta
            .apply(&[&xi_f])?
            .abs()
            .max(d.beta.apply(&[&xi_f])?.abs());
        let zeta_shift = c2
            .zeta
            .iter()
            .zip(&c.zeta)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(Sample {
            identity: (lhs - rhs).abs() / (1.0 + rhs.abs()),
            dg_zeta,
            zeta_shift,
            xi_off,
            transversality,
        })
    })?;

    let mut identity = Worst::max();
    let mut report = NormalChangeReport {
        identity_residual: 0.0,
        identity_worst_point: None,
        dg_zeta_max: 0.0,
        zeta_shift: 0.0,
        xi_off_kernel: 0.0,
        transversality: f64::INFINITY,
        samples: samples.len(),
    };
    for (p, x) in points.iter().zip(&samples) {
        identity.push(x.identity, p);
        report.dg_zeta_max = report.dg_zeta_max.max(x.dg_zeta.abs());
        report.zeta_shift = report.zeta_shift.max(x.zeta_shift);
        report.xi_off_kernel = report.xi_off_kernel.max(x.xi_off);
        report.transversality = report.transversality.min(x.transversality);
    }
    report.identity_residual = identity.value.max(0.0);
    report.identity_worst_point = identity.point;
    Ok(NormalChange {
        structure: s2,
        report,
    })
}

use crate::calculus::{exterior_derivative, Chart, CoordKind, DifferentialForm};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lhs::{GridSpec, LHStructure};

/// Contactisation `(X × ℝ_z, η = π^*λ, β = dz)` of a Liouville form `λ` on
/// a `2(n-1)`-dimensional chart. The structure is open (no quotient).
pub fn contactisation(base: &Chart, base_lambda: &DifferentialForm, z_range: (f64, f64)) -> Result<LHStructure> {
    let d = base.dim();
    if d == 0 || d % 2 == 1 || base_lambda.dim() != d || base_lambda.degree() != 1 {
        return Err(Error::Dimension("base must be an even-dimensional chart with a 1-form".into()));
    }
    let omega = exterior_derivative(base_lambda)?;
    let grid = GridSpec::new(5, 32, 0xba5e);
    for p in grid.points(base)? {
        let w = omega.eval_at(&p).map_err(|e| Error::eval(&p, e))?;
        let top = w.wedge_power(d / 2, 1.0)?.top_coefficient()?;
        if !(top.abs() > 1e-12 * w.max_abs().powi(d as i32 / 2).max(f64::MIN_POSITIVE)) {
            return Err(Error::NotSymplecticBase { point: p });
        }
    }
    let mut z_name = String::from("z");
    while base.index_of(&z_name).is_some() {
        z_name.push('_');
    }
    let chart = base.extended(
        &z_name,
        CoordKind::Bounded {
            lo: z_range.0,
            hi: z_range.1,
        },
    )?;
    let eta = base_lambda.extend(d + 1)?;
    let mut dz = vec![Expr::zero(); d + 1];
    dz[d] = Expr::one();
    let beta = DifferentialForm::one_form(dz);
    let s = LHStructure::new(chart, eta, beta, d / 2 + 1, None)?;
    super::auto_verify(&s)?;
    Ok(s)
}

/// `λ = p dq` on `(q, p) ∈ [-1, 1]²`.
pub fn contactisation_pdq() -> Result<LHStructure> {
    let b = CoordKind::Bounded { lo: -1.0, hi: 1.0 };
    let base = Chart::new([("q", b), ("p", b)])?;
    let lambda = DifferentialForm::one_form(vec![Expr::var(1), Expr::zero()]);
    contactisation(&base, &lambda, (-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdq_fields() {
        let s = contactisation_pdq().unwrap();
        let p = [0.2, -0.6, 0.4];
        let (d, c) = s.canonical_at(&p).unwrap();
        assert_eq!(c.c.iter().map(|x| x.round()).collect::<Vec<_>>(), vec![0.0, 0.0, 1.0]);
        assert!((c.zeta[1] + 0.6).abs() < 1e-14 && c.zeta[0].abs() < 1e-14 && c.zeta[2].abs() < 1e-14);
        assert_eq!(s.dbeta_c_zeta(&p).unwrap(), 0.0);
        // eta + beta = p dq + dz is contact
        let a = d.eta.try_add(&d.beta).unwrap();
        let da = d.deta.try_add(&d.dbeta).unwrap();
        assert!(a.wedge(&da).unwrap().top_coefficient().unwrap().abs() > 0.5);
    }

    #[test]
    fn degenerate_base_rejected() {
        let b = CoordKind::Bounded { lo: -1.0, hi: 1.0 };
        let base = Chart::new([("q", b), ("p", b)]).unwrap();
        let lambda = DifferentialForm::one_form(vec![Expr::var(0), Expr::zero()]);
        assert!(matches!(
            contactisation(&base, &lambda, (-1.0, 1.0)),
            Err(Error::NotSymplecticBase { .. })
        ));
    }
}

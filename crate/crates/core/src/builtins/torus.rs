use crate::calculus::{Chart, CoordKind, DifferentialForm};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lhs::{DeckMap, LHStructure};

/// Mapping torus of a hyperbolic `A ∈ SL₂(ℤ)` with
/// `η = t v·dθ`, `β = t⁻¹ w·dθ` on `T² × (1, e^ν)`.
#[derive(Debug, Clone)]
pub struct TorusBundle {
    pub matrix: [[i64; 2]; 2],
    /// `e^ν`, the eigenvalue larger than one.
    pub e_nu: f64,
    pub v: [f64; 2],
    pub w: [f64; 2],
    pub v_star: [f64; 2],
    pub w_star: [f64; 2],
    pub structure: LHStructure,
}

impl TorusBundle {
    pub fn nu(&self) -> f64 {
        self.e_nu.ln()
    }

    /// Expected `C = t w*·∂θ` at a point.
    pub fn expected_c(&self, p: &[f64]) -> [f64; 3] {
        [p[2] * self.w_star[0], p[2] * self.w_star[1], 0.0]
    }

    /// Expected `ζ = t ∂t` at a point.
    pub fn expected_zeta(&self, p: &[f64]) -> [f64; 3] {
        [0.0, 0.0, p[2]]
    }
}

pub fn trace(a: [[i64; 2]; 2]) -> i64 {
    a[0][0] + a[1][1]
}

pub fn det(a: [[i64; 2]; 2]) -> i64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Check `A ∈ SL₂(ℤ)` with `|tr A| > 2`.
pub fn check_hyperbolic(a: [[i64; 2]; 2]) -> Result<()> {
    if det(a) != 1 {
        return Err(Error::InvalidInput(format!("det A = {} (need 1)", det(a))));
    }
    if trace(a).abs() <= 2 {
        return Err(Error::NotHyperbolic { trace: trace(a) });
    }
    Ok(())
}

/// Eigenvector of `A` for `lambda`, scaled to first component 1.
fn eigenvector(a: [[i64; 2]; 2], lambda: f64) -> [f64; 2] {
    // b ≠ 0 for hyperbolic A (otherwise A is triangular with eigenvalues ±1)
    let (a00, a01) = (a[0][0] as f64, a[0][1] as f64);
    [1.0, (lambda - a00) / a01]
}

pub fn torus_bundle(a: [[i64; 2]; 2]) -> Result<TorusBundle> {
    check_hyperbolic(a)?;
    let tr = trace(a);
    if tr < 0 {
        return Err(Error::InvalidInput(format!(
            "trace {tr} < -2 gives negative eigenvalues; the bundle needs e^nu > 0"
        )));
    }
    let trf = tr as f64;
    let root = (trf * trf - 4.0).sqrt();
    let e_nu = (trf + root) / 2.0;
    let e_minus = 1.0 / e_nu;
    let v = eigenvector(a, e_nu);
    let w = eigenvector(a, e_minus);
    // rows of [v w]^{-1} are the dual vectors
    let d = v[0] * w[1] - w[0] * v[1];
    let v_star = [w[1] / d, -w[0] / d];
    let w_star = [-v[1] / d, v[0] / d];

    let chart = Chart::new([
        ("th1", CoordKind::unit_periodic()),
        ("th2", CoordKind::unit_periodic()),
        ("t", CoordKind::Bounded { lo: 1.0, hi: e_nu }),
    ])?;
    let t = Expr::var(2);
    let eta = DifferentialForm::one_form(vec![
        t.clone() * Expr::constant(v[0]),
        t.clone() * Expr::constant(v[1]),
        Expr::zero(),
    ]);
    let tinv = Expr::one() / t;
    let beta = DifferentialForm::one_form(vec![
        tinv.clone() * Expr::constant(w[0]),
        tinv * Expr::constant(w[1]),
        Expr::zero(),
    ]);
    let linear = [[a[1][1], -a[1][0]], [-a[0][1], a[0][0]]];
    let deck = DeckMap::new(linear, e_nu, [0, 1], 2)?;
    let structure = LHStructure::new(chart, eta, beta, 2, Some(deck))?;
    super::auto_verify(&structure)?;
    Ok(TorusBundle {
        matrix: a,
        e_nu,
        v,
        w,
        v_star,
        w_star,
        structure,
    })
}

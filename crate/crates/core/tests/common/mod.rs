#![allow(dead_code)]

use lhskit_core::builtins::{mcduff_model, torus_bundle, CAT_MAP};
use lhskit_core::calculus::VectorField;
use lhskit_core::expr::Expr;
use lhskit_core::lhs::{normal_change, GridSpec, LHStructure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn small_grid(seed: u64) -> GridSpec {
    GridSpec::new(6, 64, seed)
}

/// Seeded normal change of a built-in: torus bundle for even seeds, the
/// McDuff model for odd ones. `g` mixes periodic terms with a multiple of
/// the log of the radial coordinate, so `dg(ζ)` is a nonzero constant and
/// the deformation type can go either way.
pub fn random_normal_change(seed: u64) -> LHStructure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    let (base, g, xi) = if seed.is_multiple_of(2) {
        let tb = torus_bundle(CAT_MAP).unwrap();
        let c = tb.structure.chart().clone();
        let g = c
            .parse(&format!(
                "{}*cos(2*pi*th1) + {}*sin(2*pi*th2) + {}*log(t)",
                r(-0.3, 0.3),
                r(-0.3, 0.3),
                r(-1.0, 3.0)
            ))
            .unwrap();
        let xi = VectorField::new(vec![
            c.parse(&format!("{}*sin(2*pi*th2)", r(-0.5, 0.5))).unwrap(),
            c.parse(&format!("{}*cos(2*pi*th1)", r(-0.5, 0.5))).unwrap(),
            c.parse(&format!("{}*t", r(-0.2, 0.2))).unwrap(),
        ]);
        (tb.structure, g, xi)
    } else {
        let m = mcduff_model().unwrap();
        let c = m.chart.clone();
        let g = c
            .parse(&format!(
                "{}*cos(theta) + {}*x + {}*log(y)",
                r(-0.3, 0.3),
                r(-0.3, 0.3),
                r(-1.0, 3.0)
            ))
            .unwrap();
        let xi = VectorField::new(vec![
            c.parse(&format!("{}*sin(theta)", r(-0.3, 0.3))).unwrap(),
            c.parse(&format!("{}*y", r(-0.3, 0.3))).unwrap(),
            Expr::constant(r(-0.3, 0.3)),
        ]);
        (m.structure, g, xi)
    };
    let sign = if seed.is_multiple_of(3) { -1 } else { 1 };
    normal_change(&base, &g, &xi, sign, &small_grid(seed))
        .unwrap()
        .structure
}

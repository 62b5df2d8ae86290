mod common;

use common::{random_normal_change, small_grid};
use lhskit_core::builtins::{mcduff_model, torus_bundle, CAT_MAP};
use lhskit_core::calculus::{exterior_derivative, VectorField};
use lhskit_core::expr::Expr;
use lhskit_core::lhs::{contact_sign, deformation_type, normal_change, GridSpec};
use lhskit_core::suspension::{build, build_with, Epsilon, EpsilonKeyword};
use lhskit_core::Error;

#[test]
fn torus_dlambda_splits() {
    let tb = torus_bundle(CAT_MAP).unwrap();
    let d = build(&tb.structure, 0.1, &small_grid(1)).unwrap();
    // dλ = dη + ds∧β + s dβ, checked against hand-assembled values
    for x in [[0.1, 0.2, 1.3, 0.05], [0.7, 0.9, 2.2, -0.08]] {
        let om = exterior_derivative(d.lambda()).unwrap().eval_at(&x).unwrap();
        let (t, s) = (x[2], x[3]);
        let (v, w) = (tb.v, tb.w);
        // basis order: (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)
        let expected = [
            0.0,
            -v[0] + s * w[0] / (t * t),
            -w[0] / t,
            -v[1] + s * w[1] / (t * t),
            -w[1] / t,
            0.0,
        ];
        for (a, b) in om.coeffs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{:?}", om.coeffs());
        }
    }
}

#[test]
fn ambient_field_examples() {
    let tb = torus_bundle(CAT_MAP).unwrap();
    let d = build(&tb.structure, 0.1, &small_grid(2)).unwrap();
    for p in [[0.0, 0.0, 1.0], [0.3, 0.8, 2.1]] {
        let z = d.ambient_liouville_field(&[p[0], p[1], p[2], 0.0]).unwrap();
        for (a, b) in z.iter().zip([0.0, 0.0, p[2], 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    // difference quotient of direct solves at ±h
    let h = 1e-3;
    let up = d.ambient_liouville_field(&[0.0, 0.0, 1.0, h]).unwrap()[3];
    let down = d.ambient_liouville_field(&[0.0, 0.0, 1.0, -h]).unwrap()[3];
    assert!(((up - down) / (2.0 * h) - 2.0).abs() < 1e-4);
    let at = d.ambient_liouville_field(&[0.0, 0.0, 1.0, 0.01]).unwrap()[3];
    assert!((at - 0.02).abs() < 1e-4, "{at}");
    assert!(d.liouville_residual(&[0.2, 0.4, 1.7, 0.03]).unwrap() <= 1e-10);
}

#[test]
fn zero_lambda_gives_zero_field() {
    let s = lhskit_core::builtins::contactisation_pdq().unwrap();
    let d = build(&s, 0.1, &small_grid(3)).unwrap();
    // λ = p dq + s dz vanishes at p = 0, s = 0
    let z = d.ambient_liouville_field(&[0.3, 0.0, 0.2, 0.0]).unwrap();
    assert!(z.iter().all(|x| x.abs() < 1e-15));
}

#[test]
fn epsilon_zero_rejected() {
    let tb = torus_bundle(CAT_MAP).unwrap();
    assert!(matches!(build(&tb.structure, 0.0, &small_grid(1)), Err(Error::InvalidInput(_))));
}

fn twisted_torus() -> lhskit_core::lhs::LHStructure {
    let tb = torus_bundle(CAT_MAP).unwrap();
    let c = tb.structure.chart();
    let xi = VectorField::new(vec![c.parse("0.5*sin(2*pi*th2)").unwrap(), Expr::zero(), Expr::zero()]);
    normal_change(&tb.structure, &Expr::zero(), &xi, 1, &small_grid(4)).unwrap().structure
}

#[test]
fn huge_epsilon_not_symplectic() {
    let s = twisted_torus();
    assert!(build(&s, 0.1, &small_grid(5)).is_ok());
    match build(&s, 1e3, &small_grid(5)) {
        Err(Error::NotSymplectic { point, .. }) => assert_eq!(point.len(), 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn auto_epsilon_halves() {
    let s = twisted_torus();
    let d = build_with(&s, Epsilon::Keyword(EpsilonKeyword::Auto), &small_grid(5)).unwrap();
    assert!(d.epsilon() <= 0.1 && d.epsilon() > 0.0);
    assert_eq!(d.epsilon(), 0.1 / 2f64.powi(d.halvings as i32));
}

#[test]
fn classification_of_builtins() {
    let grid = GridSpec::new(5, 30, 6);
    for s in [torus_bundle(CAT_MAP).unwrap().structure, mcduff_model().unwrap().structure] {
        let d = build(&s, 0.1, &grid).unwrap();
        let r = d.classification_check(&grid).unwrap();
        assert!(r.max_restriction_residual <= 1e-10);
        assert!(r.max_slope_error <= 1e-4, "{}", r.max_slope_error);
        assert!((r.f_min - 2.0).abs() < 1e-9 && (r.f_max - 2.0).abs() < 1e-9);
        assert!(r.repelling && r.agrees_with_deformation);
        for c in &r.checks {
            assert!(((c.f_measured - 2.0) / 2.0).abs() <= 1e-4);
        }
    }
}

#[test]
fn boundary_factor_is_not_repelling() {
    let tb = torus_bundle(CAT_MAP).unwrap();
    let g = tb.structure.chart().parse("2*log(t)").unwrap();
    let grid = GridSpec::new(4, 20, 7);
    let s = normal_change(&tb.structure, &g, &VectorField::zero(3), 1, &grid).unwrap().structure;
    let d = build(&s, 0.1, &grid).unwrap();
    let r = d.classification_check(&grid).unwrap();
    assert!(r.f_min.abs() < 1e-9 && r.f_max.abs() < 1e-9);
    assert!(!r.repelling && !r.repelling_formula);
    assert!(!deformation_type(&s, &grid).unwrap().is_linear_type);
    assert!(r.agrees_with_deformation);
}

#[test]
fn repelling_matches_deformation_type_on_random_changes() {
    let grid = GridSpec::new(4, 16, 8);
    for seed in 0..20 {
        let s = random_normal_change(seed);
        let d = build_with(&s, Epsilon::Keyword(EpsilonKeyword::Auto), &grid).unwrap();
        let r = d.classification_check(&grid).unwrap();
        assert!(r.agrees_with_deformation, "seed {seed}");
        assert!(r.max_slope_error <= 1e-4, "seed {seed}: {}", r.max_slope_error);
    }
}

#[test]
fn boundary_contact_signs_are_opposite() {
    let grid = small_grid(9);
    for s in [torus_bundle(CAT_MAP).unwrap().structure, mcduff_model().unwrap().structure] {
        let d = build(&s, 0.05, &grid).unwrap();
        let (plus, minus) = d.boundary_contact_signs(&grid).unwrap();
        assert_eq!((plus.uniform_sign, minus.uniform_sign), (Some(1), Some(-1)));
        let (a, b) = d.boundary_contact_forms().unwrap();
        let sum = a.try_add(&b).unwrap().eval_at(&[0.1, 0.7, 1.2]).unwrap();
        let eta = s.eta().eval_at(&[0.1, 0.7, 1.2]).unwrap();
        for (x, y) in sum.coeffs().iter().zip(eta.coeffs()) {
            assert!((x - 2.0 * y).abs() < 1e-14);
        }
        let zero = contact_sign(&s, 0.0, &grid).unwrap();
        assert!(zero.raw_max_abs <= 1e-12);
    }
}

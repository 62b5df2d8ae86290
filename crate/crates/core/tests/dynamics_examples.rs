use lhskit_core::builtins::{mcduff_model, reeb_field, torus_bundle, CAT_MAP};
use lhskit_core::dynamics::{
    algebraic_count, build_cylinder, expansion_check, integrate, orbit_census, orbits_csv,
    step_halving_ratio, Flow,
};
use lhskit_core::par::Exec;
use lhskit_core::suspension::build;
use lhskit_core::lhs::GridSpec;
use lhskit_core::Error;

fn torus_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) - (x - y).round()).abs()).fold(0.0, f64::max)
}

#[test]
fn one_return_to_the_section() {
    let tb = torus_bundle(CAT_MAP).unwrap();
    let f = tb.structure.liouville_field();
    let tr = Flow::liouville(&f, &tb.structure)
        .integrate(&[0.0, 0.0, 1.0], tb.nu(), 1e-2, true)
        .unwrap();
    let x = tr.last_state();
    // t ↦ e^τ t closes up after exactly one deck wrap
    let t = x[2];
    assert!((t - 1.0).abs() < 1e-9 || (t - tb.e_nu).abs() < 1e-9, "{t}");
    assert!(torus_dist(&x[..2], &[0.0, 0.0]) < 1e-12);
    assert_eq!(tr.deck_powers.last().unwrap().abs(), if t < 1.5 { 1 } else { 0 });
    assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn return_map_is_transpose() {
    let tb = torus_bundle(CAT_MAP).unwrap();
    let f = tb.structure.liouville_field();
    let flow = Flow::liouville(&f, &tb.structure);
    let theta = [0.1234, 0.4321];
    let tr = flow.integrate(&[theta[0], theta[1], 1.0], tb.nu(), 1e-2, false).unwrap();
    let mut x = tr.last_state().to_vec();
    if x[2] > 2.0 {
        tb.structure.quotient().unwrap().apply_inverse(&mut x);
    }
    let a = tb.matrix;
    let fwd = [
        a[0][0] as f64 * theta[0] + a[1][0] as f64 * theta[1],
        a[0][1] as f64 * theta[0] + a[1][1] as f64 * theta[1],
    ];
    let back = [
        a[1][1] as f64 * theta[0] - a[1][0] as f64 * theta[1],
        -a[0][1] as f64 * theta[0] + a[0][0] as f64 * theta[1],
    ];
    let d = torus_dist(&x[..2], &fwd).min(torus_dist(&x[..2], &back));
    assert!(d < 1e-9, "{x:?}");
}

#[test]
fn deck_equivariance() {
    let tb = torus_bundle(CAT_MAP).unwrap();
    let deck = tb.structure.quotient().unwrap();
    let f = tb.structure.liouville_field();
    let flow = Flow::liouville(&f, &tb.structure);
    let x0 = [0.3, 0.7, 2.5];
    // integrate on the cover across t = e^ν, then wrap
    let mut a = integrate(&f, &x0, 0.3, 1e-3, false).unwrap().last_state().to_vec();
    deck.wrap(&mut a).unwrap();
    tb.structure.chart().reduce(&mut a);
    // wrap first (from the translated copy), then integrate on the quotient
    let mut shifted = x0.to_vec();
    deck.apply(&mut shifted);
    let b = flow.integrate(&shifted, 0.3, 1e-3, false).unwrap().last_state().to_vec();
    assert!(torus_dist(&a[..2], &b[..2]) <= 1e-10 && (a[2] - b[2]).abs() <= 1e-10, "{a:?} {b:?}");
}

#[test]
fn expansion_law_on_torus() {
    let tb = torus_bundle(CAT_MAP).unwrap();
    let r = expansion_check(&tb.structure, &[0.2, 0.6, 1.4], 1.0, 1e-3).unwrap();
    assert!(r.eta_residual <= 1e-6 && r.deta_residual <= 1e-6, "{r:?}");
    let z = expansion_check(&tb.structure, &[0.2, 0.6, 1.4], 0.0, 1e-3).unwrap();
    assert!(z.eta_residual <= 1e-12 && z.deta_residual <= 1e-12);
}

#[test]
fn expansion_law_on_mcduff() {
    let m = mcduff_model().unwrap();
    let r = expansion_check(&m.structure, &[0.0, 1.0, 0.0], 0.5, 1e-3).unwrap();
    assert!(r.eta_residual <= 1e-5 && r.deta_residual <= 1e-5, "{r:?}");
}

#[test]
fn fourth_order_convergence() {
    let tb = torus_bundle(CAT_MAP).unwrap();
    let (a, b, ratio) = step_halving_ratio(&tb.structure, &[0.2, 0.6, 1.4], 1.0, 0.1).unwrap();
    assert!(a > b && (12.0..=20.0).contains(&ratio), "{a:e} {b:e} {ratio}");
    let m = mcduff_model().unwrap();
    let (_, _, ratio) = step_halving_ratio(&m.structure, &[0.0, 1.0, 0.0], 0.5, 0.1).unwrap();
    assert!((12.0..=20.0).contains(&ratio), "{ratio}");
}

#[test]
fn jacobian_at_time_zero_is_identity() {
    let m = mcduff_model().unwrap();
    let f = m.structure.liouville_field();
    let tr = integrate(&f, &[0.1, 1.1, 0.4], 0.2, 0.01, true).unwrap();
    let j = &tr.jacobians.as_ref().unwrap()[0];
    assert_eq!(j, &nalgebra::DMatrix::<f64>::identity(3, 3));
}

#[test]
fn blow_up_detected() {
    let c = lhskit_core::calculus::Chart::new([(
        "x",
        lhskit_core::calculus::CoordKind::Bounded { lo: 0.0, hi: 1.0 },
    )])
    .unwrap();
    let f = lhskit_core::calculus::VectorField::new(vec![c.parse("x^2").unwrap()]);
    let err = integrate(&f, &[1.0], 2.0, 1e-3, false).unwrap_err();
    assert!(matches!(err, Error::BlowUp { .. } | Error::StepTooLarge { .. }), "{err:?}");
}

#[test]
fn coarse_step_rejected() {
    let c = lhskit_core::calculus::Chart::new([(
        "x",
        lhskit_core::calculus::CoordKind::Bounded { lo: 0.0, hi: 1.0 },
    )])
    .unwrap();
    let f = lhskit_core::calculus::VectorField::new(vec![c.parse("-50*x").unwrap()]);
    assert!(matches!(
        integrate(&f, &[1.0], 1.0, 0.2, false),
        Err(Error::StepTooLarge { .. })
    ));
}

#[test]
fn census_to_four() {
    let c = orbit_census(CAT_MAP, 4, Exec::default()).unwrap();
    assert_eq!(c.counts(), vec![1, 5, 16, 45]);
    assert!(c.consistent());
    for row in &c.rows {
        assert!(row.max_residual <= 1e-10);
        assert_eq!(row.algebraic, algebraic_count(CAT_MAP, row.k).unwrap());
    }
    let csv = orbits_csv(&c);
    assert_eq!(csv.lines().count(), 1 + 1 + 5 + 16 + 45);
    assert!(csv.lines().next().unwrap().starts_with("k,theta1,theta2,t,period,residual"));
}

#[test]
fn origin_is_always_fixed() {
    for a in [[[3, 1], [2, 1]], [[1, 1], [1, 2]], [[5, 2], [2, 1]]] {
        let c = orbit_census(a, 1, Exec::Sequential).unwrap();
        assert!(c.consistent());
        assert!(c
            .orbits
            .iter()
            .any(|o| torus_dist(&o.point[..2], &[0.0, 0.0]) < 1e-10));
    }
}

#[test]
fn census_rejects_parabolic() {
    assert!(matches!(
        orbit_census([[1, 1], [0, 1]], 3, Exec::Sequential),
        Err(Error::NotHyperbolic { .. })
    ));
}

#[test]
fn cylinder_over_k1_orbit() {
    let tb = torus_bundle(CAT_MAP).unwrap();
    let census = orbit_census(CAT_MAP, 1, Exec::Sequential).unwrap();
    let d = build(&tb.structure, 0.1, &GridSpec::new(4, 16, 1)).unwrap();
    let c = build_cylinder(&d, &census.orbits[0], 0.05, Exec::default()).unwrap();
    assert!(c.max_residual() <= 1e-9, "{c:?}");
    assert_eq!((c.curve_samples, c.s_samples), (64, 16));
}

#[test]
fn reeb_of_mcduff_alpha() {
    let m = mcduff_model().unwrap();
    let r = reeb_field(&m.alpha).unwrap();
    for p in [[0.2, 0.8, 1.0], [-0.5, 1.9, 4.0]] {
        let got = r.at(&p).unwrap();
        let (y, th) = (p[1], p[2]);
        let want = [y * th.cos(), y * th.sin(), -th.cos()];
        for k in 0..3 {
            assert!((got[k] - want[k]).abs() <= 1e-9);
        }
    }
}

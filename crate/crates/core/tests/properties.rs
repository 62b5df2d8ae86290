use lhskit_core::builtins::{torus_bundle, CAT_MAP};
use lhskit_core::calculus::{
    exterior_derivative, pullback_along_linear, pullback_value, DifferentialForm, Field, Form,
    FormValue, LinearMap, VectorField,
};
use lhskit_core::error::ExprError;
use lhskit_core::expr::{parse, Expr};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const DIM: usize = 3;

/// Random trees over three variables whose evaluation stays in the domain
/// on `[-1, 1]³`: logs, roots and quotients act on strictly positive
/// arguments.
fn expr_tree(depth: u32) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..DIM).prop_map(Expr::var),
        (-2.0..2.0f64).prop_map(Expr::constant),
    ];
    leaf.prop_recursive(depth, 64, 2, |inner| {
        let pos = |e: Expr| e.clone() * e + Expr::one();
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(move |(a, b)| a / pos(b)),
            (inner.clone(), inner.clone()).prop_map(move |(a, b)| pos(a).pow(b.sin())),
            inner.clone().prop_map(|a| -a),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            inner.clone().prop_map(|a| a.sin().exp()),
            inner.clone().prop_map(move |a| pos(a).ln()),
            inner.clone().prop_map(move |a| pos(a).sqrt()),
            inner.prop_map(|a| a.powi(2)),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0..1.0f64, DIM)
}

fn one_form(depth: u32) -> impl Strategy<Value = DifferentialForm> {
    proptest::collection::vec(expr_tree(depth), DIM).prop_map(DifferentialForm::one_form)
}

fn zero_form(depth: u32) -> impl Strategy<Value = DifferentialForm> {
    expr_tree(depth).prop_map(|e| DifferentialForm::scalar(DIM, e))
}

fn value_form(k: usize) -> impl Strategy<Value = FormValue> {
    let n = lhskit_core::calculus::basis(DIM, k).len();
    proptest::collection::vec(-2.0..2.0f64, n).prop_map(move |c| Form::from_coeffs(DIM, k, c).unwrap())
}

fn vector() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0..2.0f64, DIM)
}

fn max_diff(a: &FormValue, b: &FormValue) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn eval(f: &DifferentialForm, p: &[f64]) -> FormValue {
    f.eval_at(p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn autodiff_matches_central_differences(e in expr_tree(6), p in point()) {
        let jet = e.eval_jet(&p).unwrap();
        prop_assume!(jet.value.abs() < 1e4 && jet.partials.iter().all(|d| d.abs() < 1e4));
        let h = 1e-5;
        for k in 0..DIM {
            let (mut a, mut b) = (p.clone(), p.clone());
            a[k] += h;
            b[k] -= h;
            let fd = (e.eval(&a).unwrap() - e.eval(&b).unwrap()) / (2.0 * h);
            let d = jet.partials[k];
            prop_assert!((d - fd).abs() <= 1e-6 * (1.0 + d.abs()), "∂{k}: {d} vs {fd}");
        }
    }

    #[test]
    fn parser_total_on_token_soup(tokens in proptest::collection::vec(
        prop::sample::select(vec![
            "x", "y", "z", "sin", "cos", "exp", "log", "sqrt", "abs", "pi", "(", ")", "+",
            "-", "*", "/", "^", "1", "2.5", "1e3", ".", ",", "3e", "0.",
        ]),
        0..24,
    )) {
        let names: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let text = tokens.join(" ");
        match parse(&text, &names) {
            Ok(e) => prop_assert!(e.max_var().is_none_or(|v| v < 3)),
            Err(ExprError::Syntax { offset, .. }) => prop_assert!(offset <= text.len()),
            Err(other) => prop_assert!(false, "{text:?}: {other:?}"),
        }
    }

    #[test]
    fn parser_never_panics(text in "\\PC{0,40}") {
        let names: Vec<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        let _ = parse(&text, &names);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn d_squared_vanishes(f in zero_form(4), a in one_form(3), p in point()) {
        let ddf = exterior_derivative(&exterior_derivative(&f).unwrap()).unwrap();
        let dda = exterior_derivative(&exterior_derivative(&a).unwrap()).unwrap();
        let v = eval(&exterior_derivative(&f).unwrap(), &p);
        prop_assume!(v.max_abs() < 1e3);
        prop_assert!(eval(&ddf, &p).max_abs() <= 1e-10);
        prop_assert!(eval(&dda, &p).max_abs() <= 1e-10 * (1.0 + eval(&exterior_derivative(&a).unwrap(), &p).max_abs()));
    }

    #[test]
    fn leibniz(f in zero_form(3), a in one_form(3), b in one_form(3), p in point()) {
        let d = |x: &DifferentialForm| exterior_derivative(x).unwrap();
        // 0-form times 1-form
        let lhs = eval(&d(&f.wedge(&a).unwrap()), &p);
        let rhs = eval(&d(&f).wedge(&a).unwrap().try_add(&f.wedge(&d(&a)).unwrap()).unwrap(), &p);
        let scale = 1.0 + lhs.max_abs();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-10 * scale);
        // 1-form times 1-form, sign (−1)^1
        let lhs = eval(&d(&a.wedge(&b).unwrap()), &p);
        let rhs = eval(&d(&a).wedge(&b).unwrap().try_sub(&a.wedge(&d(&b)).unwrap()).unwrap(), &p);
        let scale = 1.0 + lhs.max_abs();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-10 * scale);
    }

    #[test]
    fn graded_commutativity(a in value_form(1), b in value_form(1), c in value_form(2)) {
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        prop_assert!(max_diff(&ab, &ba.scale(&-1.0)) <= 1e-14);
        let ac = a.wedge(&c).unwrap();
        let ca = c.wedge(&a).unwrap();
        prop_assert!(max_diff(&ac, &ca) <= 1e-14);
    }

    #[test]
    fn double_interior_vanishes(c in value_form(2), t in value_form(3), x in vector()) {
        let f = Field::new(x);
        prop_assert!(c.interior(&f).unwrap().interior(&f).unwrap().max_abs() <= 1e-14);
        prop_assert!(t.interior(&f).unwrap().interior(&f).unwrap().max_abs() <= 1e-14);
    }

    #[test]
    fn interior_is_antiderivation(a in value_form(1), b in value_form(1), x in vector()) {
        let f = Field::new(x);
        let lhs = a.wedge(&b).unwrap().interior(&f).unwrap();
        let ia = a.interior(&f).unwrap().coeffs()[0];
        let ib = b.interior(&f).unwrap().coeffs()[0];
        let rhs = b.scale(&ia).try_sub(&a.scale(&ib)).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-13);
    }

    #[test]
    fn pullback_functoriality(
        c in value_form(2),
        f in proptest::collection::vec(-2.0..2.0f64, DIM * DIM),
        g in proptest::collection::vec(-2.0..2.0f64, DIM * DIM),
    ) {
        let fm = LinearMap::linear(DMatrix::from_row_slice(DIM, DIM, &f)).unwrap();
        let gm = LinearMap::linear(DMatrix::from_row_slice(DIM, DIM, &g)).unwrap();
        // (F∘G)^* = G^* F^*
        let lhs = pullback_value(&c, &fm.compose(&gm)).unwrap();
        let rhs = pullback_value(&pullback_value(&c, &fm).unwrap(), &gm).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12 * (1.0 + lhs.max_abs()));
    }
}

/// `L_ζ η = ι_ζ dη + d ι_ζ η` against the derivative of the flow pullback
/// `(φ^s)^* η` with `φ^s(θ, t) = (θ, e^s t)`.
#[test]
fn cartan_formula_on_torus_eta() {
    let tb = torus_bundle(CAT_MAP).unwrap();
    let s = &tb.structure;
    let zeta = VectorField::new(vec![Expr::zero(), Expr::zero(), Expr::var(2)]);
    let cartan = s
        .deta()
        .interior(&zeta)
        .unwrap()
        .try_add(&exterior_derivative(&s.eta().interior(&zeta).unwrap()).unwrap())
        .unwrap();
    let flow = |h: f64| {
        LinearMap::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, h.exp()])),
            DVector::zeros(3),
        )
        .unwrap()
    };
    let h = 1e-4;
    for p in [[0.1, 0.2, 1.3], [0.8, 0.4, 2.4], [0.5, 0.9, 1.0]] {
        let up = pullback_along_linear(&flow(h), s.eta(), &p, |x| s.chart().reduce(x)).unwrap();
        let down = pullback_along_linear(&flow(-h), s.eta(), &p, |x| s.chart().reduce(x)).unwrap();
        let fd: Vec<f64> = up.coeffs().iter().zip(down.coeffs()).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let lie = cartan.eval_at(&p).unwrap();
        for (a, b) in lie.coeffs().iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
        }
        // and L_ζ η = η, since η(ζ) = 0 and ι_ζ dη = η
        for (a, b) in lie.coeffs().iter().zip(s.eta().eval_at(&p).unwrap().coeffs()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

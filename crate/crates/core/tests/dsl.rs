use std::path::PathBuf;

use lipdyn::dsl::{
    differentiate, nondifferentiable_points, parse_expr, parse_map, pretty_print, simplify, CmpOp,
    DslError, Expr, Guard,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shipped(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "maps", name]
        .iter()
        .collect();
    std::fs::read_to_string(path).unwrap()
}

fn constant() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..10).prop_map(f64::from),
        (0.0f64..100.0),
        (1e-6f64..1e6),
    ]
}

fn guard(inner: BoxedStrategy<Expr>) -> impl Strategy<Value = Guard> {
    let op = prop_oneof![
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge)
    ];
    let lhs = prop_oneof![3 => Just(Expr::var("x")), 1 => inner];
    (lhs, op, -10.0f64..10.0).prop_map(|(lhs, op, bound)| Guard { lhs, op, bound })
}

/// Trees the parser can produce: constants are non-negative, since a leading
/// minus parses as a `Neg` node.
fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![constant().prop_map(Expr::Const), Just(Expr::var("x"))];
    leaf.prop_recursive(5, 48, 3, |inner| {
        let boxed = inner.clone().boxed();
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(Expr::abs),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
            (inner.clone(), 0u32..5).prop_map(|(a, n)| Expr::pow(a, n)),
            (
                prop::collection::vec((guard(boxed.clone()), boxed.clone()), 1..3),
                boxed
            )
                .prop_map(|(branches, otherwise)| Expr::piecewise(branches, otherwise)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn print_parse_round_trip(e in expr()) {
        let text = pretty_print(&e);
        let back = parse_expr(&text, "x").map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e);
    }

    #[test]
    fn simplify_is_idempotent(e in expr()) {
        let once = simplify(&e);
        prop_assert_eq!(simplify(&once), once);
    }

    #[test]
    fn simplify_preserves_finite_values(e in expr(), x in -5.0f64..5.0) {
        if let Ok(v) = e.eval(x) {
            if v.is_finite() {
                prop_assert_eq!(simplify(&e).eval(x), Ok(v));
            }
        }
    }
}

fn central_difference(e: &Expr, x: f64) -> f64 {
    let h = 1e-6 * x.abs().max(1.0);
    (e.eval(x + h).unwrap() - e.eval(x - h).unwrap()) / (2.0 * h)
}

fn check_derivative(source: &str, lo: f64, hi: f64) {
    let def = parse_map(source).unwrap();
    let d = def.derivative.as_ref().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 100 {
        let x = rng.random_range(lo..hi);
        if def.breakpoints.iter().any(|b| (x - b).abs() <= 1e-3) {
            continue;
        }
        let exact = d.eval(x).unwrap();
        let fd = central_difference(&def.body, x);
        assert!(
            (exact - fd).abs() <= 1e-5 * exact.abs().max(1.0),
            "{}: f'({x}) = {exact}, finite difference {fd}",
            def.name
        );
        checked += 1;
    }
}

#[test]
fn shipped_maps_parse() {
    let pw = parse_map(&shipped("piecewise.map")).unwrap();
    let Expr::Piecewise(block) = &pw.body else {
        panic!("expected a piecewise body");
    };
    assert_eq!(block.branches.len() + 1, 3);
    assert_eq!(pw.breakpoints, vec![0.0, 1.0]);

    let tent = parse_map(&shipped("tent.map")).unwrap();
    assert_eq!(tent.body, parse_expr("-2*abs(x) + 1", "x").unwrap());
    assert_eq!(tent.breakpoints, vec![0.0]);

    let logistic = parse_map(&shipped("logistic.map")).unwrap();
    assert!(logistic.breakpoints.is_empty());
    assert_eq!(logistic.body.eval(0.5).unwrap(), 0.75);
}

#[test]
fn derivatives_match_finite_differences() {
    check_derivative(&shipped("piecewise.map"), -3.0, 4.0);
    check_derivative(&shipped("tent.map"), -3.0, 3.0);
    check_derivative(&shipped("logistic.map"), -1.0, 2.0);
    check_derivative("map q(x) = x / (x^2 + 1) - abs(x - 0.5)^3", -4.0, 4.0);
}

#[test]
fn derivative_of_derivative() {
    let d2 = differentiate(
        &differentiate(&parse_expr("x^3 - 2*x", "x").unwrap(), "x"),
        "x",
    );
    for x in [-2.0, 0.0, 1.5] {
        assert_eq!(d2.eval(x).unwrap(), 6.0 * x);
    }
}

#[test]
fn parse_errors_carry_positions() {
    let err = parse_map("map f(x) =\n  2*x +").unwrap_err();
    let pos = err.position();
    assert_eq!((pos.line, pos.column), (2, 8));
    assert!(err.to_string().contains("line 2, column 8"), "{err}");

    let err = parse_map("map f(x) = 2*y").unwrap_err();
    assert!(matches!(err, DslError::Parse(_)));
    assert_eq!(err.position().column, 14);

    assert!(matches!(
        parse_map("map f(x) = x $ 2"),
        Err(DslError::Lex(_))
    ));
}

#[test]
fn breakpoints_on_a_window() {
    let def = parse_map("map k(x) = abs(x + 2) + abs(x - 3)").unwrap();
    assert_eq!(def.breakpoints, vec![-2.0, 3.0]);
    assert_eq!(nondifferentiable_points(&def, (0.0, 10.0), 64), vec![3.0]);
}

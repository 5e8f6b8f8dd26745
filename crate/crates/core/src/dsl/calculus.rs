//! Algebraic simplification and symbolic differentiation.

use super::ast::{powi, CmpOp, Expr, Guard, Piecewise};

/// Folds constants and removes identity elements.
///
/// Every rewrite preserves the evaluated value exactly wherever the input
/// evaluates without error, so no reassociation or expansion is done.
/// The result is a fixed point: `simplify(simplify(e)) == simplify(e)`.
pub fn simplify(e: &Expr) -> Expr {
    let node = match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Neg(a) => Expr::neg(simplify(a)),
        Expr::Abs(a) => Expr::abs(simplify(a)),
        Expr::Add(a, b) => Expr::add(simplify(a), simplify(b)),
        Expr::Sub(a, b) => Expr::sub(simplify(a), simplify(b)),
        Expr::Mul(a, b) => Expr::mul(simplify(a), simplify(b)),
        Expr::Div(a, b) => Expr::div(simplify(a), simplify(b)),
        Expr::Pow(a, n) => Expr::pow(simplify(a), *n),
        Expr::Piecewise(pw) => Expr::Piecewise(Piecewise {
            branches: pw
                .branches
                .iter()
                .map(|(g, body)| {
                    (
                        Guard {
                            lhs: simplify(&g.lhs),
                            op: g.op,
                            bound: g.bound,
                        },
                        simplify(body),
                    )
                })
                .collect(),
            otherwise: Box::new(simplify(&pw.otherwise)),
        }),
    };
    let mut node = node;
    while let Some(next) = rewrite(&node) {
        node = next;
    }
    node
}

fn is(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Const(c) if *c == v)
}

fn finite(v: f64) -> Option<Expr> {
    v.is_finite().then_some(Expr::Const(v))
}

/// One local rewrite at the root, assuming children are already simplified.
fn rewrite(e: &Expr) -> Option<Expr> {
    use Expr::*;
    match e {
        Neg(a) => match a.as_ref() {
            Const(c) => Some(Const(-c)),
            Neg(inner) => Some((**inner).clone()),
            _ => None,
        },
        Abs(a) => match a.as_ref() {
            Const(c) => Some(Const(c.abs())),
            _ => None,
        },
        Add(a, b) => match (a.as_ref(), b.as_ref()) {
            (Const(x), Const(y)) => finite(x + y),
            _ if is(a, 0.0) => Some((**b).clone()),
            _ if is(b, 0.0) => Some((**a).clone()),
            _ => None,
        },
        Sub(a, b) => match (a.as_ref(), b.as_ref()) {
            (Const(x), Const(y)) => finite(x - y),
            _ if is(b, 0.0) => Some((**a).clone()),
            _ if is(a, 0.0) => Some(Expr::neg((**b).clone())),
            _ => None,
        },
        Mul(a, b) => match (a.as_ref(), b.as_ref()) {
            (Const(x), Const(y)) => finite(x * y),
            _ if is(a, 0.0) || is(b, 0.0) => Some(Const(0.0)),
            _ if is(a, 1.0) => Some((**b).clone()),
            _ if is(b, 1.0) => Some((**a).clone()),
            _ if is(a, -1.0) => Some(Expr::neg((**b).clone())),
            _ if is(b, -1.0) => Some(Expr::neg((**a).clone())),
            _ => None,
        },
        Div(a, b) => match (a.as_ref(), b.as_ref()) {
            (Const(x), Const(y)) if *y != 0.0 => finite(x / y),
            _ if is(b, 1.0) => Some((**a).clone()),
            _ => None,
        },
        Pow(a, n) => match (a.as_ref(), *n) {
            (_, 0) => Some(Const(1.0)),
            (_, 1) => Some((**a).clone()),
            (Const(c), n) => finite(powi(*c, n)),
            _ => None,
        },
        Piecewise(pw) => resolve_constant_guards(pw),
        Const(_) | Var(_) => None,
    }
}

/// Drops branches whose guard is constant-false and cuts the list at the
/// first constant-true guard.
fn resolve_constant_guards(pw: &Piecewise) -> Option<Expr> {
    let decided = |g: &Guard| match g.lhs {
        Expr::Const(c) => Some(g.op.holds(c, g.bound)),
        _ => None,
    };
    if pw.branches.iter().all(|(g, _)| decided(g).is_none()) {
        return None;
    }
    let mut kept = Vec::new();
    let mut otherwise = (*pw.otherwise).clone();
    for (g, body) in &pw.branches {
        match decided(g) {
            Some(false) => {}
            Some(true) => {
                otherwise = body.clone();
                break;
            }
            None => kept.push((g.clone(), body.clone())),
        }
    }
    Some(if kept.is_empty() {
        otherwise
    } else {
        Expr::Piecewise(Piecewise {
            branches: kept,
            otherwise: Box::new(otherwise),
        })
    })
}

/// Symbolic derivative with respect to `var`, simplified.
///
/// `abs(u)` differentiates to `piecewise { u < 0 => -u'; else => u' }`, so
/// the value at `u = 0` comes from the else-branch; callers treat the roots of
/// `u` as breakpoints and never rely on that value. Piecewise nodes are
/// differentiated branch by branch under the same guards.
pub fn differentiate(e: &Expr, var: &str) -> Expr {
    simplify(&derive(e, var))
}

fn derive(e: &Expr, var: &str) -> Expr {
    match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var(v) => Expr::Const(if v == var { 1.0 } else { 0.0 }),
        Expr::Neg(u) => Expr::neg(derive(u, var)),
        Expr::Abs(u) => {
            let du = derive(u, var);
            Expr::piecewise(
                vec![(
                    Guard {
                        lhs: (**u).clone(),
                        op: CmpOp::Lt,
                        bound: 0.0,
                    },
                    Expr::neg(du.clone()),
                )],
                du,
            )
        }
        Expr::Add(u, v) => Expr::add(derive(u, var), derive(v, var)),
        Expr::Sub(u, v) => Expr::sub(derive(u, var), derive(v, var)),
        Expr::Mul(u, v) => Expr::add(
            Expr::mul(derive(u, var), (**v).clone()),
            Expr::mul((**u).clone(), derive(v, var)),
        ),
        Expr::Div(u, v) => Expr::div(
            Expr::sub(
                Expr::mul(derive(u, var), (**v).clone()),
                Expr::mul((**u).clone(), derive(v, var)),
            ),
            Expr::pow((**v).clone(), 2),
        ),
        Expr::Pow(_, 0) => Expr::Const(0.0),
        Expr::Pow(u, n) => Expr::mul(
            Expr::mul(Expr::Const(f64::from(*n)), Expr::pow((**u).clone(), n - 1)),
            derive(u, var),
        ),
        Expr::Piecewise(pw) => Expr::Piecewise(Piecewise {
            branches: pw
                .branches
                .iter()
                .map(|(g, body)| (g.clone(), derive(body, var)))
                .collect(),
            otherwise: Box::new(derive(&pw.otherwise, var)),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parser::parse_expr;

    fn p(src: &str) -> Expr {
        parse_expr(src, "x").unwrap()
    }

    #[test]
    fn identity_elements() {
        let x = || Expr::var("x");
        assert_eq!(simplify(&Expr::add(Expr::Const(0.0), x())), x());
        assert_eq!(
            simplify(&Expr::mul(
                Expr::Const(1.0),
                Expr::mul(Expr::Const(3.0), x())
            )),
            Expr::mul(Expr::Const(3.0), x())
        );
        assert_eq!(simplify(&Expr::pow(x(), 0)), Expr::Const(1.0));
        assert_eq!(simplify(&p("0 * abs(x) + (2 + 3) * x")), p("5 * x"));
    }

    #[test]
    fn constant_guards_resolve() {
        let e = p("piecewise { 1 < 0 => x; 2 > 1 => 3 * x; else => 7 }");
        assert_eq!(simplify(&e), p("3 * x"));
    }

    #[test]
    fn power_rule() {
        assert_eq!(differentiate(&p("x^2"), "x"), p("2 * x"));
        assert_eq!(differentiate(&p("x^1"), "x"), Expr::Const(1.0));
        assert_eq!(differentiate(&p("x^0"), "x"), Expr::Const(0.0));
    }

    #[test]
    fn tent_derivative_sign() {
        let d = differentiate(&p("-2*abs(x) + 1"), "x");
        assert_eq!(d.eval(0.5).unwrap(), -2.0);
        assert_eq!(d.eval(-0.5).unwrap(), 2.0);
    }

    #[test]
    fn logistic_derivative_matches_closed_form() {
        // d/dx 3x(1-x) = 3 - 6x
        let d = differentiate(&p("3*x*(1 - x)"), "x");
        for i in 0..=20 {
            let x = -1.0 + 0.15 * f64::from(i);
            assert!((d.eval(x).unwrap() - (3.0 - 6.0 * x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn quotient_rule() {
        let d = differentiate(&p("x / (x^2 + 1)"), "x");
        for x in [-2.0, -0.3, 0.0, 0.7, 3.0_f64] {
            let want = (1.0 - x * x) / (x * x + 1.0).powi(2);
            assert!((d.eval(x).unwrap() - want).abs() <= 1e-14);
        }
    }

    #[test]
    fn piecewise_differentiates_branchwise() {
        let d = differentiate(
            &p("piecewise { x < 0 => 2*x; x < 1 => x^2; else => 0.5*x + 0.5 }"),
            "x",
        );
        assert_eq!(d.eval(-1.0).unwrap(), 2.0);
        assert_eq!(d.eval(0.25).unwrap(), 0.5);
        assert_eq!(d.eval(2.0).unwrap(), 0.5);
    }

    #[test]
    fn other_variables_are_constants() {
        assert_eq!(derive(&Expr::var("y"), "x"), Expr::Const(0.0));
    }
}

//! Canonical source rendering. Output parses back to the same tree.

use super::ast::{Expr, Guard};

// Binding levels, loosest first.
const EXPR: u8 = 0;
const SUM: u8 = 1;
const PROD: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

pub fn pretty_print(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, EXPR, &mut out);
    out
}

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Piecewise(_) => EXPR,
        Expr::Add(..) | Expr::Sub(..) => SUM,
        Expr::Mul(..) | Expr::Div(..) => PROD,
        Expr::Neg(_) => UNARY,
        Expr::Const(c) if c.is_sign_negative() => UNARY,
        Expr::Pow(..) => POWER,
        Expr::Const(_) | Expr::Var(_) | Expr::Abs(_) => ATOM,
    }
}

fn write_expr(e: &Expr, min_level: u8, out: &mut String) {
    if level(e) < min_level {
        out.push('(');
        write_expr(e, EXPR, out);
        out.push(')');
        return;
    }
    match e {
        Expr::Const(c) => write_number(*c, out),
        Expr::Var(name) => out.push_str(name),
        Expr::Neg(inner) => {
            out.push('-');
            write_expr(inner, UNARY, out);
        }
        Expr::Abs(inner) => {
            out.push_str("abs(");
            write_expr(inner, EXPR, out);
            out.push(')');
        }
        Expr::Add(a, b) => binary(a, " + ", b, SUM, out),
        Expr::Sub(a, b) => binary(a, " - ", b, SUM, out),
        Expr::Mul(a, b) => binary(a, " * ", b, PROD, out),
        Expr::Div(a, b) => binary(a, " / ", b, PROD, out),
        Expr::Pow(base, n) => {
            write_expr(base, ATOM, out);
            out.push('^');
            out.push_str(&n.to_string());
        }
        Expr::Piecewise(pw) => {
            out.push_str("piecewise { ");
            for (guard, body) in &pw.branches {
                write_guard(guard, out);
                out.push_str(" => ");
                write_expr(body, SUM, out);
                out.push_str("; ");
            }
            out.push_str("else => ");
            write_expr(&pw.otherwise, SUM, out);
            out.push_str(" }");
        }
    }
}

fn binary(a: &Expr, op: &str, b: &Expr, lvl: u8, out: &mut String) {
    write_expr(a, lvl, out);
    out.push_str(op);
    write_expr(b, lvl + 1, out);
}

fn write_guard(g: &Guard, out: &mut String) {
    write_expr(&g.lhs, SUM, out);
    out.push(' ');
    out.push_str(g.op.symbol());
    out.push(' ');
    write_number(g.bound, out);
}

fn write_number(c: f64, out: &mut String) {
    if c.is_sign_negative() {
        out.push('-');
    }
    let m = c.abs();
    if m.is_infinite() {
        // Lexes as a number and parses back to infinity.
        out.push_str("1e999");
    } else {
        // `Display` for f64 is the shortest round-tripping decimal, never in
        // exponent form.
        out.push_str(&m.to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::ast::CmpOp;
    use crate::dsl::parser::parse_expr;

    #[test]
    fn basic_forms() {
        let x = || Expr::var("x");
        assert_eq!(pretty_print(&Expr::mul(Expr::Const(2.0), x())), "2 * x");
        assert_eq!(pretty_print(&Expr::pow(x(), 2)), "x^2");
        assert_eq!(pretty_print(&Expr::pow(Expr::neg(x()), 2)), "(-x)^2");
        assert_eq!(
            pretty_print(&Expr::sub(x(), Expr::sub(x(), Expr::Const(1.0)))),
            "x - (x - 1)"
        );
        assert_eq!(pretty_print(&Expr::Const(1e-7)), "0.0000001");
    }

    #[test]
    fn three_branch_block() {
        let x = || Expr::var("x");
        let e = Expr::piecewise(
            vec![
                (
                    Guard::on_var("x", CmpOp::Lt, 0.0),
                    Expr::mul(Expr::Const(2.0), x()),
                ),
                (Guard::on_var("x", CmpOp::Lt, 1.0), Expr::pow(x(), 2)),
            ],
            Expr::add(Expr::mul(Expr::Const(0.5), x()), Expr::Const(0.5)),
        );
        let text = pretty_print(&e);
        assert_eq!(
            text,
            "piecewise { x < 0 => 2 * x; x < 1 => x^2; else => 0.5 * x + 0.5 }"
        );
        assert_eq!(parse_expr(&text, "x").unwrap(), e);
    }

    #[test]
    fn nested_piecewise_is_parenthesized() {
        let x = || Expr::var("x");
        let inner = Expr::piecewise(
            vec![(Guard::on_var("x", CmpOp::Ge, -2.0), x())],
            Expr::Const(0.0),
        );
        let e = Expr::add(Expr::Const(1.0), inner.clone());
        let text = pretty_print(&e);
        assert_eq!(text, "1 + (piecewise { x >= -2 => x; else => 0 })");
        assert_eq!(parse_expr(&text, "x").unwrap(), e);
        let outer = Expr::piecewise(
            vec![(Guard::on_var("x", CmpOp::Lt, 0.0), inner.clone())],
            Expr::abs(inner),
        );
        assert_eq!(parse_expr(&pretty_print(&outer), "x").unwrap(), outer);
    }
}

use std::fmt;

use thiserror::Error;

use crate::dd::Dd;

/// Comparison used by piecewise guards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    pub(crate) fn holds_dd(self, lhs: Dd, rhs: f64) -> bool {
        use std::cmp::Ordering::*;
        matches!(
            (self, lhs.cmp_f64(rhs)),
            (CmpOp::Lt, Some(Less))
                | (CmpOp::Le, Some(Less | Equal))
                | (CmpOp::Gt, Some(Greater))
                | (CmpOp::Ge, Some(Greater | Equal))
        )
    }
}

/// `lhs <op> bound`. Parsed maps usually compare the bare variable; derived
/// expressions (the derivative of `abs(u)`) compare `u` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    pub lhs: Expr,
    pub op: CmpOp,
    pub bound: f64,
}

impl Guard {
    pub fn on_var(var: &str, op: CmpOp, bound: f64) -> Self {
        Guard {
            lhs: Expr::var(var),
            op,
            bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise {
    pub branches: Vec<(Guard, Expr)>,
    pub otherwise: Box<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer powers only, so the derivative stays closed-form.
    Pow(Box<Expr>, u32),
    Piecewise(Piecewise),
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_string())
    }

    pub fn neg(e: Expr) -> Self {
        Expr::Neg(Box::new(e))
    }

    pub fn abs(e: Expr) -> Self {
        Expr::Abs(Box::new(e))
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(base: Expr, exp: u32) -> Self {
        Expr::Pow(Box::new(base), exp)
    }

    pub fn piecewise(branches: Vec<(Guard, Expr)>, otherwise: Expr) -> Self {
        assert!(!branches.is_empty(), "piecewise needs a guarded branch");
        Expr::Piecewise(Piecewise {
            branches,
            otherwise: Box::new(otherwise),
        })
    }

    /// Evaluates the expression with every variable bound to `x`.
    ///
    /// Piecewise nodes take the first branch whose guard holds and fall
    /// through to the else-branch otherwise.
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(_) => x,
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Abs(e) => e.eval(x)?.abs(),
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let num = a.eval(x)?;
                let den = b.eval(x)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero { x });
                }
                num / den
            }
            Expr::Pow(b, n) => powi(b.eval(x)?, *n),
            Expr::Piecewise(pw) => {
                for (guard, body) in &pw.branches {
                    if guard.op.holds(guard.lhs.eval(x)?, guard.bound) {
                        return body.eval(x);
                    }
                }
                pw.otherwise.eval(x)?
            }
        })
    }

    /// [`Expr::eval`] in double-double arithmetic.
    pub(crate) fn eval_dd(&self, x: Dd) -> Result<Dd, EvalError> {
        Ok(match self {
            Expr::Const(c) => Dd::from(*c),
            Expr::Var(_) => x,
            Expr::Neg(e) => -e.eval_dd(x)?,
            Expr::Abs(e) => e.eval_dd(x)?.abs(),
            Expr::Add(a, b) => a.eval_dd(x)? + b.eval_dd(x)?,
            Expr::Sub(a, b) => a.eval_dd(x)? - b.eval_dd(x)?,
            Expr::Mul(a, b) => a.eval_dd(x)? * b.eval_dd(x)?,
            Expr::Div(a, b) => {
                let num = a.eval_dd(x)?;
                let den = b.eval_dd(x)?;
                if den.is_zero() {
                    return Err(EvalError::DivisionByZero { x: x.to_f64() });
                }
                num / den
            }
            Expr::Pow(b, n) => b.eval_dd(x)?.powi(*n),
            Expr::Piecewise(pw) => {
                for (guard, body) in &pw.branches {
                    if guard.op.holds_dd(guard.lhs.eval_dd(x)?, guard.bound) {
                        return body.eval_dd(x);
                    }
                }
                pw.otherwise.eval_dd(x)?
            }
        })
    }

    /// Calls `visit` on this node and every descendant, guard operands included.
    pub fn walk(&self, visit: &mut impl FnMut(&Expr)) {
        visit(self);
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Neg(e) | Expr::Abs(e) | Expr::Pow(e, _) => e.walk(visit),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
            Expr::Piecewise(pw) => {
                for (g, body) in &pw.branches {
                    g.lhs.walk(visit);
                    body.walk(visit);
                }
                pw.otherwise.walk(visit);
            }
        }
    }

    /// Collects every guard in the tree.
    pub fn guards(&self) -> Vec<&Guard> {
        let mut out = Vec::new();
        collect_guards(self, &mut out);
        out
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(e) | Expr::Abs(e) | Expr::Pow(e, _) => 1 + e.depth(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Expr::Piecewise(pw) => {
                let inner = pw
                    .branches
                    .iter()
                    .map(|(g, b)| g.lhs.depth().max(b.depth()))
                    .max()
                    .unwrap_or(0);
                1 + inner.max(pw.otherwise.depth())
            }
        }
    }
}

fn collect_guards<'a>(e: &'a Expr, out: &mut Vec<&'a Guard>) {
    match e {
        Expr::Const(_) | Expr::Var(_) => {}
        Expr::Neg(e) | Expr::Abs(e) | Expr::Pow(e, _) => collect_guards(e, out),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            collect_guards(a, out);
            collect_guards(b, out);
        }
        Expr::Piecewise(pw) => {
            for (g, body) in &pw.branches {
                out.push(g);
                collect_guards(&g.lhs, out);
                collect_guards(body, out);
            }
            collect_guards(&pw.otherwise, out);
        }
    }
}

/// Integer power shared by evaluation and constant folding so both agree bit-for-bit.
pub(crate) fn powi(base: f64, exp: u32) -> f64 {
    match i32::try_from(exp) {
        Ok(e) => base.powi(e),
        Err(_) => base.powf(f64::from(exp)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::pretty_print(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_branch() -> Expr {
        let x = || Expr::var("x");
        Expr::piecewise(
            vec![
                (
                    Guard::on_var("x", CmpOp::Lt, 0.0),
                    Expr::mul(Expr::Const(2.0), x()),
                ),
                (Guard::on_var("x", CmpOp::Lt, 1.0), Expr::pow(x(), 2)),
            ],
            Expr::add(Expr::mul(Expr::Const(0.5), x()), Expr::Const(0.5)),
        )
    }

    #[test]
    fn piecewise_branches() {
        let e = three_branch();
        assert_eq!(e.eval(0.5).unwrap(), 0.25);
        assert_eq!(e.eval(1.0).unwrap(), 1.0);
        assert_eq!(e.eval(-1.0).unwrap(), -2.0);
    }

    #[test]
    fn tent_at_origin() {
        let tent = Expr::add(
            Expr::mul(Expr::neg(Expr::Const(2.0)), Expr::abs(Expr::var("x"))),
            Expr::Const(1.0),
        );
        assert_eq!(tent.eval(0.0).unwrap(), 1.0);
        assert_eq!(tent.eval(-1.0).unwrap(), -1.0);
    }

    #[test]
    fn first_matching_guard_wins() {
        let e = Expr::piecewise(
            vec![
                (Guard::on_var("x", CmpOp::Lt, 1.0), Expr::Const(10.0)),
                (Guard::on_var("x", CmpOp::Lt, 2.0), Expr::Const(20.0)),
            ],
            Expr::Const(30.0),
        );
        assert_eq!(e.eval(0.5).unwrap(), 10.0);
        assert_eq!(e.eval(1.5).unwrap(), 20.0);
        assert_eq!(e.eval(2.5).unwrap(), 30.0);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = Expr::div(Expr::Const(1.0), Expr::var("x"));
        assert_eq!(e.eval(0.0), Err(EvalError::DivisionByZero { x: 0.0 }));
        assert_eq!(e.eval(4.0).unwrap(), 0.25);
    }

    #[test]
    fn zeroth_power_is_one() {
        assert_eq!(Expr::pow(Expr::var("x"), 0).eval(0.0).unwrap(), 1.0);
    }
}

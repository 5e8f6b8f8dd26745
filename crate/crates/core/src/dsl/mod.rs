//! A small language for scalar maps.
//!
//! ```text
//! # Example: piecewise map with kinks at 0 and 1
//! map f(x) = piecewise { x < 0 => 2*x; x < 1 => x^2; else => 0.5*x + 0.5 }
//! ```
//!
//! Maps are built from numbers, the map variable, `+ - * /`, integer powers,
//! `abs(...)` and guarded `piecewise` blocks. Every map is differentiated
//! symbolically at parse time and carries the candidate set of points where
//! it may fail to be differentiable (guard boundaries and kinks of `abs`).

mod ast;
mod calculus;
mod lexer;
mod parser;
mod print;

pub use ast::{CmpOp, EvalError, Expr, Guard, Piecewise};
pub use calculus::{differentiate, simplify};
pub use lexer::{tokenize, LexError, Position, Token, TokenKind};
pub use parser::{parse_expr, DslError, ParseError};
pub use print::pretty_print;

/// Breakpoints closer than this are merged.
pub const BREAKPOINT_DEDUP_TOL: f64 = 1e-12;

/// Width to which sign-change roots of `abs` arguments are bisected.
pub const ROOT_TOL: f64 = 1e-12;

/// Outermost interval scanned for kinks when a map is parsed.
pub const DEFAULT_SCAN: (f64, f64) = (-1e6, 1e6);

const SCAN_GRID: usize = 4096;

/// A parsed map `name(variable) = body`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDefinition {
    pub name: String,
    pub variable: String,
    pub body: Expr,
    pub derivative: Option<Expr>,
    /// Sorted, deduplicated candidate non-differentiability points.
    pub breakpoints: Vec<f64>,
}

impl MapDefinition {
    pub fn new(name: &str, variable: &str, body: Expr) -> Self {
        let derivative = Some(differentiate(&body, variable));
        let mut def = MapDefinition {
            name: name.to_string(),
            variable: variable.to_string(),
            body,
            derivative,
            breakpoints: Vec::new(),
        };
        def.breakpoints = default_breakpoints(&def);
        def
    }

    /// Renders the definition back to source.
    pub fn to_source(&self) -> String {
        format!(
            "map {}({}) = {}",
            self.name,
            self.variable,
            pretty_print(&self.body)
        )
    }
}

/// Parses a `map` definition, derives it and extracts its breakpoints.
pub fn parse_map(source: &str) -> Result<MapDefinition, DslError> {
    let parsed = parser::parse_map_source(source)?;
    Ok(MapDefinition::new(
        &parsed.name,
        &parsed.variable,
        parsed.body,
    ))
}

/// Kinks over [`DEFAULT_SCAN`], scanned on nested intervals `[-10^j, 10^j]`
/// so that closely spaced roots near the origin are still separated.
fn default_breakpoints(def: &MapDefinition) -> Vec<f64> {
    let mut all = Vec::new();
    let (lo, hi) = DEFAULT_SCAN;
    let mut half = 1.0;
    while half <= hi.abs().max(lo.abs()) {
        all.extend(nondifferentiable_points(
            def,
            (lo.max(-half), hi.min(half)),
            SCAN_GRID,
        ));
        half *= 10.0;
    }
    dedup_sorted(all)
}

/// Candidate non-differentiability points of `def` inside `[lo, hi]`.
///
/// The result is the union of the bounds of guards on the bare variable that
/// fall inside the interval and the sign-change roots of every `abs` argument
/// (and of every non-trivial guard operand), located on a uniform grid of
/// `grid_n` points and bisected to [`ROOT_TOL`].
pub fn nondifferentiable_points(
    def: &MapDefinition,
    (lo, hi): (f64, f64),
    grid_n: usize,
) -> Vec<f64> {
    assert!(lo < hi, "empty interval");
    assert!(grid_n >= 2, "grid needs at least two points");

    let mut out = Vec::new();
    let mut kink_sources: Vec<(Expr, f64)> = Vec::new();
    for g in def.body.guards() {
        if matches!(g.lhs, Expr::Var(_)) {
            if (lo..=hi).contains(&g.bound) {
                out.push(g.bound);
            }
        } else {
            kink_sources.push((g.lhs.clone(), g.bound));
        }
    }
    def.body.walk(&mut |e| {
        if let Expr::Abs(arg) = e {
            kink_sources.push(((**arg).clone(), 0.0));
        }
    });

    let step = (hi - lo) / (grid_n - 1) as f64;
    let grid = |i: usize| {
        if i == grid_n - 1 {
            hi
        } else {
            lo + step * i as f64
        }
    };
    for (expr, level) in &kink_sources {
        let h = |x: f64| expr.eval(x).map(|v| v - level).unwrap_or(f64::NAN);
        let mut prev = (grid(0), h(grid(0)));
        if prev.1 == 0.0 {
            out.push(prev.0);
        }
        for i in 1..grid_n {
            let x = grid(i);
            let v = h(x);
            if v == 0.0 {
                out.push(x);
            } else if prev.1 != 0.0
                && v.is_finite()
                && prev.1.is_finite()
                && (v < 0.0) != (prev.1 < 0.0)
            {
                out.push(bisect_sign_change(&h, prev.0, x));
            }
            prev = (x, v);
        }
    }
    dedup_sorted(out)
}

fn bisect_sign_change(h: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ha = h(a);
    while b - a > ROOT_TOL {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let hm = h(m);
        if hm == 0.0 {
            return m;
        }
        if (hm < 0.0) == (ha < 0.0) {
            a = m;
            ha = hm;
        } else {
            b = m;
        }
    }
    let m = 0.5 * (a + b);
    // Prefer a short decimal that is an exact root.
    (0..=12)
        .map(|d| {
            let scale = 10f64.powi(d);
            (m * scale).round() / scale
        })
        .find(|&c| (c - m).abs() <= ROOT_TOL && h(c) == 0.0)
        .unwrap_or(m)
}

pub(crate) fn dedup_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.retain(|x| x.is_finite());
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&last) if (x - last).abs() <= BREAKPOINT_DEDUP_TOL => {}
            _ => out.push(x),
        }
    }
    out
}

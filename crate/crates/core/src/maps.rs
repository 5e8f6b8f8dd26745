//! Evaluatable maps: built-in families, DSL maps, k-fold iterates and
//! linear maps on R^m.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::dd::Dd;
use crate::dsl::{dedup_sorted, EvalError, Expr, MapDefinition};

/// Proximity used by iterated maps to flag intermediate iterates that land on
/// a breakpoint of the base map.
pub const COMPOSE_PROXIMITY: f64 = 1e-9;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("unknown map family `{0}`")]
    UnknownFamily(String),
    #[error("family `{family}` needs parameter `{param}`")]
    MissingParameter { family: String, param: String },
    #[error("family `{family}` has no parameter `{param}`")]
    UnexpectedParameter { family: String, param: String },
    #[error("malformed family spec `{0}`; expected name:key=value,...")]
    Malformed(String),
}

/// Built-in families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyKind {
    /// `a x (1 - x)`
    Logistic,
    /// `a |x| + b`
    TentAb,
    /// `2x` for x < 0, `x^2` on [0, 1), `0.5x + 0.5` for x >= 1.
    PiecewiseExample,
    /// `c x + d`
    Affine,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [
        FamilyKind::Logistic,
        FamilyKind::TentAb,
        FamilyKind::PiecewiseExample,
        FamilyKind::Affine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Logistic => "logistic",
            FamilyKind::TentAb => "tent_ab",
            FamilyKind::PiecewiseExample => "piecewise_example",
            FamilyKind::Affine => "affine",
        }
    }

    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            FamilyKind::Logistic => &["a"],
            FamilyKind::TentAb => &["a", "b"],
            FamilyKind::PiecewiseExample => &[],
            FamilyKind::Affine => &["c", "d"],
        }
    }
}

impl FromStr for FamilyKind {
    type Err = MapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| MapError::UnknownFamily(s.to_string()))
    }
}

/// A family name with named parameter values. Parameters are validated by
/// [`builtin`], so a partially specified family can be completed later (as a
/// parameter sweep does).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamFamily {
    pub kind: FamilyKind,
    pub params: BTreeMap<String, f64>,
}

impl ParamFamily {
    pub fn new(kind: FamilyKind) -> Self {
        ParamFamily {
            kind,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn logistic(a: f64) -> Self {
        Self::new(FamilyKind::Logistic).with("a", a)
    }

    pub fn tent(a: f64, b: f64) -> Self {
        Self::new(FamilyKind::TentAb).with("a", a).with("b", b)
    }

    pub fn piecewise_example() -> Self {
        Self::new(FamilyKind::PiecewiseExample)
    }

    pub fn affine(c: f64, d: f64) -> Self {
        Self::new(FamilyKind::Affine).with("c", c).with("d", d)
    }

    fn get(&self, name: &str) -> Result<f64, MapError> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| MapError::MissingParameter {
                family: self.kind.name().to_string(),
                param: name.to_string(),
            })
    }

    /// Logistic maps with `a` outside `[0, 4]` do not map [0, 1] into itself.
    pub fn leaves_unit_interval(&self) -> bool {
        match (self.kind, self.params.get("a")) {
            (FamilyKind::Logistic, Some(&a)) => !((0.0..=4.0).contains(&a)),
            _ => false,
        }
    }
}

/// `name[:key=value,...]`, e.g. `tent_ab:a=-2,b=1`.
impl FromStr for ParamFamily {
    type Err = MapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut fam = ParamFamily::new(name.trim().parse()?);
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| MapError::Malformed(s.to_string()))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| MapError::Malformed(s.to_string()))?;
            fam.params.insert(k.trim().to_string(), v);
        }
        Ok(fam)
    }
}

impl fmt::Display for ParamFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            write!(f, "{sep}{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Clone)]
enum Repr {
    Logistic {
        a: f64,
    },
    Tent {
        a: f64,
        b: f64,
    },
    PiecewiseExample,
    Affine {
        c: f64,
        d: f64,
    },
    Dsl {
        body: Arc<Expr>,
        deriv: Option<Arc<Expr>>,
    },
    Closure {
        eval: ScalarFn,
        deriv: Option<ScalarFn>,
    },
    Iterate {
        base: Arc<ScalarMap>,
        k: usize,
    },
}

/// A map of the real line with an optional derivative and the set of points
/// where that derivative may not exist.
#[derive(Clone)]
pub struct ScalarMap {
    label: String,
    repr: Repr,
    breakpoints: Vec<f64>,
    notes: Vec<String>,
}

impl fmt::Debug for ScalarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarMap")
            .field("label", &self.label)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

/// Instantiates a built-in family with its analytic derivative and exact
/// breakpoint set.
pub fn builtin(family: &ParamFamily) -> Result<ScalarMap, MapError> {
    let allowed = family.kind.parameters();
    if let Some(extra) = family
        .params
        .keys()
        .find(|k| !allowed.contains(&k.as_str()))
    {
        return Err(MapError::UnexpectedParameter {
            family: family.kind.name().to_string(),
            param: extra.clone(),
        });
    }
    let (repr, breakpoints) = match family.kind {
        FamilyKind::Logistic => (
            Repr::Logistic {
                a: family.get("a")?,
            },
            vec![],
        ),
        FamilyKind::TentAb => {
            let a = family.get("a")?;
            let b = family.get("b")?;
            let bps = if a != 0.0 { vec![0.0] } else { vec![] };
            (Repr::Tent { a, b }, bps)
        }
        FamilyKind::PiecewiseExample => (Repr::PiecewiseExample, vec![0.0, 1.0]),
        FamilyKind::Affine => (
            Repr::Affine {
                c: family.get("c")?,
                d: family.get("d")?,
            },
            vec![],
        ),
    };
    let mut notes = Vec::new();
    if family.leaves_unit_interval() {
        notes.push(format!(
            "{family}: a is outside [0, 4], so [0, 1] is not invariant"
        ));
    }
    Ok(ScalarMap {
        label: family.to_string(),
        repr,
        breakpoints,
        notes,
    })
}

/// Wraps a parsed definition; the derivative and breakpoints come from the
/// definition.
pub fn from_dsl(def: &MapDefinition) -> ScalarMap {
    ScalarMap {
        label: def.name.clone(),
        repr: Repr::Dsl {
            body: Arc::new(def.body.clone()),
            deriv: def.derivative.clone().map(Arc::new),
        },
        breakpoints: def.breakpoints.clone(),
        notes: Vec::new(),
    }
}

/// The k-fold iterate `f^k`.
///
/// Breakpoint preimages are not enumerated; [`ScalarMap::near_breakpoint`]
/// instead checks every intermediate iterate against the breakpoints of `f`.
pub fn compose_k(map: &ScalarMap, k: usize) -> ScalarMap {
    assert!(k >= 1, "k must be at least 1");
    if k == 1 {
        return map.clone();
    }
    ScalarMap {
        label: format!("{}^{}", map.label, k),
        repr: Repr::Iterate {
            base: Arc::new(map.clone()),
            k,
        },
        breakpoints: Vec::new(),
        notes: map.notes.clone(),
    }
}

impl ScalarMap {
    /// A map from closures. `breakpoints` need not be sorted.
    pub fn from_fn(
        label: &str,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
        breakpoints: Vec<f64>,
    ) -> Self {
        ScalarMap {
            label: label.to_string(),
            repr: Repr::Closure {
                eval: Arc::new(eval),
                deriv: deriv.map(Arc::from),
            },
            breakpoints: dedup_sorted(breakpoints),
            notes: Vec::new(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Caveats attached at construction (e.g. parameters outside the usual
    /// domain of a family).
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Breakpoints of this map. Empty for iterates, whose breakpoints are
    /// preimages of the base map's and are detected on demand.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `Some(k)` for a k-fold iterate.
    pub fn iterate_order(&self) -> Option<usize> {
        match &self.repr {
            Repr::Iterate { k, .. } => Some(*k),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        Ok(match &self.repr {
            Repr::Logistic { a } => (a * x) * (1.0 - x),
            Repr::Tent { a, b } => a * x.abs() + b,
            Repr::PiecewiseExample => {
                if x < 0.0 {
                    2.0 * x
                } else if x < 1.0 {
                    x * x
                } else {
                    0.5 * x + 0.5
                }
            }
            Repr::Affine { c, d } => c * x + d,
            Repr::Dsl { body, .. } => body.eval(x)?,
            Repr::Closure { eval, .. } => eval(x),
            Repr::Iterate { base, k } => {
                let mut y = x;
                for _ in 0..*k {
                    y = base.eval(y)?;
                }
                y
            }
        })
    }

    /// The map in double-double arithmetic; `None` for closures.
    pub(crate) fn eval_dd(&self, x: Dd) -> Option<Result<Dd, EvalError>> {
        let one = Dd::from(1.0);
        Some(Ok(match &self.repr {
            Repr::Logistic { a } => (Dd::from(*a) * x) * (one - x),
            Repr::Tent { a, b } => Dd::from(*a) * x.abs() + Dd::from(*b),
            Repr::PiecewiseExample => {
                if x.cmp_f64(0.0) == Some(std::cmp::Ordering::Less) {
                    Dd::from(2.0) * x
                } else if x.cmp_f64(1.0) == Some(std::cmp::Ordering::Less) {
                    x * x
                } else {
                    Dd::from(0.5) * x + Dd::from(0.5)
                }
            }
            Repr::Affine { c, d } => Dd::from(*c) * x + Dd::from(*d),
            Repr::Dsl { body, .. } => return Some(body.eval_dd(x)),
            Repr::Closure { .. } => return None,
            Repr::Iterate { base, k } => {
                let mut y = x;
                for _ in 0..*k {
                    y = match base.eval_dd(y)? {
                        Ok(v) => v,
                        Err(e) => return Some(Err(e)),
                    };
                }
                y
            }
        }))
    }

    /// `|f(x) - f(y)| / |x - y|`, evaluated in double-double arithmetic when
    /// the map allows it so that rounding in `f` does not swamp close pairs.
    pub fn pair_quotient(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        match (self.eval_dd(Dd::from(x)), self.eval_dd(Dd::from(y))) {
            (Some(fx), Some(fy)) => {
                let num = (fx? - fy?).abs();
                Ok((num / (Dd::from(x) - Dd::from(y)).abs()).to_f64())
            }
            _ => Ok((self.eval(x)? - self.eval(y)?).abs() / (x - y).abs()),
        }
    }

    pub fn has_derivative(&self) -> bool {
        match &self.repr {
            Repr::Dsl { deriv, .. } => deriv.is_some(),
            Repr::Closure { deriv, .. } => deriv.is_some(),
            Repr::Iterate { base, .. } => base.has_derivative(),
            _ => true,
        }
    }

    /// `f'(x)`, or `None` when the map carries no derivative. At a
    /// breakpoint the value is one of the one-sided derivatives.
    pub fn deriv(&self, x: f64) -> Option<Result<f64, EvalError>> {
        Some(Ok(match &self.repr {
            Repr::Logistic { a } => a * (1.0 - 2.0 * x),
            Repr::Tent { a, .. } => {
                if x < 0.0 {
                    -a
                } else {
                    *a
                }
            }
            Repr::PiecewiseExample => {
                if x < 0.0 {
                    2.0
                } else if x < 1.0 {
                    2.0 * x
                } else {
                    0.5
                }
            }
            Repr::Affine { c, .. } => *c,
            Repr::Dsl { deriv, .. } => return deriv.as_ref().map(|d| d.eval(x)),
            Repr::Closure { deriv, .. } => return deriv.as_ref().map(|d| Ok(d(x))),
            Repr::Iterate { base, k } => {
                if !base.has_derivative() {
                    return None;
                }
                let chain = || -> Result<f64, EvalError> {
                    let mut y = x;
                    let mut product = 1.0;
                    for _ in 0..*k {
                        product *= base.deriv(y).expect("base has a derivative")?;
                        y = base.eval(y)?;
                    }
                    Ok(product)
                };
                return Some(chain());
            }
        }))
    }

    /// True when `x`, or for an iterate any intermediate point
    /// `x, f(x), ..., f^{k-1}(x)`, lies within `eta` of a breakpoint.
    pub fn near_breakpoint(&self, x: f64, eta: f64) -> bool {
        match &self.repr {
            Repr::Iterate { base, k } => {
                let mut y = x;
                for _ in 0..*k {
                    if base.near_breakpoint(y, eta) {
                        return true;
                    }
                    match base.eval(y) {
                        Ok(next) => y = next,
                        Err(_) => return false,
                    }
                }
                false
            }
            _ => {
                let i = self.breakpoints.partition_point(|&b| b < x - eta);
                self.breakpoints.get(i).is_some_and(|&b| b <= x + eta)
            }
        }
    }

    /// Whether a breakpoint (or, for an iterate, a breakpoint preimage) lies
    /// in `[a, b]`. For iterates the answer assumes the intermediate maps
    /// are monotone on the cell, which holds for cells of a fine grid.
    pub fn kink_between(&self, a: f64, b: f64) -> bool {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        match &self.repr {
            Repr::Iterate { base, k } => {
                let (mut ya, mut yb) = (lo, hi);
                for _ in 0..*k {
                    if base.kink_between(ya, yb) {
                        return true;
                    }
                    match (base.eval(ya), base.eval(yb)) {
                        (Ok(na), Ok(nb)) => (ya, yb) = (na, nb),
                        _ => return false,
                    }
                }
                false
            }
            _ => {
                let i = self.breakpoints.partition_point(|&bp| bp < lo);
                self.breakpoints.get(i).is_some_and(|&bp| bp <= hi)
            }
        }
    }
}

/// A map of R^m, measured in the Euclidean norm.
#[derive(Clone)]
pub struct VectorMap {
    dimension: usize,
    eval: VectorFn,
    label: String,
    diagonal: Option<Vec<f64>>,
}

impl fmt::Debug for VectorMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorMap")
            .field("label", &self.label)
            .field("dimension", &self.dimension)
            .finish_non_exhaustive()
    }
}

impl VectorMap {
    pub fn from_fn(
        label: &str,
        dimension: usize,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        assert!(dimension >= 1);
        VectorMap {
            dimension,
            eval: Arc::new(eval),
            label: label.to_string(),
            diagonal: None,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Diagonal entries, for maps built by [`linear_vector_map`].
    pub fn diagonal(&self) -> Option<&[f64]> {
        self.diagonal.as_deref()
    }

    pub fn eval(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dimension, "dimension mismatch");
        let out = (self.eval)(v);
        assert_eq!(out.len(), self.dimension, "map changed dimension");
        out
    }
}

/// `v -> diag(d) v`. In the Euclidean norm its Lipschitz constant is
/// `max |d_i|` and its reverse constant `min |d_i|`.
pub fn linear_vector_map(diagonal: &[f64]) -> VectorMap {
    assert!(!diagonal.is_empty(), "dimension must be at least 1");
    let d = diagonal.to_vec();
    let label = format!(
        "diag({})",
        d.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
    );
    let coeffs = d.clone();
    VectorMap {
        dimension: d.len(),
        eval: Arc::new(move |v: &[f64]| v.iter().zip(&coeffs).map(|(x, c)| c * x).collect()),
        label,
        diagonal: Some(d),
    }
}

pub fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

//! Empirical Lipschitz and reverse-Lipschitz constants, and the stability
//! tests built on them.
//!
//! For pairs `x != y` the quotient `|f(x) - f(y)| / |x - y|` is sampled on a
//! neighborhood. Its maximum `c_hat` can only underestimate the Lipschitz
//! constant and its minimum `r_hat` can only overestimate the reverse
//! constant, so sink evidence prefers the grid supremum of `|f'|` when a
//! derivative is available.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::dsl::EvalError;
use crate::maps::{compose_k, euclidean_distance, euclidean_norm, ScalarMap, VectorMap};
use crate::orbit::{cycle_residual, FixedPointCandidate};

pub const DEFAULT_PAIR_SAMPLES: usize = 2000;
pub const DEFAULT_GRID_N: usize = 512;
pub const DEFAULT_MARGIN: f64 = 0.05;
pub const DEFAULT_RADIUS: f64 = 1e-2;
/// Largest `|f(p) - p|` accepted for a fixed point or cycle.
pub const FIXED_POINT_RESIDUAL: f64 = 1e-8;
/// Grid points this close to a breakpoint are left out of `deriv_sup` and
/// `deriv_inf`.
pub const BREAKPOINT_PROXIMITY: f64 = 1e-9;
/// `|f'(p)|` this close to 1 is inconclusive for the smooth test.
pub const UNIT_BAND: f64 = 1e-12;

const MIN_RADIUS: f64 = 1e-14;
const DENSE_FACTOR: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LipschitzError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("neighborhood radius {0:e} is below 1e-14")]
    DegenerateNeighborhood(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{p} is not a fixed point: |f(p) - p| = {residual:e}")]
    NotAFixedPoint { p: f64, residual: f64 },
    #[error("not a periodic orbit: residual {residual:e}")]
    NotAPeriodicOrbit { residual: f64 },
    #[error("derivative unavailable at {at}")]
    DerivativeUnavailable { at: f64 },
    #[error("step quotient {quotient} >= 1 at iteration {iteration}; not a contraction")]
    NotAContraction { quotient: f64, iteration: usize },
    #[error("no convergence after {max_iter} iterations (last iterate {last})")]
    MaxIterExceeded { max_iter: usize, last: f64 },
}

/// A neighborhood `N_eps(center)` with sampling parameters. `P` is `f64`
/// for maps of the line and `Vec<f64>` for maps of R^m.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodSpec<P = f64> {
    pub center: P,
    pub radius: f64,
    pub pair_samples: usize,
    pub grid_n: usize,
    pub seed: u64,
}

impl<P> NeighborhoodSpec<P> {
    pub fn new(center: P, radius: f64) -> Self {
        NeighborhoodSpec {
            center,
            radius,
            pair_samples: DEFAULT_PAIR_SAMPLES,
            grid_n: DEFAULT_GRID_N,
            seed: 0,
        }
    }

    pub fn with_pairs(mut self, pair_samples: usize) -> Self {
        self.pair_samples = pair_samples;
        self
    }

    pub fn with_grid(mut self, grid_n: usize) -> Self {
        self.grid_n = grid_n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), LipschitzError> {
        if !(self.radius >= MIN_RADIUS) {
            return Err(LipschitzError::DegenerateNeighborhood(self.radius));
        }
        if self.pair_samples == 0 {
            return Err(LipschitzError::InvalidArgument(
                "pair_samples must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub c_hat: f64,
    pub r_hat: f64,
    pub deriv_sup: Option<f64>,
    pub deriv_inf: Option<f64>,
    pub pairs_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Sink,
    Source,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Sink => "Sink",
            Verdict::Source => "Source",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LipschitzTest,
    SmoothOracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::LipschitzTest => "lipschitz_test",
            Method::SmoothOracle => "smooth_oracle",
        }
    }
}

/// Which number a criterion was tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Grid supremum of `|f'|` (at least `c_hat`).
    DerivSup,
    /// Grid infimum of `|f'|` on a monotone neighborhood (at most `r_hat`).
    DerivInf,
    /// Sampled pair quotients only.
    PairQuotient,
    /// `|f'(p)|`, or the cycle multiplier.
    Derivative,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::DerivSup => "deriv_sup",
            Basis::DerivInf => "deriv_inf",
            Basis::PairQuotient => "pair_quotient",
            Basis::Derivative => "derivative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criterion {
    pub value: f64,
    pub basis: Basis,
}

/// Difference quotients on either side of `p`. `left` and `right` use a step
/// of `sqrt(eps) * max(1, |p|)`; the ranges cover adjacent grid pairs lying
/// entirely on that side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSidedSlopes {
    pub left: f64,
    pub right: f64,
    pub left_range: (f64, f64),
    pub right_range: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothCheck {
    /// `|f'(p)|`, or `|prod f'(y_i)|` for a cycle.
    pub abs_derivative: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub method: Method,
    pub margin: f64,
    pub evidence: Option<LipschitzEstimate>,
    pub c_criterion: Criterion,
    pub r_criterion: Criterion,
    /// Set when the neighborhood grid is monotone.
    pub monotone: Option<bool>,
    pub one_sided: Option<OneSidedSlopes>,
    /// The classical derivative test at the same point, where it applies.
    pub smooth: Option<SmoothCheck>,
}

fn check_margin(margin: f64) -> Result<(), LipschitzError> {
    if margin.is_finite() && (0.0..1.0).contains(&margin) {
        Ok(())
    } else {
        Err(LipschitzError::InvalidArgument(format!(
            "margin must lie in [0, 1), got {margin}"
        )))
    }
}

fn grid_points(center: f64, radius: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = (center - radius, center + radius);
    if n < 2 {
        return vec![center];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

/// The random pairs used by [`estimate_lipschitz`], in draw order. A draw
/// with `y == x` is replaced by a fresh `y`.
pub fn sample_pairs(nbhd: &NeighborhoodSpec<f64>) -> Vec<(f64, f64)> {
    let (lo, hi) = (nbhd.center - nbhd.radius, nbhd.center + nbhd.radius);
    let dist = Uniform::new_inclusive(lo, hi).expect("finite non-empty interval");
    let mut rng = ChaCha8Rng::seed_from_u64(nbhd.seed);
    (0..nbhd.pair_samples)
        .map(|_| {
            let x = dist.sample(&mut rng);
            let mut y = dist.sample(&mut rng);
            while y == x {
                y = dist.sample(&mut rng);
            }
            (x, y)
        })
        .collect()
}

fn quotient(fx: f64, fy: f64, x: f64, y: f64) -> f64 {
    (fx - fy).abs() / (x - y).abs()
}

struct Extremes {
    max: f64,
    min: f64,
}

impl Extremes {
    fn new() -> Self {
        Extremes {
            max: f64::NEG_INFINITY,
            min: f64::INFINITY,
        }
    }

    fn add(&mut self, q: f64) {
        if q.is_nan() {
            // A NaN quotient means the map itself misbehaves on the pair.
            self.max = f64::NAN;
            self.min = f64::NAN;
        } else if !self.max.is_nan() {
            self.max = self.max.max(q);
            self.min = self.min.min(q);
        }
    }

    fn range(&self) -> Option<(f64, f64)> {
        (self.min <= self.max).then_some((self.min, self.max))
    }
}

/// Estimates `c_hat`, `r_hat` and, when the map has a derivative, the grid
/// extremes of `|f'|` on `[center - radius, center + radius]`.
pub fn estimate_lipschitz(
    map: &ScalarMap,
    nbhd: &NeighborhoodSpec<f64>,
) -> Result<LipschitzEstimate, LipschitzError> {
    nbhd.validate()?;
    let mut q = Extremes::new();
    let pairs = sample_pairs(nbhd);
    for &(x, y) in &pairs {
        q.add(map.pair_quotient(x, y)?);
    }
    let grid = grid_points(nbhd.center, nbhd.radius, nbhd.grid_n);
    for w in grid.windows(2) {
        if w[0] != w[1] {
            q.add(map.pair_quotient(w[1], w[0])?);
        }
    }

    let mut d = Extremes::new();
    if map.has_derivative() {
        for &x in &grid {
            if !map.near_breakpoint(x, BREAKPOINT_PROXIMITY) {
                d.add(map.deriv(x).expect("derivative present")?.abs());
            }
        }
    }
    let (deriv_inf, deriv_sup) = d.range().unzip();
    Ok(LipschitzEstimate {
        c_hat: q.max,
        r_hat: q.min,
        deriv_sup,
        deriv_inf,
        pairs_used: pairs.len() + grid.len().saturating_sub(1),
    })
}

fn monotone(values: &[f64]) -> bool {
    let up = values.windows(2).all(|w| w[1] >= w[0]);
    let down = values.windows(2).all(|w| w[1] <= w[0]);
    up || down
}

fn one_sided_slopes(
    map: &ScalarMap,
    p: f64,
    grid: &[f64],
    values: &[f64],
) -> Result<OneSidedSlopes, EvalError> {
    let h = f64::EPSILON.sqrt() * p.abs().max(1.0);
    let fp = map.eval(p)?;
    let left = (fp - map.eval(p - h)?).abs() / h;
    let right = (map.eval(p + h)? - fp).abs() / h;
    let mut l = Extremes::new();
    let mut r = Extremes::new();
    for i in 1..grid.len() {
        let qv = quotient(values[i], values[i - 1], grid[i], grid[i - 1]);
        if grid[i] <= p {
            l.add(qv);
        } else if grid[i - 1] >= p {
            r.add(qv);
        }
    }
    let nan = (f64::NAN, f64::NAN);
    Ok(OneSidedSlopes {
        left,
        right,
        left_range: l.range().unwrap_or(nan),
        right_range: r.range().unwrap_or(nan),
    })
}

fn smooth_verdict(abs_derivative: f64) -> Verdict {
    if (abs_derivative - 1.0).abs() <= UNIT_BAND {
        Verdict::Inconclusive
    } else if abs_derivative < 1.0 {
        Verdict::Sink
    } else if abs_derivative > 1.0 {
        Verdict::Source
    } else {
        Verdict::Inconclusive
    }
}

fn smooth_check(map: &ScalarMap, p: f64) -> Option<SmoothCheck> {
    if map.near_breakpoint(p, BREAKPOINT_PROXIMITY) {
        return None;
    }
    let d = map.deriv(p)?.ok()?.abs();
    Some(SmoothCheck {
        abs_derivative: d,
        verdict: smooth_verdict(d),
    })
}

/// The Lipschitz stability test at a fixed point `p`, on the neighborhood
/// `nbhd` re-centred at `p`.
///
/// Sink needs the c-criterion `<= 1 - margin`. It uses
/// `max(deriv_sup, c_hat)` when the map has a derivative and `c_hat`
/// otherwise. Source needs the r-criterion `>= 1 + margin`, taken as
/// `min(deriv_inf, r_hat)` when the map has a derivative and is monotone on
/// the grid, and `r_hat` otherwise.
pub fn classify_fixed_point(
    map: &ScalarMap,
    p: f64,
    nbhd: &NeighborhoodSpec<f64>,
    margin: f64,
) -> Result<Classification, LipschitzError> {
    check_margin(margin)?;
    let residual = (map.eval(p)? - p).abs();
    if !(residual <= FIXED_POINT_RESIDUAL) {
        return Err(LipschitzError::NotAFixedPoint { p, residual });
    }
    let nbhd = NeighborhoodSpec {
        center: p,
        ..nbhd.clone()
    };
    let est = estimate_lipschitz(map, &nbhd)?;
    let grid = grid_points(p, nbhd.radius, nbhd.grid_n);
    let values = grid
        .iter()
        .map(|&x| map.eval(x))
        .collect::<Result<Vec<_>, _>>()?;
    let is_monotone = monotone(&values);

    let c_criterion = match est.deriv_sup {
        Some(sup) => Criterion {
            value: sup.max(est.c_hat),
            basis: Basis::DerivSup,
        },
        None => Criterion {
            value: est.c_hat,
            basis: Basis::PairQuotient,
        },
    };
    let r_criterion = match est.deriv_inf {
        Some(inf) if is_monotone => Criterion {
            value: inf.min(est.r_hat),
            basis: Basis::DerivInf,
        },
        _ => Criterion {
            value: est.r_hat,
            basis: Basis::PairQuotient,
        },
    };
    let verdict = if c_criterion.value <= 1.0 - margin {
        Verdict::Sink
    } else if r_criterion.value >= 1.0 + margin {
        Verdict::Source
    } else {
        Verdict::Inconclusive
    };
    Ok(Classification {
        verdict,
        method: Method::LipschitzTest,
        margin,
        evidence: Some(est),
        c_criterion,
        r_criterion,
        monotone: Some(is_monotone),
        one_sided: Some(one_sided_slopes(map, p, &grid, &values)?),
        smooth: smooth_check(map, p),
    })
}

/// The classical test `|f'(p)| < 1` / `> 1`, for cross-checks.
pub fn classify_fixed_point_smooth(
    map: &ScalarMap,
    p: f64,
) -> Result<Classification, LipschitzError> {
    let check = smooth_check(map, p).ok_or(LipschitzError::DerivativeUnavailable { at: p })?;
    let crit = Criterion {
        value: check.abs_derivative,
        basis: Basis::Derivative,
    };
    Ok(Classification {
        verdict: check.verdict,
        method: Method::SmoothOracle,
        margin: 0.0,
        evidence: None,
        c_criterion: crit,
        r_criterion: crit,
        monotone: None,
        one_sided: None,
        smooth: Some(check),
    })
}

/// `|f'(y_1) ... f'(y_k)|`, or `None` when some `y_i` is near a breakpoint
/// or the map has no derivative.
pub fn cycle_multiplier(map: &ScalarMap, cycle: &[f64]) -> Option<f64> {
    let mut product = 1.0;
    for &y in cycle {
        if map.near_breakpoint(y, BREAKPOINT_PROXIMITY) {
            return None;
        }
        product *= map.deriv(y)?.ok()?;
    }
    Some(product.abs())
}

/// The fixed-point test applied to `f^k` at `cycle[0]`. The smooth check is
/// the cycle multiplier.
pub fn classify_periodic_orbit(
    map: &ScalarMap,
    cycle: &[f64],
    nbhd: &NeighborhoodSpec<f64>,
    margin: f64,
) -> Result<Classification, LipschitzError> {
    if cycle.is_empty() {
        return Err(LipschitzError::InvalidArgument("empty cycle".into()));
    }
    let residual = cycle_residual(map, cycle)?;
    if !(residual <= FIXED_POINT_RESIDUAL) {
        return Err(LipschitzError::NotAPeriodicOrbit { residual });
    }
    let g = compose_k(map, cycle.len());
    let mut c = classify_fixed_point(&g, cycle[0], nbhd, margin)?;
    c.smooth = cycle_multiplier(map, cycle).map(|m| SmoothCheck {
        abs_derivative: m,
        verdict: smooth_verdict(m),
    });
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionResult {
    pub fixed_point: FixedPointCandidate,
    pub iterations: usize,
    /// Largest observed step quotient.
    pub c_hat: f64,
}

/// Banach iteration `x_{n+1} = f(x_n)` from `x0`.
///
/// Successive step quotients estimate the contraction constant; any quotient
/// `>= 1` aborts. Iteration stops once `|x_{n+1} - x_n| <= tol (1 - c) / c`,
/// which bounds the distance to the fixed point by `tol`, or once the step
/// reaches rounding level.
pub fn contraction_fixed_point(
    map: &ScalarMap,
    x0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ContractionResult, LipschitzError> {
    if !(tol > 0.0) {
        return Err(LipschitzError::InvalidArgument(
            "tol must be positive".into(),
        ));
    }
    let noise = |x: f64| 8.0 * f64::EPSILON * x.abs().max(1.0);
    let mut x = x0;
    let mut prev_step: Option<f64> = None;
    let mut c_hat: f64 = 0.0;
    for iteration in 1..=max_iter {
        let next = map.eval(x)?;
        if !next.is_finite() {
            return Err(LipschitzError::NotAContraction {
                quotient: f64::INFINITY,
                iteration,
            });
        }
        let step = (next - x).abs();
        let finished = |c: f64| {
            let bound = if c > 0.0 { c / (1.0 - c) * step } else { step };
            ContractionResult {
                fixed_point: FixedPointCandidate {
                    p: next,
                    residual: map.eval(next).map(|y| (y - next).abs()).unwrap_or(f64::NAN),
                    bracket: (next - bound, next + bound),
                },
                iterations: iteration,
                c_hat: c,
            }
        };
        if step <= noise(next) {
            return Ok(finished(c_hat));
        }
        if let Some(prev) = prev_step {
            let q = step / prev;
            if q >= 1.0 {
                return Err(LipschitzError::NotAContraction {
                    quotient: q,
                    iteration: iteration - 1,
                });
            }
            c_hat = c_hat.max(q);
            if step <= tol * (1.0 - c_hat) / c_hat {
                return Ok(finished(c_hat));
            }
        }
        prev_step = Some(step);
        x = next;
    }
    Err(LipschitzError::MaxIterExceeded { max_iter, last: x })
}

fn ball_point(rng: &mut ChaCha8Rng, center: &[f64], radius: f64, unit: &Uniform<f64>) -> Vec<f64> {
    let m = center.len();
    let dir: Vec<f64> = loop {
        let g: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        if euclidean_norm(&g) > 0.0 {
            break g;
        }
    };
    let norm = euclidean_norm(&dir);
    let r = radius * unit.sample(rng).powf(1.0 / m as f64);
    center
        .iter()
        .zip(&dir)
        .map(|(c, d)| c + r * d / norm)
        .collect()
}

/// `c_hat` and `r_hat` over pairs drawn uniformly from the Euclidean ball,
/// using stream `stream` of the seeded generator.
pub fn estimate_lipschitz_vector(
    vmap: &VectorMap,
    nbhd: &NeighborhoodSpec<Vec<f64>>,
    stream: u64,
) -> Result<LipschitzEstimate, LipschitzError> {
    nbhd.validate()?;
    if nbhd.center.len() != vmap.dimension() {
        return Err(LipschitzError::InvalidArgument(format!(
            "center has dimension {}, map has {}",
            nbhd.center.len(),
            vmap.dimension()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(nbhd.seed);
    rng.set_stream(stream);
    let unit = Uniform::new(0.0, 1.0).expect("unit interval");
    let mut q = Extremes::new();
    for _ in 0..nbhd.pair_samples {
        let v = ball_point(&mut rng, &nbhd.center, nbhd.radius, &unit);
        let mut w = ball_point(&mut rng, &nbhd.center, nbhd.radius, &unit);
        while w == v {
            w = ball_point(&mut rng, &nbhd.center, nbhd.radius, &unit);
        }
        let num = euclidean_distance(&vmap.eval(&v), &vmap.eval(&w));
        q.add(num / euclidean_distance(&v, &w));
    }
    Ok(LipschitzEstimate {
        c_hat: q.max,
        r_hat: q.min,
        deriv_sup: None,
        deriv_inf: None,
        pairs_used: nbhd.pair_samples,
    })
}

/// The stability test on R^m. Sink additionally requires a pass with
/// four times as many pairs, drawn from an independent stream, to agree.
pub fn classify_fixed_point_vector(
    vmap: &VectorMap,
    p: &[f64],
    nbhd: &NeighborhoodSpec<Vec<f64>>,
    margin: f64,
) -> Result<Classification, LipschitzError> {
    check_margin(margin)?;
    if p.len() != vmap.dimension() {
        return Err(LipschitzError::InvalidArgument(format!(
            "point has dimension {}, map has {}",
            p.len(),
            vmap.dimension()
        )));
    }
    let residual = euclidean_distance(&vmap.eval(p), p);
    if !(residual <= FIXED_POINT_RESIDUAL) {
        return Err(LipschitzError::NotAFixedPoint {
            p: euclidean_norm(p),
            residual,
        });
    }
    let nbhd = NeighborhoodSpec {
        center: p.to_vec(),
        ..nbhd.clone()
    };
    let est = estimate_lipschitz_vector(vmap, &nbhd, 0)?;
    let sink = est.c_hat <= 1.0 - margin && {
        let dense = NeighborhoodSpec {
            pair_samples: DENSE_FACTOR * nbhd.pair_samples,
            ..nbhd.clone()
        };
        estimate_lipschitz_vector(vmap, &dense, 1)?.c_hat <= 1.0 - margin
    };
    let verdict = if sink {
        Verdict::Sink
    } else if est.r_hat >= 1.0 + margin {
        Verdict::Source
    } else {
        Verdict::Inconclusive
    };
    Ok(Classification {
        verdict,
        method: Method::LipschitzTest,
        margin,
        evidence: Some(est),
        c_criterion: Criterion {
            value: est.c_hat,
            basis: Basis::PairQuotient,
        },
        r_criterion: Criterion {
            value: est.r_hat,
            basis: Basis::PairQuotient,
        },
        monotone: None,
        one_sided: None,
        smooth: vmap.diagonal().map(|d| {
            let verdict = diagonal_oracle(d);
            let spectral = d.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            SmoothCheck {
                abs_derivative: spectral,
                verdict,
            }
        }),
    })
}

/// Eigenvalue test for a diagonal linear map: all `|d_i| < 1` is a sink,
/// all `|d_i| > 1` a source.
pub fn diagonal_oracle(diagonal: &[f64]) -> Verdict {
    if diagonal.iter().all(|d| d.abs() < 1.0) {
        Verdict::Sink
    } else if diagonal.iter().all(|d| d.abs() > 1.0) {
        Verdict::Source
    } else {
        Verdict::Inconclusive
    }
}

//! Orbits, fixed points and periodic orbits.

use thiserror::Error;

use crate::dsl::EvalError;
use crate::maps::{compose_k, ScalarMap};

pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e12;
pub const DEFAULT_FP_TOL: f64 = 1e-10;
pub const DEFAULT_PERIOD_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_PERIOD: usize = 64;

/// Candidates closer than this are reported once.
const FIXED_POINT_DEDUP: f64 = 1e-9;
/// Widest half-bracket tried by [`refine_periodic_orbit`].
const MAX_BRACKET: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("need at least {needed} samples for period detection, have {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("no sign change of f^{k}(x) - x within {MAX_BRACKET} of {seed}")]
    NoBracket { k: usize, seed: f64 },
    #[error("root of f^{k}(x) - x near {at} has residual {residual:e}; f^{k} jumps there")]
    Discontinuous { k: usize, at: f64, residual: f64 },
}

/// A finite orbit segment `x_{B+1}, ..., x_{B+N}` with `x_1 = x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub x1: f64,
    pub burn_in: usize,
    pub samples: Vec<f64>,
    /// Number of points computed, burn-in included.
    pub total_n: usize,
    pub escaped: bool,
    /// `f` applied to the last sample; `None` when the orbit escaped.
    pub next: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointCandidate {
    pub p: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodDetection {
    pub period: usize,
    /// The last `period` samples, rotated to start at the smallest.
    pub cycle: Vec<f64>,
    /// `max |f(y_i) - y_{i+1 mod k}|` over the reported cycle.
    pub residual: f64,
    /// `max |x_{n+k} - x_n|` over the trailing window.
    pub tail_error: f64,
}

fn outside(x: f64, radius: f64) -> bool {
    !x.is_finite() || x.abs() > radius
}

/// Computes `burn_in + n` orbit points starting from `x1 = x0` and keeps the
/// last `n`. Iteration stops early once a point is non-finite or exceeds
/// `escape_radius` in magnitude; that point is not stored.
pub fn iterate(
    map: &ScalarMap,
    x0: f64,
    n: usize,
    burn_in: usize,
    escape_radius: f64,
) -> Result<Orbit, OrbitError> {
    if n == 0 {
        return Err(OrbitError::InvalidArgument("n must be at least 1".into()));
    }
    if !(escape_radius > 0.0) {
        return Err(OrbitError::InvalidArgument(
            "escape radius must be positive".into(),
        ));
    }
    let mut orbit = Orbit {
        x1: x0,
        burn_in,
        samples: Vec::with_capacity(n),
        total_n: 0,
        escaped: false,
        next: None,
    };
    let mut x = x0;
    for i in 0..burn_in + n {
        if outside(x, escape_radius) {
            orbit.escaped = true;
            return Ok(orbit);
        }
        orbit.total_n += 1;
        if i >= burn_in {
            orbit.samples.push(x);
        }
        x = map.eval(x)?;
    }
    if outside(x, escape_radius) {
        orbit.escaped = true;
    } else {
        orbit.next = Some(x);
    }
    Ok(orbit)
}

/// Bisects a sign change of `g` on `[a, b]` down to adjacent doubles and
/// returns the endpoint with the smaller `|g|`.
fn bisect<E>(g: impl Fn(f64) -> Result<f64, E>, mut a: f64, mut b: f64) -> Result<(f64, f64), E> {
    let mut ga = g(a)?;
    let mut gb = g(b)?;
    if ga == 0.0 {
        return Ok((a, 0.0));
    }
    if gb == 0.0 {
        return Ok((b, 0.0));
    }
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m)?;
        if gm == 0.0 {
            return Ok((m, 0.0));
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
            gb = gm;
        }
    }
    Ok(if ga.abs() <= gb.abs() {
        (a, ga.abs())
    } else {
        (b, gb.abs())
    })
}

/// Fixed points of `map` in `[lo, hi]`: sign changes and exact zeros of
/// `f(x) - x` on a uniform grid, polished by bisection, plus every breakpoint
/// where the residual is already within `tol`. Sign changes caused by jumps
/// are discarded by the residual check.
pub fn find_fixed_points(
    map: &ScalarMap,
    (lo, hi): (f64, f64),
    grid_n: usize,
    tol: f64,
) -> Vec<FixedPointCandidate> {
    assert!(lo < hi, "empty interval");
    assert!(grid_n >= 2, "grid needs at least two points");
    let g = |x: f64| map.eval(x).map(|y| y - x);
    let step = (hi - lo) / (grid_n - 1) as f64;
    let grid = |i: usize| {
        if i == grid_n - 1 {
            hi
        } else {
            lo + step * i as f64
        }
    };

    let mut found = Vec::new();
    let mut push = |p: f64, residual: f64, bracket: (f64, f64)| {
        if residual <= tol {
            found.push(FixedPointCandidate {
                p,
                residual,
                bracket,
            });
        }
    };
    let value = |x: f64| g(x).ok().filter(|v| v.is_finite());
    let mut prev = (grid(0), value(grid(0)));
    if prev.1 == Some(0.0) {
        push(prev.0, 0.0, (prev.0, prev.0));
    }
    for i in 1..grid_n {
        let x = grid(i);
        let v = value(x);
        match (prev.1, v) {
            (_, Some(0.0)) => push(x, 0.0, (x, x)),
            (Some(u), Some(w)) if u != 0.0 && (u < 0.0) != (w < 0.0) => {
                if let Ok((p, r)) = bisect(g, prev.0, x) {
                    push(p, r, (prev.0, x));
                }
            }
            _ => {}
        }
        prev = (x, v);
    }
    for &b in map.breakpoints() {
        if (lo..=hi).contains(&b) {
            if let Some(r) = value(b) {
                push(b, r.abs(), (b, b));
            }
        }
    }

    found.sort_by(|a, b| a.p.total_cmp(&b.p));
    let mut out: Vec<FixedPointCandidate> = Vec::with_capacity(found.len());
    for c in found {
        match out.last_mut() {
            Some(last) if (c.p - last.p).abs() <= FIXED_POINT_DEDUP => {
                if c.residual < last.residual {
                    *last = c;
                }
            }
            _ => out.push(c),
        }
    }
    out
}

/// [`detect_periodicity_with_window`] with a trailing window of
/// `10 * max_period` samples.
pub fn detect_periodicity(
    orbit: &Orbit,
    max_period: usize,
    tol: f64,
) -> Result<Option<PeriodDetection>, OrbitError> {
    detect_periodicity_with_window(orbit, max_period, tol, 10 * max_period)
}

/// Smallest `k <= max_period` with `|x_{n+k} - x_n| <= tol` for every `n` in
/// the trailing `window`. Escaped orbits are never periodic.
pub fn detect_periodicity_with_window(
    orbit: &Orbit,
    max_period: usize,
    tol: f64,
    window: usize,
) -> Result<Option<PeriodDetection>, OrbitError> {
    if max_period == 0 || window == 0 {
        return Err(OrbitError::InvalidArgument(
            "max_period and window must be positive".into(),
        ));
    }
    let xs = &orbit.samples;
    let needed = 2 * max_period + window;
    if orbit.escaped {
        return Ok(None);
    }
    if xs.len() < needed {
        return Err(OrbitError::InsufficientSamples {
            needed,
            got: xs.len(),
        });
    }
    let next = orbit.next.expect("bounded orbit has a successor");
    let len = xs.len();
    for k in 1..=max_period {
        let start = len - k - window;
        let mut tail_error: f64 = 0.0;
        let mut ok = true;
        for n in start..len - k {
            let d = (xs[n + k] - xs[n]).abs();
            if !(d <= tol) {
                ok = false;
                break;
            }
            tail_error = tail_error.max(d);
        }
        if !ok {
            continue;
        }
        let tail = &xs[len - k..];
        // Every sample but the last maps exactly onto its successor.
        let residual = (next - tail[0]).abs();
        let lowest = (0..k)
            .min_by(|&i, &j| tail[i].total_cmp(&tail[j]))
            .expect("k >= 1");
        let mut cycle = tail.to_vec();
        cycle.rotate_left(lowest);
        return Ok(Some(PeriodDetection {
            period: k,
            cycle,
            residual,
            tail_error,
        }));
    }
    Ok(None)
}

/// Polishes a root of `f^k(x) - x` near `seed` and returns the cycle
/// `y, f(y), ..., f^{k-1}(y)`.
///
/// The bracket `seed ± w` starts at `w = 10 tol` and doubles until it
/// straddles a sign change or exceeds `1e-2`.
pub fn refine_periodic_orbit(
    map: &ScalarMap,
    k: usize,
    seed: f64,
    tol: f64,
) -> Result<Vec<f64>, OrbitError> {
    if k == 0 {
        return Err(OrbitError::InvalidArgument("k must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(OrbitError::InvalidArgument("tol must be positive".into()));
    }
    let fk = compose_k(map, k);
    let g = |x: f64| fk.eval(x).map(|y| y - x);

    let y = if g(seed)? == 0.0 {
        seed
    } else {
        let mut w = 10.0 * tol;
        let bracket = loop {
            let (a, b) = (seed - w, seed + w);
            let (ga, gb) = (g(a)?, g(b)?);
            let straddles = ga == 0.0 || gb == 0.0 || (ga < 0.0) != (gb < 0.0);
            if ga.is_finite() && gb.is_finite() && straddles {
                break (a, b);
            }
            if w >= MAX_BRACKET {
                return Err(OrbitError::NoBracket { k, seed });
            }
            w = (2.0 * w).min(MAX_BRACKET);
        };
        let (y, residual) = bisect(g, bracket.0, bracket.1)?;
        if residual > tol {
            return Err(OrbitError::Discontinuous { k, at: y, residual });
        }
        y
    };

    let mut cycle = Vec::with_capacity(k);
    let mut x = y;
    for _ in 0..k {
        cycle.push(x);
        x = map.eval(x)?;
    }
    Ok(cycle)
}

/// `max |f(y_i) - y_{i+1 mod k}|`.
pub fn cycle_residual(map: &ScalarMap, cycle: &[f64]) -> Result<f64, EvalError> {
    let k = cycle.len();
    let mut worst: f64 = 0.0;
    for i in 0..k {
        let d = (map.eval(cycle[i])? - cycle[(i + 1) % k]).abs();
        worst = if d.is_nan() { f64::NAN } else { worst.max(d) };
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{builtin, ParamFamily};

    fn logistic(a: f64) -> ScalarMap {
        builtin(&ParamFamily::logistic(a)).unwrap()
    }

    fn tent() -> ScalarMap {
        builtin(&ParamFamily::tent(-2.0, 1.0)).unwrap()
    }

    fn two_cycle(a: f64) -> [f64; 2] {
        let s = ((a + 1.0) * (a - 3.0)).sqrt();
        [(a + 1.0 - s) / (2.0 * a), (a + 1.0 + s) / (2.0 * a)]
    }

    #[test]
    fn tent_hand_iteration() {
        let o = iterate(&tent(), 0.25, 5, 0, DEFAULT_ESCAPE_RADIUS).unwrap();
        assert_eq!(o.samples, vec![0.25, 0.5, 0.0, 1.0, -1.0]);
        assert_eq!(o.next, Some(-1.0));
    }

    #[test]
    fn affine_fixed_orbit() {
        let f = builtin(&ParamFamily::affine(0.5, 1.0)).unwrap();
        let o = iterate(&f, 2.0, 10, 3, DEFAULT_ESCAPE_RADIUS).unwrap();
        assert!(o.samples.iter().all(|&x| x == 2.0));
        assert_eq!(o.total_n, 13);
    }

    #[test]
    fn doubling_escapes() {
        let f = builtin(&ParamFamily::affine(2.0, 0.0)).unwrap();
        let o = iterate(&f, 1.0, 50, 0, 100.0).unwrap();
        assert!(o.escaped);
        assert_eq!(o.samples.len(), 7);
        assert_eq!(*o.samples.last().unwrap(), 64.0);
        assert!(o.next.is_none());
    }

    #[test]
    fn burn_in_is_dropped() {
        let o = iterate(&tent(), 0.25, 2, 2, DEFAULT_ESCAPE_RADIUS).unwrap();
        assert_eq!(o.samples, vec![0.0, 1.0]);
    }

    #[test]
    fn fixed_points_logistic() {
        let fps = find_fixed_points(&logistic(3.0), (0.0, 1.0), 1000, DEFAULT_FP_TOL);
        assert_eq!(fps.len(), 2);
        assert_eq!(fps[0].p, 0.0);
        assert!((fps[1].p - 2.0 / 3.0).abs() < 1e-12);
        assert!(fps.iter().all(|c| c.residual <= DEFAULT_FP_TOL));
    }

    #[test]
    fn fixed_points_piecewise_and_tent() {
        let pw = builtin(&ParamFamily::piecewise_example()).unwrap();
        let ps: Vec<f64> = find_fixed_points(&pw, (-2.0, 3.0), 1000, DEFAULT_FP_TOL)
            .iter()
            .map(|c| c.p)
            .collect();
        assert_eq!(ps, vec![0.0, 1.0]);

        let ps: Vec<f64> = find_fixed_points(&tent(), (-2.0, 2.0), 1000, DEFAULT_FP_TOL)
            .iter()
            .map(|c| c.p)
            .collect();
        assert_eq!(ps.len(), 2);
        assert!((ps[0] + 1.0).abs() < 1e-12);
        assert!((ps[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn jumps_are_not_fixed_points() {
        let f = ScalarMap::from_fn("step", |x| if x < 0.5 { 1.0 } else { 0.0 }, None, vec![0.5]);
        assert!(find_fixed_points(&f, (0.0, 1.0), 101, DEFAULT_FP_TOL).is_empty());
    }

    #[test]
    fn period_two_logistic() {
        let o = iterate(&logistic(3.2), 0.3, 2000, 1000, DEFAULT_ESCAPE_RADIUS).unwrap();
        let d = detect_periodicity(&o, DEFAULT_MAX_PERIOD, DEFAULT_PERIOD_TOL)
            .unwrap()
            .unwrap();
        assert_eq!(d.period, 2);
        let want = two_cycle(3.2);
        assert!((d.cycle[0] - want[0]).abs() < 1e-8);
        assert!((d.cycle[1] - want[1]).abs() < 1e-8);
        assert!((d.cycle[0] - 0.513045).abs() < 1e-6);
        assert!((d.cycle[1] - 0.799455).abs() < 1e-6);
        assert!(d.residual <= DEFAULT_PERIOD_TOL);
    }

    #[test]
    fn period_one_and_chaos() {
        let o = iterate(&logistic(2.0), 0.3, 2000, 0, DEFAULT_ESCAPE_RADIUS).unwrap();
        let d = detect_periodicity(&o, 64, DEFAULT_PERIOD_TOL)
            .unwrap()
            .unwrap();
        assert_eq!(d.period, 1);
        assert!((d.cycle[0] - 0.5).abs() < 1e-12);

        let o = iterate(&logistic(4.0), 0.3, 5000, 1000, DEFAULT_ESCAPE_RADIUS).unwrap();
        assert_eq!(
            detect_periodicity(&o, 64, DEFAULT_PERIOD_TOL).unwrap(),
            None
        );
    }

    #[test]
    fn short_orbits_are_rejected() {
        let o = iterate(&logistic(2.0), 0.3, 100, 0, DEFAULT_ESCAPE_RADIUS).unwrap();
        assert_eq!(
            detect_periodicity(&o, 64, DEFAULT_PERIOD_TOL),
            Err(OrbitError::InsufficientSamples {
                needed: 768,
                got: 100
            })
        );
    }

    #[test]
    fn exact_cycle_has_zero_tail_error() {
        let o = iterate(&tent(), -1.0, 100, 0, DEFAULT_ESCAPE_RADIUS).unwrap();
        let d = detect_periodicity(&o, 4, DEFAULT_PERIOD_TOL)
            .unwrap()
            .unwrap();
        assert_eq!(d.cycle, vec![-1.0]);
        assert_eq!(d.tail_error, 0.0);
        assert_eq!(d.residual, 0.0);
    }

    #[test]
    fn refine_logistic_two_cycle() {
        let f = logistic(3.2);
        let cycle = refine_periodic_orbit(&f, 2, 0.51, 1e-12).unwrap();
        assert!((cycle[0] - 0.5130445).abs() < 1e-7);
        let f2 = compose_k(&f, 2);
        assert!((f2.eval(cycle[0]).unwrap() - cycle[0]).abs() <= 1e-12);
        assert!(cycle_residual(&f, &cycle).unwrap() <= 1e-12);
    }

    #[test]
    fn refine_exact_seed_is_unchanged() {
        let f = logistic(2.0);
        assert_eq!(refine_periodic_orbit(&f, 1, 0.5, 1e-12).unwrap(), vec![0.5]);
    }

    #[test]
    fn refine_without_bracket() {
        assert_eq!(
            refine_periodic_orbit(&logistic(3.2), 2, 0.05, 1e-12),
            Err(OrbitError::NoBracket { k: 2, seed: 0.05 })
        );
    }
}

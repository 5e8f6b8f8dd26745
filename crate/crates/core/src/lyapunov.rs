//! Finite-n Lyapunov exponents and chaos classification.

use std::fmt;

use thiserror::Error;

use crate::dsl::EvalError;
use crate::maps::ScalarMap;
use crate::orbit::{
    cycle_residual, detect_periodicity_with_window, iterate, OrbitError, PeriodDetection,
    DEFAULT_ESCAPE_RADIUS,
};

/// `|f'|` below this makes a log term `-inf`.
pub const DERIVATIVE_FLOOR: f64 = 1e-300;
pub const DEFAULT_ETA: f64 = 1e-9;
pub const CONVERGENCE_RTOL: f64 = 1e-3;
const CYCLE_RESIDUAL: f64 = 1e-8;
const WINDOWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("orbit point x_{index} = {x} lies within eta of a breakpoint")]
    BreakpointHit { index: usize, x: f64 },
    #[error("derivative unavailable at {at}")]
    DerivativeUnavailable { at: f64 },
    #[error("cycle point {at} lies within eta of a breakpoint")]
    BreakpointOnCycle { at: f64 },
    #[error("not a periodic orbit: residual {residual:e}")]
    NotAPeriodicOrbit { residual: f64 },
    #[error("Lyapunov number undefined: {0}")]
    Undefined(Status),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SkipMode {
    /// Leave the term out and count it.
    #[default]
    Skip,
    /// Differentiate at `x + perturbation` instead.
    Perturb,
    /// Stop with [`LyapunovError::BreakpointHit`].
    Fail,
}

impl std::str::FromStr for SkipMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "skip" => Ok(SkipMode::Skip),
            "perturb" => Ok(SkipMode::Perturb),
            "fail" => Ok(SkipMode::Fail),
            other => Err(format!("unknown skip mode `{other}`")),
        }
    }
}

/// What to do with orbit points within `eta` of a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkipPolicy {
    pub mode: SkipMode,
    pub eta: f64,
    pub perturbation: f64,
}

impl Default for SkipPolicy {
    fn default() -> Self {
        SkipPolicy {
            mode: SkipMode::Skip,
            eta: DEFAULT_ETA,
            perturbation: 1e-9,
        }
    }
}

impl SkipPolicy {
    pub fn with_mode(mode: SkipMode) -> Self {
        SkipPolicy {
            mode,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    NotConverged,
    DivergedMinusInf,
    OrbitEscaped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::NotConverged => "not_converged",
            Status::DivergedMinusInf => "diverged_minus_inf",
            Status::OrbitEscaped => "orbit_escaped",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    /// Mean of `ln |f'(x_i)|` over the used terms; `-inf` when diverged.
    pub h_n: f64,
    pub n_used: usize,
    pub skipped: usize,
    pub status: Status,
    /// Running mean at the end of each tenth of the used terms.
    pub partials: Vec<f64>,
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
struct Sum {
    sum: f64,
    comp: f64,
}

impl Sum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean shifted by the first term, exact for constant sequences.
fn mean(terms: &[f64]) -> f64 {
    let t0 = terms[0];
    let mut s = Sum::default();
    terms.iter().for_each(|&t| s.add(t - t0));
    t0 + s.value() / terms.len() as f64
}

fn central_difference(map: &ScalarMap, x: f64) -> Result<f64, EvalError> {
    let h = f64::EPSILON.sqrt() * x.abs().max(1.0);
    Ok((map.eval(x + h)? - map.eval(x - h)?) / (2.0 * h))
}

enum Term {
    Log(f64),
    Skip,
    Floor,
}

fn term(map: &ScalarMap, x: f64, index: usize, policy: &SkipPolicy) -> Result<Term, LyapunovError> {
    let near = map.near_breakpoint(x, policy.eta);
    let derivative = match map.deriv(x) {
        Some(d) => d?,
        // Finite differences straddle kinks, so nearby points are skipped
        // whatever the mode.
        None if near => return Ok(Term::Skip),
        None => central_difference(map, x)?,
    };
    if derivative.abs() < DERIVATIVE_FLOOR {
        return Ok(Term::Floor);
    }
    if !near {
        return Ok(Term::Log(derivative.abs().ln()));
    }
    match policy.mode {
        SkipMode::Skip => Ok(Term::Skip),
        SkipMode::Fail => Err(LyapunovError::BreakpointHit { index, x }),
        SkipMode::Perturb => {
            let d = map
                .deriv(x + policy.perturbation)
                .expect("derivative present")?
                .abs();
            Ok(if d < DERIVATIVE_FLOOR {
                Term::Floor
            } else {
                Term::Log(d.ln())
            })
        }
    }
}

/// `h_n = (1/n) sum ln |f'(x_i)|` over `x_{B+1}, ..., x_{B+n}` with
/// `x_1 = x1`.
///
/// Maps without a derivative use central differences. A derivative below
/// [`DERIVATIVE_FLOOR`] at any orbit point, breakpoint-proximate or not,
/// ends the computation with `h_n = -inf`. An orbit leaving the escape
/// radius ends it with status `orbit_escaped` and the mean so far.
pub fn lyapunov_exponent(
    map: &ScalarMap,
    x1: f64,
    n: usize,
    burn_in: usize,
    policy: &SkipPolicy,
) -> Result<LyapunovEstimate, LyapunovError> {
    if n == 0 {
        return Err(LyapunovError::InvalidArgument(
            "n must be at least 1".into(),
        ));
    }
    if !(policy.eta > 0.0) {
        return Err(LyapunovError::InvalidArgument(
            "eta must be positive".into(),
        ));
    }
    let escaped = |x: f64| !x.is_finite() || x.abs() > DEFAULT_ESCAPE_RADIUS;
    let finish = |terms: &[f64], skipped: usize, status: Status, h_n: f64| LyapunovEstimate {
        h_n,
        n_used: terms.len(),
        skipped,
        status,
        partials: partials(terms),
    };

    let mut x = x1;
    for _ in 0..burn_in {
        if escaped(x) {
            return Ok(finish(&[], 0, Status::OrbitEscaped, f64::NAN));
        }
        x = map.eval(x)?;
    }
    let mut terms = Vec::with_capacity(n);
    let mut skipped = 0;
    for i in 0..n {
        if escaped(x) {
            let h = if terms.is_empty() {
                f64::NAN
            } else {
                mean(&terms)
            };
            return Ok(finish(&terms, skipped, Status::OrbitEscaped, h));
        }
        match term(map, x, burn_in + i + 1, policy)? {
            Term::Log(t) => terms.push(t),
            Term::Skip => skipped += 1,
            Term::Floor => {
                return Ok(finish(
                    &terms,
                    skipped,
                    Status::DivergedMinusInf,
                    f64::NEG_INFINITY,
                ))
            }
        }
        x = map.eval(x)?;
    }
    if terms.is_empty() {
        return Ok(finish(&terms, skipped, Status::NotConverged, f64::NAN));
    }
    let status = if converged(&terms) {
        Status::Converged
    } else {
        Status::NotConverged
    };
    Ok(finish(&terms, skipped, status, mean(&terms)))
}

/// The last two disjoint windows of `len / 10` terms agree to
/// [`CONVERGENCE_RTOL`] relative.
fn converged(terms: &[f64]) -> bool {
    let w = terms.len() / WINDOWS;
    if w == 0 {
        return false;
    }
    let n = terms.len();
    let a = mean(&terms[n - 2 * w..n - w]);
    let b = mean(&terms[n - w..]);
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= CONVERGENCE_RTOL * scale
}

fn partials(terms: &[f64]) -> Vec<f64> {
    let w = terms.len() / WINDOWS;
    if w == 0 {
        return Vec::new();
    }
    let t0 = terms[0];
    let mut s = Sum::default();
    let mut out = Vec::with_capacity(WINDOWS);
    for (i, &t) in terms.iter().enumerate() {
        s.add(t - t0);
        if (i + 1) % w == 0 && out.len() < WINDOWS {
            out.push(t0 + s.value() / (i + 1) as f64);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovNumber {
    pub value: f64,
    /// Set when `value` is the limit `0` of `e^h` as `h -> -inf`.
    pub diverged: bool,
}

/// `L = e^{h_n}`.
pub fn lyapunov_number(estimate: &LyapunovEstimate) -> Result<LyapunovNumber, LyapunovError> {
    match estimate.status {
        Status::OrbitEscaped => Err(LyapunovError::Undefined(estimate.status)),
        Status::DivergedMinusInf => Ok(LyapunovNumber {
            value: 0.0,
            diverged: true,
        }),
        Status::Converged | Status::NotConverged => Ok(LyapunovNumber {
            value: estimate.h_n.exp(),
            diverged: false,
        }),
    }
}

/// `(1/k) sum ln |f'(y_i)|` over a k-cycle, `-inf` if a factor is below
/// [`DERIVATIVE_FLOOR`].
pub fn periodic_orbit_exponent(
    map: &ScalarMap,
    cycle: &[f64],
    eta: f64,
) -> Result<f64, LyapunovError> {
    if cycle.is_empty() {
        return Err(LyapunovError::InvalidArgument("empty cycle".into()));
    }
    let residual = cycle_residual(map, cycle)?;
    if !(residual <= CYCLE_RESIDUAL) {
        return Err(LyapunovError::NotAPeriodicOrbit { residual });
    }
    let mut s = Sum::default();
    for &y in cycle {
        if map.near_breakpoint(y, eta) {
            return Err(LyapunovError::BreakpointOnCycle { at: y });
        }
        let d = map
            .deriv(y)
            .ok_or(LyapunovError::DerivativeUnavailable { at: y })??
            .abs();
        if d < DERIVATIVE_FLOOR {
            return Ok(f64::NEG_INFINITY);
        }
        s.add(d.ln());
    }
    Ok(s.value() / cycle.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowingReport {
    pub h_orbit: LyapunovEstimate,
    pub h_cycle: f64,
    /// `|h_orbit - h_cycle|`, absent when either side is `-inf`.
    pub gap: Option<f64>,
}

/// Compares the exponent of the orbit of `x1` (no burn-in) with that of the
/// cycle it approaches. No verdict is drawn.
pub fn check_shadowing_consistency(
    map: &ScalarMap,
    x1: f64,
    cycle: &[f64],
    n: usize,
    policy: &SkipPolicy,
) -> Result<ShadowingReport, LyapunovError> {
    let h_cycle = periodic_orbit_exponent(map, cycle, policy.eta)?;
    let h_orbit = lyapunov_exponent(map, x1, n, 0, policy)?;
    let gap =
        (h_orbit.h_n.is_finite() && h_cycle.is_finite()).then(|| (h_orbit.h_n - h_cycle).abs());
    Ok(ShadowingReport {
        h_orbit,
        h_cycle,
        gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosReport {
    pub bounded: bool,
    pub asymptotically_periodic: Option<PeriodDetection>,
    pub exponent: LyapunovEstimate,
    pub chaotic: bool,
    /// A cycle was detected although the exponent is positive. Orbits of
    /// maps with dyadic slopes collapse onto exact cycles in floating point.
    pub float_collapse: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosConfig {
    pub n: usize,
    pub burn_in: usize,
    pub max_period: usize,
    pub period_tol: f64,
    pub policy: SkipPolicy,
}

/// Bounded, not asymptotically periodic, and a positive converged exponent.
/// The periodicity window is `min(10 max_period, n - 2 max_period)`.
pub fn classify_chaos(
    map: &ScalarMap,
    x1: f64,
    cfg: &ChaosConfig,
) -> Result<ChaosReport, LyapunovError> {
    if cfg.max_period == 0 || cfg.n < 10 * cfg.max_period {
        return Err(LyapunovError::InvalidArgument(format!(
            "need n >= 10 * max_period (n = {}, max_period = {})",
            cfg.n, cfg.max_period
        )));
    }
    let orbit = iterate(map, x1, cfg.n, cfg.burn_in, DEFAULT_ESCAPE_RADIUS)?;
    let bounded = !orbit.escaped;
    let asymptotically_periodic = if bounded {
        let window = (10 * cfg.max_period).min(cfg.n - 2 * cfg.max_period);
        detect_periodicity_with_window(&orbit, cfg.max_period, cfg.period_tol, window)?
    } else {
        None
    };
    let exponent = lyapunov_exponent(map, x1, cfg.n, cfg.burn_in, &cfg.policy)?;
    let positive = exponent.h_n > 0.0;
    let chaotic = bounded
        && asymptotically_periodic.is_none()
        && positive
        && exponent.status == Status::Converged;
    let float_collapse = asymptotically_periodic.is_some() && positive;
    Ok(ChaosReport {
        bounded,
        asymptotically_periodic,
        exponent,
        chaotic,
        float_collapse,
    })
}

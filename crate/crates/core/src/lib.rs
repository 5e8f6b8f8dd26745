//! Stability tests and Lyapunov exponents for Lipschitz maps of the line.
//!
//! Maps come from a small DSL ([`dsl`]) or from built-in families
//! ([`maps`]). Fixed points are classified with empirical Lipschitz and
//! reverse-Lipschitz constants ([`lipschitz`]), orbits are iterated and
//! checked for periodicity ([`orbit`]), and finite-n Lyapunov exponents are
//! computed with explicit handling of non-differentiable points
//! ([`lyapunov`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod dd;
pub mod dsl;
pub mod lipschitz;
pub mod lyapunov;
pub mod maps;
pub mod orbit;

pub use dsl::{parse_map, DslError, Expr, MapDefinition};
pub use lipschitz::{
    classify_fixed_point, classify_fixed_point_smooth, classify_fixed_point_vector,
    classify_periodic_orbit, contraction_fixed_point, estimate_lipschitz, Classification,
    LipschitzError, LipschitzEstimate, NeighborhoodSpec, Verdict,
};
pub use lyapunov::{
    check_shadowing_consistency, classify_chaos, lyapunov_exponent, lyapunov_number,
    periodic_orbit_exponent, ChaosConfig, ChaosReport, LyapunovError, LyapunovEstimate, SkipMode,
    SkipPolicy, Status,
};
pub use maps::{
    builtin, compose_k, from_dsl, linear_vector_map, FamilyKind, MapError, ParamFamily, ScalarMap,
    VectorMap,
};
pub use orbit::{
    detect_periodicity, find_fixed_points, iterate, refine_periodic_orbit, FixedPointCandidate,
    Orbit, OrbitError, PeriodDetection,
};

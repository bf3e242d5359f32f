//! Numerical tolerances used across the crate, pinned in one place.
//!
//! Tests and the `validate` command compare against these exact constants,
//! so loosening any of them is an API-visible change.

/// Exact probability identities (e.g. p1+p2+p3 = 1) must hold to this
/// absolute error in f64.
pub const PROB_SUM_ABS: f64 = 1e-12;

/// The conditional next-transaction probabilities are computed two
/// independent ways; the routes must agree to this absolute error.
pub const P6_CONSISTENCY_ABS: f64 = 1e-9;

/// Default stopping tolerance for stationary-distribution power iteration,
/// measured as the L-infinity distance between successive iterates.
pub const STATIONARY_DEFAULT_TOL: f64 = 1e-12;

/// Iteration cap for power iteration; reaching it flags non-convergence.
pub const STATIONARY_MAX_ITERATIONS: u64 = 1_000_000;

/// Power iteration and the direct linear solve must agree to this
/// L-infinity distance.
pub const POWER_VS_SOLVE_ABS: f64 = 1e-9;

/// Probability mass is conserved by each power-iteration step to this
/// absolute error.
pub const CONSERVATION_PER_ITERATION_ABS: f64 = 1e-12;

/// Absolute band for the simulator's transaction success ratio against the
/// closed form at x = 1, where the two agree by construction.
pub const SIM_TSR_ABS_TOL_X1: f64 = 0.005;

/// Relative band for the simulator against the closed form at x > 1, where
/// the chain abstracts away within-event ordering the simulator keeps.
pub const SIM_TSR_REL_TOL: f64 = 0.05;

/// Relative band for the coexistence simulator against the closed-form
/// transaction failure probability in the saturated-overlap regime.
pub const SIM_PTF_REL_TOL: f64 = 0.15;

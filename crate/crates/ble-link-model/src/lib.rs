//! Closed-form throughput and reliability models for a BLE connection
//! under interference, with a packet-level Monte Carlo simulator to check
//! them empirically.
//!
//! The crate is organized around a [`scenario::Scenario`]: a victim
//! connection described by its packet sizes, transactions per event and
//! connection interval, plus an optional disturber connection. From a
//! validated scenario you can
//!
//! - run the transaction-outcome probability algebra and the three-state
//!   Markov chain to get a transmission success ratio and expected
//!   throughput ([`throughput`]),
//! - evaluate the closed-form transmission-failure probability under the
//!   disturber ([`reliability`]),
//! - cross-check either model with seeded, reproducible Monte Carlo
//!   ([`sim`]), or
//! - trace reliability-versus-throughput curves over parameter grids
//!   ([`sweep`]).
//!
//! All numeric tolerances the tests rely on live in [`tolerances`].

pub mod reliability;
pub mod scenario;
pub mod sim;
pub mod sweep;
pub mod throughput;
pub mod tolerances;

use scenario::{Scenario, ValidationErrors};
use throughput::ThroughputOutputs;

pub use scenario::{validate_scenario, RawScenario};

/// Failures surfaced by the models. Validation problems carry every
/// violated invariant; numerical problems carry the state that exposed
/// them.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Validation(#[from] ValidationErrors),

    #[error("bit error rate 1 makes every quantity degenerate")]
    DegenerateBer,

    #[error(
        "transaction probabilities are inconsistent: p1+p2+p3 = {fresh_sum}, \
         p6 = {p6_direct} vs 1-p4-p5 = {p6_complement}"
    )]
    ProbabilityInconsistency { fresh_sum: f64, p6_direct: f64, p6_complement: f64 },

    #[error("power iteration did not converge within {iterations} iterations (last {last:?})")]
    NonConvergence { iterations: u64, last: [f64; 3] },

    #[error("stationary balance system is singular")]
    SingularSystem,

    #[error("power iteration {power:?} disagrees with direct solve {solved:?}")]
    StationaryMismatch { power: [f64; 3], solved: [f64; 3] },

    #[error("sweep point {param} = {value}{} is invalid: {source}", family_suffix(.family))]
    SweepPoint {
        param: &'static str,
        value: f64,
        family: Option<(&'static str, f64)>,
        source: ValidationErrors,
    },
}

fn family_suffix(family: &Option<(&'static str, f64)>) -> String {
    match family {
        Some((name, value)) => format!(" (family {name} = {value})"),
        None => String::new(),
    }
}

impl ModelError {
    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            ModelError::Validation(_) | ModelError::DegenerateBer | ModelError::SweepPoint { .. }
        )
    }
}

/// Everything the closed forms say about one scenario. The reliability
/// fields need a disturber and stay `None` without one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOutputs {
    pub throughput: ThroughputOutputs,
    pub p_tf: Option<f64>,
    pub reliability: Option<f64>,
}

/// Runs every applicable closed-form model on a validated scenario.
pub fn evaluate_scenario(scenario: &Scenario) -> Result<ModelOutputs, ModelError> {
    let throughput = throughput::evaluate_throughput(scenario)?;
    let (p_tf, rel) = match scenario.disturber {
        Some(_) => {
            let inputs = reliability::ReliabilityInputs::from_scenario(scenario)
                .expect("disturber checked above");
            (Some(reliability::p_tf(&inputs)), Some(reliability::reliability(&inputs)))
        }
        None => (None, None),
    };
    Ok(ModelOutputs { throughput, p_tf, reliability: rel })
}

use thiserror::Error;

/// Errors produced by model evaluation, control and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar input violated its admissible interval.
    #[error("{quantity} = {value} outside [{min}, {max}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// Rotor index outside 1..=8.
    #[error("rotor index {0} outside 1..=8")]
    RotorIndex(usize),

    /// A matrix expected to be a rotation failed the orthonormality check.
    #[error("matrix is not a rotation (orthonormality deviation {0:.3e})")]
    NotRotation(f64),

    /// Both atan2 arguments of a direction extraction vanished.
    #[error("degenerate force demand in {0}: both atan2 arguments are zero")]
    DegenerateDemand(&'static str),

    /// A computation produced NaN or infinity.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// The state left the admissible envelope during integration.
    #[error("integration blow-up at t = {time:.4} s: {reason}")]
    IntegrationBlowup { time: f64, reason: String },

    /// Physical parameters violate a model invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Scenario or vehicle configuration rejected during validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// The pseudo-inverse (or another numeric kernel) failed.
    #[error("numeric failure in {0}")]
    Numeric(&'static str),
}

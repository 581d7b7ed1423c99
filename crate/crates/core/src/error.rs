use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// The integrator produced a non-finite state component.
    #[error("integration blew up: `{field}` became non-finite at t = {t} s")]
    IntegrationBlowup { field: &'static str, t: f64 },

    /// A kinematic limit (step rate, velocity, acceleration) was exceeded.
    #[error("constraint violated: {0}")]
    Constraint(String),

    /// A configuration record is inconsistent or not runnable.
    #[error("configuration error: {0}")]
    Config(String),

    /// A step schedule does not fit the simulation window.
    #[error("schedule error: {0}")]
    Schedule(String),

    /// A command is not allowed in the axis' present state.
    #[error("command rejected: {0}")]
    Rejected(String),

    /// A run did not finish within its simulated-time budget.
    #[error("timed out after {0} s of simulated time")]
    Timeout(f64),

    /// A text file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

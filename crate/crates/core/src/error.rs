use thiserror::Error;

/// Errors produced by the equation of state, the Riemann solvers, the grids
/// and the time integrators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("vacuum generated between left and right states: {0}")]
    Vacuum(String),

    #[error("star pressure {p_star} outside the shock branch domain ({reason})")]
    InvalidStarPressure { p_star: f64, reason: String },

    #[error("root finder did not converge after {iterations} iterations (p* = {p_star}, phi = {residual})")]
    NoConvergence {
        iterations: usize,
        p_star: f64,
        residual: f64,
    },

    #[error("degenerate wave speeds: {0}")]
    DegenerateSpeeds(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("output error: {0}")]
    Io(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("step failed at t = {time:.9e} s, cell {cell}: {reason}")]
    StepFailure { time: f64, cell: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

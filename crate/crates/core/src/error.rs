//! Error types shared by the numerical core.

use thiserror::Error;

/// Errors produced by the geometry, oracle, solver and integrator modules.
///
/// Payload values are carried as `f64` regardless of the working scalar so
/// the error type stays non-generic.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A standard deviation coordinate was zero or negative.
    #[error("block {block}: sigma must be positive, got {value}")]
    NonPositiveSigma { block: usize, value: f64 },

    /// A point or tangent vector had a block count that is not a positive
    /// multiple of three, or two shapes disagreed.
    #[error("invalid block structure: {0}")]
    BlockStructure(String),

    /// A parameter failed its positivity/range requirement.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Sectional curvature requested for a degenerate plane.
    #[error("sectional curvature plane needs two distinct coordinate indices, got ({0}, {1})")]
    DegeneratePlane(usize, usize),

    /// Coordinate index outside the 6N-dimensional chart.
    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    /// Finite-difference step too large relative to the smallest sigma.
    #[error("finite-difference step {step} too large: must be < min sigma / 10 = {limit}")]
    StepTooLarge { step: f64, limit: f64 },

    /// Monte Carlo quadrature did not reach the requested statistical error.
    #[error(
        "Monte Carlo quadrature not converged: relative std error {rel_std_error} \
         exceeds threshold {threshold} (block {block})"
    )]
    QuadratureNotConverged {
        block: usize,
        rel_std_error: f64,
        threshold: f64,
    },

    /// Two discrete distributions live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Relative entropy undefined: p puts mass where the reference has none.
    #[error("relative entropy undefined: p[{index}] = {p} > 0 where reference is zero")]
    ZeroReferenceMass { index: usize, p: f64 },

    /// The moment constraints cannot be met on the supplied grid.
    #[error("infeasible constraints: {0}")]
    InfeasibleConstraints(String),

    /// The dual Newton iteration ran out of iterations.
    #[error("maxent Newton did not converge in {iterations} iterations; last residual {residual}")]
    NewtonDidNotConverge { iterations: usize, residual: f64 },

    /// Adaptive step size shrank below the resolvable scale.
    #[error("step size underflow at tau = {tau}: {context}")]
    StepSizeUnderflow { tau: f64, context: String },

    /// The integrator exceeded its step budget.
    #[error("integration exceeded {max_steps} steps at tau = {tau}")]
    MaxStepsExceeded { max_steps: usize, tau: f64 },

    /// A requested tolerance is outside the supported interval.
    #[error("tolerance {value} outside supported range [{lo}, {hi}]")]
    ToleranceOutOfRange { value: f64, lo: f64, hi: f64 },

    /// Log-linear fit requested on a window with non-positive samples.
    #[error("non-positive intensity {value} at tau = {tau} inside fit window")]
    NonPositiveIntensity { tau: f64, value: f64 },

    /// Fit window is empty or degenerate.
    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    /// Dense-tensor oracle restricted to small manifolds.
    #[error("dense curvature path supports N <= {max}, got N = {n}")]
    DenseCurvatureTooLarge { n: usize, max: usize },
}

/// Convenient result alias for the core crate.
pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by model construction, inversion and lattice oracles.
#[derive(Debug, Error)]
pub enum FvError {
    /// Non-finite or otherwise malformed numeric input.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input sits exactly on a singularity of a special function.
    #[error("singular argument: {0}")]
    SingularArgument(String),

    /// Some product α_i β_j equals 1; the model is critical there.
    #[error("critical weight: alpha[{i}] * beta[{j}] = 1 exactly")]
    CriticalWeight { i: usize, j: usize },

    /// Products α_i β_j straddle 1, so neither regime applies.
    #[error("mixed regime: alpha[{i0}]*beta[{j0}] = {lo} < 1 < {hi} = alpha[{i1}]*beta[{j1}]")]
    MixedRegime {
        i0: usize,
        j0: usize,
        lo: f64,
        i1: usize,
        j1: usize,
        hi: f64,
    },

    /// Point outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Slope target lies outside the pure phase.
    #[error("slope ({s}, {t}) is outside the pure phase")]
    OutOfPhase { s: f64, t: f64 },

    /// Regime does not support the requested operation.
    #[error("regime error: {0}")]
    Regime(String),

    /// Iterative solver failed to converge.
    #[error("no convergence: {0}")]
    Convergence(String),

    /// Lattice size exceeds the enumeration cost guard.
    #[error("lattice too large: {0}")]
    SizeLimit(String),

    /// Edge occupations violate the five-vertex local rules.
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// Boundary heights admit no MNLP extension.
    #[error("infeasible boundary data: {0}")]
    InfeasibleBoundary(String),

    /// Finite-difference stencil exits the pure phase.
    #[error("stencil error: {0}")]
    Stencil(String),

    /// Envelope linear system is degenerate at this point.
    #[error("critical point: degenerate envelope system at u = {re} + {im}i")]
    CriticalPoint { re: f64, im: f64 },

    /// Parameter outside its admissible interval.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Config file rejected; line number is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type FvResult<T> = Result<T, FvError>;

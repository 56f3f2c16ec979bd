//! Error types shared across the crate.

use crate::newton_solver::SolveReport;

/// Errors produced by the solvers, field operations, and configuration
/// loading. Cone and convergence failures carry a witness (flat grid
/// index) so reports can point at the offending point.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Argument outside an operation's domain (bad m, index, vector length, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An eigenvalue vector left the operator cone.
    #[error("cone violation{}: {detail}", witness_suffix(*.witness))]
    ConeViolation {
        /// Flat grid index of the failing point, when the violation is pointwise.
        witness: Option<usize>,
        /// The failing inequality.
        detail: String,
    },

    /// Fields built on different grids were combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Malformed numerical data (non-Hermitian input, non-finite values, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Damped Newton could not recover; the report holds the partial history.
    #[error("solver diverged at grid point {witness}: {detail}")]
    Divergence {
        witness: usize,
        detail: String,
        report: Box<SolveReport>,
    },

    /// Iteration budget exhausted; the report holds the residual history.
    #[error("no convergence after {} iterations (residual {:.3e})", report.iterations, report.final_residual)]
    NonConvergence { report: Box<SolveReport> },

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Too few data points for a requested fit.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A verification property failed; the detail serializes the failing case.
    #[error("property failed: {0}")]
    PropertyFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn witness_suffix(witness: Option<usize>) -> String {
    match witness {
        Some(p) => format!(" at grid point {p}"),
        None => String::new(),
    }
}

impl Error {
    /// Exit code contract used by the CLI: 2 for validation problems,
    /// 3 for solver non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::GridMismatch(_) => 2,
            Error::Divergence { .. } | Error::NonConvergence { .. } => 3,
            _ => 1,
        }
    }
}

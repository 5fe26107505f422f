use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised while validating inputs or running a solver.
///
/// Agent indices in messages are zero-based positions in the instance.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("agent {agent}: {reason}")]
    InvalidAgent { agent: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("agent {agent}: cost matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { agent: usize, min_eigenvalue: f64 },

    #[error("agent {agent}: zero diagonal block")]
    ZeroDiagonalBlock { agent: usize },

    #[error("agent {agent}: zero coupling block for neighbor {neighbor}")]
    ZeroCouplingBlock { agent: usize, neighbor: usize },

    #[error("agent {agent}: box bounds must be finite")]
    InfiniteBound { agent: usize },

    #[error("agent {agent}: local solver stalled after {iterations} iterations (residual {residual:e})")]
    LocalSolverStalled {
        agent: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("power iteration did not converge after {iterations} iterations")]
    PowerIterationStalled { iterations: usize },

    #[error("agent {agent}: Lipschitz constant is zero, no constraint involves its neighborhood")]
    DegenerateLipschitz { agent: usize },

    #[error("safety factor {0} outside (0, 1]")]
    InvalidSafety(f64),

    #[error("link failure probability {0} outside [0, 1)")]
    InvalidFailureProbability(f64),

    #[error("link activation probability {0} outside (0, 1]")]
    InvalidActivation(f64),

    #[error("no communication edge between agents {0} and {1}")]
    UnknownEdge(usize, usize),

    #[error("KKT matrix is singular")]
    SingularKkt,

    #[error("infeasible: smallest attainable constraint residual is {residual:e}")]
    Infeasible { residual: f64 },

    #[error("oracle did not converge (gradient norm {residual:e})")]
    OracleStalled { residual: f64 },

    #[error("trace is missing {0}")]
    TraceIncomplete(&'static str),

    #[error("invalid power-flow case: {0}")]
    InvalidCase(String),
}

//! Error type shared by every module in the crate.

/// Everything here is a caller-visible failure mode; numeric helpers map
/// internal solver failures into these variants with context attached.
#[derive(Debug, thiserror::Error)]
pub enum EconError {
    /// An argument is outside the mathematical domain of the operation
    /// (negative hash power, zero difficulty, a premium below 1, …).
    #[error("domain error: {0}")]
    Domain(String),

    /// The free-entry problem has no solution for the given population
    /// (non-positive revenue, empty miner list, divergent response).
    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),

    /// An iterative solver hit its iteration budget before reaching its
    /// tolerance.
    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    /// A root finder could not bracket a sign change, or the requested root
    /// provably does not exist.
    #[error("no root: {0}")]
    NoRoot(String),

    /// A simulation exceeded its event budget before its stop rule fired.
    #[error("simulation event budget exceeded after {events} events")]
    BudgetExceeded { events: u64 },

    /// A batch replication failed; carries the replication index so sweep
    /// output can point at the offending run.
    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<EconError>,
    },
}

impl EconError {
    pub fn domain(msg: impl Into<String>) -> Self {
        EconError::Domain(msg.into())
    }
}

/// Shorthand used throughout the crate.
pub type Result<T> = std::result::Result<T, EconError>;

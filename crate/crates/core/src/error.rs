use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative eigensolver ran out of iterations.
    #[error(
        "eigensolver did not converge after {iterations} iterations (worst residual {worst_residual:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        residuals: Vec<f64>,
        worst_residual: f64,
    },

    /// The adaptive propagator kept shrinking its step without success.
    #[error("time step rejected repeatedly; last accepted time {last_accepted} ns")]
    StepRejection { last_accepted: f64 },

    /// Two dressed eigenvectors compete for the same unperturbed subspace.
    #[error("ambiguous dressed-state assignment: {0}")]
    AmbiguousOverlap(String),

    /// A phase scan cannot separate all correlator components.
    #[error("rank-deficient phase scan; unresolved components: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    /// Post-selection discarded every sample.
    #[error("post-selection discarded all {0} samples")]
    AllSamplesDiscarded(usize),

    /// A numerical quantity left its admissible range beyond tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

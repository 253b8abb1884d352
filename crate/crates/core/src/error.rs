use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the range where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: fields live on grids with {left} and {right} points")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("input field violates the declared {expected} parity (defect {defect:.3e})")]
    Parity { expected: &'static str, defect: f64 },

    /// Newton iteration did not reach the residual tolerance.
    #[error("Newton iteration did not converge in {iterations} steps (last residual {last:.3e})")]
    Convergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    /// The iteration collapsed onto the zero solution.
    #[error("iteration collapsed to the trivial solution (max |phi| = {amplitude:.3e}) at omega = {omega}")]
    TrivialSolution { omega: f64, amplitude: f64 },

    /// A continuation step converged onto a different branch (e.g. `-φ`).
    #[error("continuation step to omega = {omega} left the branch (overlap {overlap:.3e})")]
    BranchJump { omega: f64, overlap: f64 },

    #[error("continuation failed at omega = {omega}: {source}")]
    Continuation {
        omega: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("profile is not two-lobe: {0}")]
    Shape(String),

    #[error("near-singular sector system (condition estimate {condition:.3e}): {context}")]
    Singular { condition: f64, context: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("inconsistent spectral counts: {0}")]
    CountMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

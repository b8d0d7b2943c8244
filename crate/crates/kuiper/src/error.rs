use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("invertibility certification failed for n={n}: margin {margin:.3e} below {tol:.1e}")]
    Certification { n: usize, margin: f64, tol: f64 },

    #[error("primitive frame not found for n={n}: null cone spans rank {rank} of {needed}")]
    FrameNotFound { n: usize, rank: usize, needed: usize },

    #[error("frame is ill conditioned: gram condition {condition:.3e}")]
    IllConditioned { condition: f64 },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("solver stalled after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("under-resolved: frequency {mu:.3e} gives {points_per_period:.2} points per period, need {required}")]
    Nyquist { mu: f64, points_per_period: f64, required: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("stage {q} step {step}: {source}")]
    Stage {
        q: usize,
        step: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format { what, detail: detail.into() }
    }

    pub(crate) fn at_stage(self, q: usize, step: &'static str) -> Self {
        Error::Stage { q, step, source: Box::new(self) }
    }

    /// True for failures caused by the numerics rather than by the caller.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Certification { .. }
            | Error::FrameNotFound { .. }
            | Error::IllConditioned { .. }
            | Error::Solver(_)
            | Error::NotConverged { .. }
            | Error::Nyquist { .. }
            | Error::NonFinite(_) => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("stencil nodes too nonuniform near x = {x}: adjacent spacing ratio {ratio:.2} exceeds {limit}")]
    IllConditionedStencil { x: f64, ratio: f64, limit: f64 },

    #[error("stencil spec invalid: {0}")]
    BadStencil(String),

    #[error("grid with {points} points cannot host an order-{order} stencil for derivative {nu} (needs at least {needed} points)")]
    GridTooCoarse {
        points: usize,
        order: usize,
        nu: usize,
        needed: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unknown catalog problem '{0}' (known: mathieu, pruess, airy, laguerre, sine)")]
    UnknownProblem(String),

    #[error("unknown parameter '{param}' for problem '{problem}'")]
    UnknownParameter { problem: String, param: String },

    #[error("cannot transform problem to a finite interval: {0}")]
    UnsupportedTransformation(String),

    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("problem has an infinite endpoint; apply transform_to_finite before discretizing")]
    InfiniteInterval,

    #[error("coefficient {name}(x) evaluated to a non-finite value at x = {x}")]
    CoefficientEval { name: char, x: f64 },

    #[error("weight function w(x) = {value} is not positive at x = {x}")]
    NonPositiveWeight { x: f64, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular pivot in banded LU at elimination step {step}")]
    SingularPivot { step: usize },

    #[error("eigenvalue index k = {k} is beyond the {available} eigenvalues the bootstrap grid resolves; increase n0")]
    IndexOutOfRange { k: usize, available: usize },

    #[error("bootstrap spectrum computation failed to converge")]
    SpectrumFailure,

    #[error("vector is degenerate: every entry is below the sign-change threshold {threshold:e}")]
    DegenerateVector { threshold: f64 },

    #[error("inverse iteration did not converge within {iterations} iterations (last eigenvalue estimate {lambda})")]
    NonConvergence {
        lambda: f64,
        iterations: usize,
        last_iterate: Vec<f64>,
    },

    #[error("converged to the wrong eigenvalue branch: expected {expected} sign changes, found {found} (lambda = {lambda})")]
    WrongBranch {
        expected: usize,
        found: usize,
        lambda: f64,
    },

    #[error("order-{order} stage failed: {source}")]
    StageFailure {
        order: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
}

impl Error {
    pub(crate) fn at_stage(self, order: usize) -> Error {
        Error::StageFailure {
            order,
            source: Box::new(self),
        }
    }
}

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown built-in measure `{0}`")]
    UnknownBuiltin(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid spectral measure: {0}")]
    InvalidMeasure(String),

    #[error("degenerate process (single spectral atom): {0}")]
    Degenerate(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("non-discrete set of points with |r| = 1 near t = {0}; measure is likely degenerate")]
    NonDiscreteSingularSet(f64),

    #[error(
        "frequency grid too coarse for T_max = {t_max}: need n_freq >= {required}, got {given}"
    )]
    InsufficientFrequencies {
        t_max: f64,
        required: usize,
        given: usize,
    },

    #[error("winding refinement exhausted at t = {t} (path passes too close to the origin); retry with a smaller dt0")]
    WindingRefinement { t: f64 },

    #[error("too many failed sample paths: {failed} of {total}")]
    SimulationFailures { failed: usize, total: usize },

    #[error("zero sample variance")]
    ZeroVariance,

    #[error("{0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

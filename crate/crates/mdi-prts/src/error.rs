use thiserror::Error;

/// Errors shared across the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// sigma = 0 describes a static channel; the log-normal density is singular there.
    /// Callers must branch to the static-channel path instead.
    #[error("degenerate distribution: sigma = 0 has no log-normal density")]
    DegenerateDistribution,
    /// A transmittance outside (0, infinity) was passed to a density evaluation.
    #[error("domain error: {0}")]
    DomainError(String),
    /// The selection probability underflowed the configured floor; conditional
    /// expectations over this region are undefined.
    #[error("empty selection: region probability below underflow floor")]
    EmptySelection,
    /// A boundary-domain membership query fell outside the stored rate-map grid.
    #[error("out of grid: ({eta_a}, {eta_b}) not covered by the rate map")]
    OutOfGrid { eta_a: f64, eta_b: f64 },
    /// The decoy linear program has no feasible yield matrix. This indicates a
    /// physics-model bug or corrupted observables, not a physical outcome.
    #[error("inconsistent observables: decoy linear program infeasible ({0})")]
    InconsistentObservables(String),
    /// qz = 0 with tz > 0 cannot arise from any physical channel.
    #[error("inconsistent input: zero gain with nonzero error-gain")]
    InconsistentInput,
    /// The rate map is single-signed; there is no R = 0 contour to extract.
    #[error("no boundary: rate map does not change sign")]
    NoBoundary,
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("propagation diverged at step {step} (t = {time})")]
    PropagationDiverged { step: usize, time: f64 },

    #[error("time step {dt:e} exceeds the {bound_name} bound {bound:e}")]
    StabilityBound {
        dt: f64,
        bound: f64,
        bound_name: &'static str,
    },

    #[error("trajectory truncated at t = {time}: step fell below the minimum near a node")]
    TrajectoryTruncated { time: f64 },

    #[error(
        "loop vertex {vertex} lies in a node neighbourhood; deform the loop away from the node"
    )]
    LoopNearNode { vertex: usize },

    #[error(
        "rejection sampling acceptance {rate:.3e} is below 1e-4; \
         use the tabulated inverse-CDF sampler instead"
    )]
    SamplingInefficient { rate: f64 },

    #[error(
        "Gaussian limit needs every optimum occupation >= 10 (smallest is {smallest:.3}); \
         use the exact complexion weight instead"
    )]
    GaussianRegime { smallest: f64 },

    #[error("occupation deviations must sum to zero, got {sum:e}")]
    ConstraintViolation { sum: f64 },

    #[error("step produced a negative density after {halvings} halvings of dt")]
    NegativeDensity { halvings: u32 },

    #[error("ill-conditioned Bernoulli fit: {0}")]
    IllConditioned(String),

    #[error("density is not in the asymptotic single-mode regime: {0}; iterate further first")]
    NotAsymptotic(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

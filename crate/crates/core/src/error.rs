use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("noise variance must be finite and nonnegative, got {0}")]
    InvalidNoise(f64),

    #[error("transmissivity must lie in [0, 1], got {0}")]
    InvalidTransmissivity(f64),

    #[error("energy bound must be finite and nonnegative, got {0}")]
    InvalidEnergy(f64),

    #[error("vector has {vector} entries but the kernel is {kernel}x{kernel}")]
    DimensionMismatch { vector: usize, kernel: usize },

    #[error("truncation {requested} exceeds the configured cap {cap}")]
    TruncationCap { requested: usize, cap: usize },

    #[error("{context}: input contains a non-finite value")]
    NonFinite { context: &'static str },

    #[error("spectrum entry {index} is negative beyond tolerance: {value}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("spectrum sums to {0}, not 1 within 1e-10")]
    NotNormalized(f64),

    #[error("spectrum must have at least one entry")]
    EmptySpectrum,

    #[error("candidate violates the constraints by {residual}, beyond the {limit} gate")]
    InfeasibleCandidate { residual: f64, limit: f64 },

    #[error("energy {energy} is outside [{lo}, {hi}], the validity range of this solution family")]
    EnergyOutsideFamily { energy: f64, lo: f64, hi: f64 },

    #[error("this solution family requires strictly positive noise")]
    ZeroNoiseFamily,

    #[error("grid search is limited to truncation {max}, got {requested}")]
    GridTooLarge { requested: usize, max: usize },

    #[error("grid resolution must be one of 0.01, 0.005 or 0.001, got {0}")]
    InvalidResolution(f64),

    #[error("finite-difference step must lie in [1e-8, 1e-4], got {0}")]
    InvalidStep(f64),

    #[error("truncation {trunc} cannot hold a spectrum with energy {energy}")]
    TruncationBelowEnergy { trunc: usize, energy: f64 },

    #[error("gap target must lie in (0, 1), got {0}")]
    InvalidGapTarget(f64),

    #[error("fidelity must lie in [0, 1], got {0}")]
    InvalidFidelity(f64),

    #[error("restart count must be at least 1")]
    NoRestarts,
}

pub type Result<T> = std::result::Result<T, Error>;

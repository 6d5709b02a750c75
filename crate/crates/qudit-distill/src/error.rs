use thiserror::Error;

/// Error type shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("entry {entry} out of range for modulus {modulus}")]
    EntryOutOfRange { entry: u64, modulus: u64 },

    #[error("modulus must be >= 2, got {0}")]
    BadModulus(u64),

    #[error("all-zero difference vector: identical sequences must be handled by the caller")]
    ZeroDifference,

    #[error("enumeration over {count} vectors exceeds the brute-force bound 2^24")]
    EnumerationBound { count: u128 },

    #[error("index ({k},{l}) out of range for dimension {d}")]
    IndexOutOfRange { d: usize, k: usize, l: usize },

    #[error("total Hilbert dimension {dim} exceeds the oracle cap {cap}")]
    OracleCap { dim: usize, cap: usize },

    #[error("prime dimension required: {0} is composite")]
    PrimeRequired(u64),

    #[error("probabilities sum to {sum}, expected 1 within 1e-9")]
    NotNormalized { sum: f64 },

    #[error("negative probability {0}")]
    NegativeProbability(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid fidelity {0}: must lie in [0,1]")]
    InvalidFidelity(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dense verification failed for {context}: max deviation {deviation}")]
    VerificationFailed { context: String, deviation: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

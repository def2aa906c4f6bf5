//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building grids, evaluating norms,
/// decomposing martingales or running campaigns.
#[derive(Debug, Error)]
pub enum Error {
    /// Requested resolution exceeds the configured grid cap.
    #[error("resolution {requested} exceeds the grid cap {cap}")]
    ResolutionTooLarge { requested: u32, cap: u32 },

    /// A level index outside `0..=N`.
    #[error("level {level} out of range for resolution {resolution}")]
    LevelOutOfRange { level: u32, resolution: u32 },

    /// A value array whose length is not `2^N` (or not a power of two at all).
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    /// A value array whose length is not a power of two.
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    /// A NaN or infinite entry.
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    /// Two objects living on different grids were combined.
    #[error("grid mismatch: resolution {left} vs {right}")]
    GridMismatch { left: u32, right: u32 },

    /// A leaf or coefficient index outside the grid.
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    /// A stopping-time candidate whose level set `{tau = n}` splits an atom of `F_n`.
    #[error("stopping time not measurable: level {level}, atom {atom}")]
    NotMeasurable { level: u32, atom: usize },

    /// An adapted-process candidate whose entry `x_n` is not constant on atoms of `F_n`.
    #[error("process not adapted: level {level}, atom {atom}")]
    NotAdapted { level: u32, atom: usize },

    /// A negative entry where a nonnegative one is required.
    #[error("negative value {value} at index {index}")]
    NegativeValue { index: usize, value: f64 },

    /// The phi-spec or an input file could not be parsed.
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    /// A parameter outside its admissible range.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: String, message: String },

    /// Bisection did not terminate within its iteration budget.
    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    /// The Musielak-Orlicz function produced a non-finite value.
    #[error("phi is not finite at leaf {index}")]
    NonFinitePhi { index: usize },

    /// The numeric Legendre transform attained its supremum on the u-grid boundary.
    #[error("complementary supremum attained at the {side} end of the u-grid (t = {t})")]
    BoundaryAttained { t: f64, side: &'static str },

    /// A Musielak-Orlicz function violating a structural requirement.
    #[error("family defect: {0}")]
    FamilyDefect(String),

    /// No complementary function can be produced for this family.
    #[error("complementary function unavailable: {0}")]
    ComplementaryUnavailable(String),

    /// No exponent `q <= 64` passes the A_q test with the configured ceiling.
    #[error("A_infinity fails on sample (K_max = {k_max})")]
    AInfinityFails { k_max: f64 },

    /// A multiplier sequence violating predictability or the unit bound.
    #[error("invalid multiplier sequence: {0}")]
    InvalidMultiplier(String),

    /// Threshold of the weighted stopping time not above `sup gamma_0`.
    #[error("threshold {lambda} must exceed sup of gamma_0 = {gamma0}")]
    ThresholdTooSmall { lambda: f64, gamma0: f64 },

    /// A weight that is not strictly positive.
    #[error("weight not strictly positive at leaf {index}")]
    NonPositiveWeight { index: usize },

    /// A constructed atom failed its own validation (internal consistency guard).
    #[error("atom at level k = {k} failed validation: {message}")]
    AtomValidation { k: i32, message: String },

    /// The atoms do not sum back to the martingale.
    #[error("reconstruction error {error} at level {level}, leaf {index}")]
    Reconstruction {
        level: u32,
        index: usize,
        error: f64,
    },

    /// An unknown random law tag.
    #[error("unknown law `{0}`")]
    UnknownLaw(String),

    /// An unknown inequality name.
    #[error("unknown inequality `{0}`")]
    UnknownInequality(String),

    /// Hypotheses of an inequality are not met and strict mode is on.
    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),

    /// A campaign trial failed; carries the reproducing fingerprint.
    #[error("trial {trial} (seed {seed}, resolution {resolution}) failed: {source}")]
    TrialFailed {
        trial: usize,
        seed: u64,
        resolution: u32,
        source: Box<Error>,
    },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// CSV (de)serialization failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            message: message.into(),
        }
    }
}

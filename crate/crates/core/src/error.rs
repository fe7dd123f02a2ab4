use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subspace: {0}")]
    InvalidSpec(String),

    #[error("combinatorial count C({n}, {k}) overflows 128-bit arithmetic")]
    CountOverflow { n: u64, k: u64 },

    #[error("subspace too large: {dimension} lower states exceeds the limit of {limit}")]
    Capacity { dimension: u128, limit: u128 },

    #[error("state {state} does not belong to the {modes}-mode, {excitations}-excitation subspace")]
    StateNotInSubspace { state: String, modes: usize, excitations: u32 },

    #[error("position {position} out of range for the {sector} sector of size {size}")]
    OutOfRange { sector: &'static str, position: usize, size: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("coupling g{mode} is zero; the dark-state count assumes every mode couples to the atom")]
    ZeroCoupling { mode: usize },

    #[error("detunings are not degenerate (spread {spread:e}); pass the override flag to solve anyway")]
    NonDegenerateDetunings { spread: f64 },

    #[error("mode frequencies are not degenerate (spread {spread:e}); pass the override flag to check anyway")]
    NonDegenerateFrequencies { spread: f64 },

    #[error("pivot breakdown at row {row}: diagonal entry {value:e} is numerically zero")]
    PivotBreakdown { row: usize, value: f64 },

    #[error("vector {index} is linearly dependent on its predecessors (relative norm {ratio:e})")]
    RankDeficient { index: usize, ratio: f64 },

    #[error("dark-state count mismatch: expected {expected}, found {found}")]
    CountMismatch { expected: u128, found: usize },

    #[error("index out of range: {0}")]
    IndexRange(String),

    #[error("invalid tolerance policy: {0}")]
    InvalidTolerance(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("norm drift {drift:e} exceeds budget {budget:e} even at the minimum step {dt:e}")]
    DriftBudget { drift: f64, budget: f64, dt: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced anywhere in the oracle toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("instance text is empty")]
    EmptyInstance,
    #[error("zero entry at position {0}: a zero frequency carries no information")]
    ZeroEntry(usize),
    #[error("invalid integer token `{0}`")]
    InvalidToken(String),
    #[error("sum of instance values overflows 64 bits")]
    SumOverflow,
    #[error("instance has {n} values, the limit for this operation is {limit}")]
    InstanceTooLarge { n: usize, limit: usize },
    #[error("dynamic programming budget of {budget} cells exceeded (needed {needed})")]
    BudgetExceeded { budget: u64, needed: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("instance generation failed after {0} attempts")]
    GenerationFailed(usize),
    #[error("signal grids do not match")]
    GridMismatch,
    #[error("grid too coarse: dt = {dt:e} s cannot resolve {f_max} Hz at oversample {oversample}")]
    GridTooCoarse { dt: f64, f_max: f64, oversample: usize },
    #[error("sampling window [{start:e}, {end:e}] s is outside the simulated signal")]
    WindowOutOfRange { start: f64, end: f64 },
    #[error("sampling duration {duration:e} s is shorter than one alignment period {period:e} s")]
    DurationTooShort { duration: f64, period: f64 },
    #[error("instance bandwidth {needed} Hz exceeds multiplier bandwidth {f_star} Hz")]
    BandwidthExceeded { needed: f64, f_star: f64 },
    #[error("offset report has {got} stages, the cascade has {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("training label mismatch: {0}")]
    LabelMismatch(String),
    #[error("decision threshold is not separable (no band max {no_max}, yes band min {yes_min})")]
    NotSeparable { no_max: f64, yes_min: f64 },
    #[error("reduction magnitude needs {bits} bits, only 64 are available")]
    MagnitudeOverflow { bits: u32 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("oracle failed after fixing {} variable(s): {source}", prefix.len())]
    Oracle {
        prefix: Vec<bool>,
        #[source]
        source: Box<Error>,
    },
    #[error("oracle answers are inconsistent: extracted assignment does not satisfy the formula")]
    InconsistentOracle,
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

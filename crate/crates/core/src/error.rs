use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("base must be at least 2, got {0}")]
    InvalidBase(u32),
    #[error("depth must be at least 1, got {0}")]
    InvalidDepth(u32),
    #[error("digit {digit} out of range for base {base}")]
    DigitOutOfRange { digit: u32, base: u32 },
    #[error("{given} fractional digits exceed depth {depth}")]
    DepthExceeded { given: usize, depth: u32 },
    #[error("point out of range [0, 2): {0}")]
    OutOfRange(String),
    #[error("value {value} is not representable in base {base} at depth {depth}")]
    NotRepresentable { value: String, base: u32, depth: u32 },
    #[error("increment h = {0} outside (0, 1/r]")]
    IncrementOutOfRange(String),
    #[error("points use different base/depth: ({0}, {1}) vs ({2}, {3})")]
    Mismatch(u32, u32, u32, u32),
    #[error("index {index} exhausts the {depth} digits carried by the point")]
    DepthExhausted { index: u32, depth: u32 },
    #[error("term index must be at least 1")]
    ZeroIndex,
    #[error("memory parameter p = {0} must lie in (0, 1)")]
    InvalidMemory(f64),
    #[error("weight sequence violates the summability condition for base {base}: {reason}")]
    NotSummable { base: u32, reason: String },
    #[error("invalid step sequence: {0}")]
    InvalidSequence(String),
    #[error("period of the digit orbit exceeds {0} steps")]
    PeriodTooLong(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("report parse error: {0}")]
    Report(String),
}

pub type Result<T> = std::result::Result<T, Error>;

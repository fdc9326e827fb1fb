use thiserror::Error;

pub type Result<T> = std::result::Result<T, QctError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QctError {
    #[error("capacity exceeded: {context} needs {required} qubits but the cap is {cap}")]
    Capacity {
        context: String,
        required: usize,
        cap: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("cannot trace out every register; remaining scalar trace is {trace}")]
    ScalarTrace { trace: f64 },

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("invalid register layout: {0}")]
    InvalidLayout(String),

    #[error("op {index}: {reason}")]
    InvalidOp { index: usize, reason: String },

    #[error("op {index}: unsupported gate kind `{kind}`")]
    UnsupportedGate { index: usize, kind: String },

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("key {key} out of range for {bits} key bits")]
    KeyOutOfRange { key: u64, bits: usize },

    #[error("circuit still contains keyed placeholder gates; instantiate a key first")]
    UnresolvedKey,

    #[error("key enumeration over {key_bits} bits exceeds the budget of {budget} bits; use the sampled protocol instead")]
    BudgetExceeded { key_bits: usize, budget: usize },

    #[error("wrong side: {0}")]
    WrongSide(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl QctError {
    pub(crate) fn mismatch(context: impl Into<String>, expected: usize, found: usize) -> Self {
        QctError::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}

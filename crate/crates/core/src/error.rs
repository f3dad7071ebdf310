use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fewer samples than batches: n = {n}, m = {m}")]
    TooFewSamples { n: usize, m: usize },

    #[error("cannot compose a ledger that mixes privacy notions ({first} and {other})")]
    MixedBudgets {
        first: &'static str,
        other: &'static str,
    },

    #[error("cannot compose an empty ledger")]
    EmptyLedger,

    #[error("constant-weight code construction reached {achieved} of {target} codewords")]
    CodeTooSmall { achieved: usize, target: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

use thiserror::Error;

/// Errors raised while building or running a punctured TCM link.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("invalid puncture pattern: {0}")]
    InvalidPattern(String),

    #[error("state {state} out of range (code has {states} states)")]
    StateOutOfRange { state: usize, states: usize },

    #[error("coded length {len} is not a multiple of {n_out} output bits")]
    LengthNotMultiple { len: usize, n_out: usize },

    #[error("constellation bits per symbol must be in 1..=6, got {0}")]
    InvalidConstellation(usize),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid partition profile: {0}")]
    InvalidProfile(String),

    #[error("received {got} samples, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },

    #[error("block of {0} information bits is too large for exhaustive search (max 16)")]
    BlockTooLarge(usize),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

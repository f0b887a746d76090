use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// The Markov model cannot support the request (non-ergodic chain,
    /// zero-probability transition, ...).
    #[error("model error: {0}")]
    Model(String),
    /// No code in the parent family can realize the requested lengths.
    #[error("code construction failed: {0}")]
    Construction(String),
    /// Two (state, message) pairs were mapped to the same codeword.
    #[error("codeword collision between (state {first_state}, message {first_message}) and (state {second_state}, message {second_message})")]
    Collision {
        first_state: usize,
        first_message: usize,
        second_state: usize,
        second_message: usize,
    },
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("state {state} out of range for {states} states")]
    InvalidState { state: usize, states: usize },
    #[error("message {message} out of range for {messages} messages")]
    InvalidMessage { message: usize, messages: usize },
    /// Every hypothesis received zero probability.
    #[error("degenerate belief at packet {time}: {detail}")]
    Numeric { time: u64, detail: String },
}

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

use thiserror::Error;

/// Error for any of the line-oriented text formats this crate reads
/// (frame probabilities, segment lists, chunk plans, emission matrices,
/// transcripts, scoring pair lists). Lines are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} line {line}: {message}")]
pub struct ParseError {
    pub kind: &'static str,
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(kind: &'static str, line: usize, message: impl Into<String>) -> Self {
        ParseError { kind, line, message: message.into() }
    }
}

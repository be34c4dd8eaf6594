// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Transition direction across the enclave boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Untrusted -> trusted.
    Ecall,
    /// Trusted -> untrusted.
    Ocall,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Ecall => f.write_str("ecall"),
            Direction::Ocall => f.write_str("ocall"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

/// A secure value was about to leave the trusted side.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SecureValueEscape: secure value would leave the enclave via {direction} `{function}`: {detail}")]
pub struct GuardError {
    pub direction: Direction,
    pub function: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: i64, len: usize },
    #[error("`{name}` expects {expected} argument(s), got {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("division by zero")]
    DivisionByZero,
    #[error("call depth limit of {0} exceeded")]
    CallDepthExceeded(usize),
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Guard(#[from] GuardError),
    #[error("i/o: {0}")]
    Io(String),
    #[error("boundary: {0}")]
    Boundary(String),
}

impl EngineError {
    pub fn type_mismatch(msg: impl Into<String>) -> Self {
        EngineError::TypeMismatch(msg.into())
    }

    pub fn guard(&self) -> Option<&GuardError> {
        match self {
            EngineError::Guard(g) => Some(g),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("secure value present in boundary payload")]
    SecureValuePresent,
    #[error("unsupported type for serialization: {0}")]
    UnsupportedType(&'static str),
    #[error("malformed buffer: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no guest function executed during the instrumented run")]
    NothingExecuted,
    #[error("entry function `{0}` never ran")]
    EntryNotRun(String),
    #[error("no entry point: define `main` or add top-level statements")]
    NoEntry,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("function `{0}` is referenced but has no classification")]
    UnclassifiedFunction(String),
    #[error("classification names `{0}`, which the program does not define")]
    UnknownFunction(String),
    #[error("analysis report belongs to `{report}`, program is `{program}`")]
    ProgramMismatch { report: String, program: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("manifest side mismatch: expected {expected}, found {found}")]
    WrongSide { expected: String, found: String },
    #[error("manifests disagree on {0}")]
    Mismatch(String),
    #[error("stub `{name}` ({direction}) does not match a real function with the same signature")]
    StubSignature { name: String, direction: Direction },
    #[error("function `{0}` has no source text")]
    MissingSource(String),
    #[error("cannot parse partition source: {0}")]
    Parse(#[from] ParseError),
    #[error("global initialization failed: {0}")]
    GlobalInit(EngineError),
}

/// Umbrella error for the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// The guard violation that ended the run, if any.
    pub fn guard(&self) -> Option<&GuardError> {
        match self {
            Error::Engine(e) => e.guard(),
            Error::Analysis(AnalysisError::Engine(e)) => e.guard(),
            Error::Load(LoadError::GlobalInit(e)) => e.guard(),
            _ => None,
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        if self.guard().is_some() {
            return 3;
        }
        match self {
            Error::Parse(_) | Error::Analysis(_) | Error::Partition(_) => 2,
            Error::Engine(EngineError::Parse(_)) => 2,
            Error::Usage(_) => 64,
            _ => 1,
        }
    }
}

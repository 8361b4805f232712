use thiserror::Error;

use crate::encode::EncodeError;
use crate::engine::EngineError;
use crate::syntax::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("unknown interpreter {0:?}")]
    UnknownInterpreter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use lane_emden::{BubbleError, ConstantsError, DirectError, ExponentError, GreensError, ReducedError};
use thiserror::Error;

use crate::scenario::ConfigError;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error("bubble: {0}")]
    Bubble(#[from] BubbleError),
    #[error("constants: {0}")]
    Constants(#[from] ConstantsError),
    #[error("greens: {0}")]
    Greens(#[from] GreensError),
    #[error("reduced: {0}")]
    Reduced(#[from] ReducedError),
    #[error("direct: {0}")]
    Direct(#[from] DirectError),
    #[error("cannot write {0}: {1}")]
    Io(String, std::io::Error),
    #[error("strict mode: {0}")]
    Strict(String),
    #[error("thread pool: {0}")]
    Threads(String),
}

/// Process exit codes.
pub mod code {
    pub const OK: u8 = 0;
    pub const CHECK_FAILED: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const INADMISSIBLE: u8 = 3;
    pub const BUBBLE: u8 = 4;
    pub const CONSTANTS: u8 = 5;
    pub const GREENS: u8 = 6;
    pub const REDUCED: u8 = 7;
    pub const DIRECT: u8 = 8;
    pub const IO: u8 = 9;
    pub const STRICT: u8 = 10;
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) | AppError::Threads(_) => code::CONFIG,
            AppError::Exponent(_) | AppError::Bubble(BubbleError::Exponent(_)) => code::INADMISSIBLE,
            AppError::Bubble(_) => code::BUBBLE,
            AppError::Constants(_) => code::CONSTANTS,
            AppError::Greens(_) => code::GREENS,
            AppError::Reduced(_) => code::REDUCED,
            AppError::Direct(_) => code::DIRECT,
            AppError::Io(..) => code::IO,
            AppError::Strict(_) => code::STRICT,
        }
    }
}

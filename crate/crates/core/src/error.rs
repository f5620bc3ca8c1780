use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("evaluation at x = {x} produced a non-finite value")]
    Domain { x: f64 },
    #[error("invalid bracket: g({lo}) = {g_lo}, g({hi}) = {g_hi}")]
    InvalidBracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },
    #[error("no bracket found for the root at x = {x} (potential effectively vanishes nearby)")]
    BracketNotFound { x: f64 },
    #[error("quadrature on [{a}, {b}] failed: {msg}")]
    Quadrature { a: f64, b: f64, msg: String },
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("point {x} outside the range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("fundamental system: {0}")]
    Fss(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("divergent weighted norm: {0}")]
    DivergentNorm(String),
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("inversion of zero")]
    ZeroInverse,
    #[error("zero has no character value")]
    ZeroArgument,
    #[error("precision underflow: effective precision {have} below floor {floor}")]
    PrecisionUnderflow { have: u32, floor: u32 },
    #[error("insufficient precision: {0}")]
    Precision(String),
    #[error("fractional part of valuation {val} not representable at precision {prec}")]
    NotRepresentable { val: i64, prec: u32 },
    #[error("enumeration budget exceeded: {needed} > {budget}")]
    Budget { needed: u128, budget: u64 },
    #[error("level {level} exceeds precision {cap}")]
    LevelOverflow { level: u32, cap: u32 },
    #[error("invalid character: {0}")]
    Character(String),
    #[error("invalid representation: {0}")]
    Representation(String),
    #[error("case mismatch: {0}")]
    CaseMismatch(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("boundary character: {0}")]
    Boundary(String),
    #[error("ledger underdetermined: {0}")]
    Underdetermined(String),
    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

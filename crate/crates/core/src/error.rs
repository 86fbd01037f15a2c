use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("total density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("reaction denominator vanishes at s = {s}, p = {p}")]
    ZeroDenominator { s: f64, p: f64 },
    #[error("hatching factor omega_H = 1 makes the interior equilibrium degenerate")]
    DegenerateWolbachia,
    #[error("fitness cost must be positive, got {0}")]
    ZeroCost(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "non-finite value in field {field} at cell {cell} (x = {x}), time {time}; reduce dt or dx"
    )]
    NonFinite {
        field: usize,
        cell: usize,
        x: f64,
        time: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArpError {
    /// A spec or configuration is physically or structurally invalid.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// A formula was evaluated outside its domain of validity.
    #[error("domain error: {0}")]
    Domain(String),

    /// The integrator failed; `t` is the earliest problematic time.
    #[error("numerical failure at t = {t} us: {message}")]
    Numerics { t: f64, message: String },

    /// Configuration parsing or validation failure (key path included).
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ArpError>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type; variants map onto the CLI exit-code contract
/// (config → 2, numeric → 3, I/O → 4).
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside an operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iteration failed to converge within its cap.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A sampled field is too coarse for the requested operation.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Internal consistency assertion tripped (e.g. an expectation value with
    /// a non-negligible imaginary residue).
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Nonlinear fit failed.
    #[error("fit error: {0}")]
    Fit(String),

    /// A lookup (mode table, curve domain) missed.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// Requested coordinate outside a curve's domain.
    #[error("range error: {0}")]
    Range(String),

    /// Config-file parsing: names the key and the 1-based line.
    #[error("config error at line {line}, key `{key}`: {message}")]
    Config {
        key: String,
        line: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code for the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}

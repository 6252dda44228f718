//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("reducible permutation {0:?}")]
    Reducible(Vec<usize>),

    /// Winner and loser lengths coincide within the connection tolerance.
    #[error("connection at step {step}: |L_top - L_bottom| = {gap:e}")]
    Connection { step: usize, gap: f64 },

    /// The map left the domain where the requested operation is defined.
    #[error("not in domain at step {step}: {reason}")]
    NotInDomain { step: usize, reason: String },

    #[error("budget exceeded: needed {needed}, allowed {allowed}")]
    Budget { needed: u128, allowed: u128 },

    #[error("hypothesis violated at iterate {iterate}: {reason}")]
    Hypothesis { iterate: usize, reason: String },

    #[error("no shadowing parameter found; best escape depth {best_depth}")]
    NoShadow { best_depth: usize },

    #[error("Birkhoff sums look unbounded: sup grew by factor {growth:.4} from N={n} to N={n4}")]
    Boundedness { growth: f64, n: usize, n4: usize },

    #[error("degenerate density: min {min:e}")]
    DegenerateDensity { min: f64 },

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors meaning the orbit left the renormalisable neighbourhood.
    pub fn is_domain_exit(&self) -> bool {
        matches!(self, Error::Connection { .. } | Error::NotInDomain { .. })
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::Reducible(_) => 2,
            Error::Io(_) => 2,
            Error::Connection { .. }
            | Error::NotInDomain { .. }
            | Error::Budget { .. }
            | Error::Hypothesis { .. }
            | Error::NoShadow { .. }
            | Error::Boundedness { .. }
            | Error::DegenerateDensity { .. } => 3,
            Error::Consistency(_) => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

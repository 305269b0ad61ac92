use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("codebook of 2^{rate_bits} entries exceeds the cap of {cap} entries")]
    ResourceLimit { rate_bits: u32, cap: usize },

    /// The quantized direction of `user` lies in the span of the other on-users.
    #[error("degenerate zero-forcing geometry for user {user}")]
    DegenerateGeometry { user: usize },

    #[error("{on_users} on-users cannot be zero-forced with {antennas} antennas")]
    Infeasible { on_users: usize, antennas: usize },

    #[error("exhaustive search over {users} users exceeds the cap of {cap}")]
    EnumerationCap { users: usize, cap: usize },

    #[error("every candidate on-user set was degenerate")]
    AllDegenerate,

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Command errors carrying their process exit code.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 internal.

use std::fmt;

#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Data(anyhow::Error),
    Internal(anyhow::Error),
}

impl CmdError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CmdError::Usage(msg.into())
    }

    pub fn data(err: impl Into<anyhow::Error>) -> Self {
        CmdError::Data(err.into())
    }

    pub fn data_msg(msg: impl Into<String>) -> Self {
        CmdError::Data(anyhow::anyhow!(msg.into()))
    }

    pub fn internal(err: impl Into<anyhow::Error>) -> Self {
        CmdError::Internal(err.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => 1,
            CmdError::Data(_) => 2,
            CmdError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Usage(msg) => write!(f, "usage: {msg}"),
            CmdError::Data(e) => write!(f, "{e:#}"),
            CmdError::Internal(e) => write!(f, "internal: {e:#}"),
        }
    }
}

impl std::error::Error for CmdError {}

/// Treat fallible data-path results as exit-code-2 failures.
pub trait DataResult<T> {
    fn data(self) -> Result<T, CmdError>;
    fn data_ctx(self, ctx: &str) -> Result<T, CmdError>;
}

impl<T, E: Into<anyhow::Error>> DataResult<T> for Result<T, E> {
    fn data(self) -> Result<T, CmdError> {
        self.map_err(|e| CmdError::Data(e.into()))
    }

    fn data_ctx(self, ctx: &str) -> Result<T, CmdError> {
        self.map_err(|e| CmdError::Data(e.into().context(ctx.to_string())))
    }
}

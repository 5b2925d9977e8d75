use std::fmt;
use std::path::Path;

/// Stage that produced an error; shown as a prefix in messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Windgen,
    Simulate,
    Reconstruct,
    Metrics,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Windgen => "windgen",
            Stage::Simulate => "simulate",
            Stage::Reconstruct => "reconstruct",
            Stage::Metrics => "metrics",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 4,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("[{stage}] {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            stage,
            kind,
            message: message.into(),
        }
    }

    pub fn config(stage: Stage, message: impl Into<String>) -> Self {
        Self::new(stage, ErrorKind::Config, message)
    }

    pub fn io(stage: Stage, path: &Path, err: impl fmt::Display) -> Self {
        Self::new(stage, ErrorKind::Io, format!("{}: {err}", path.display()))
    }

    /// Library errors: domain violations in inputs are configuration
    /// problems, the rest are numerical failures.
    pub fn from_core(stage: Stage, err: lfgp::Error) -> Self {
        let kind = match err {
            lfgp::Error::Domain(_) => ErrorKind::Config,
            _ => ErrorKind::Numerical,
        };
        Self::new(stage, kind, err.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

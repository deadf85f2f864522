// SPDX-License-Identifier: MIT OR Apache-2.0

//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by every stage of the toolkit.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum CvError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (supported: {supported})")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("truncated file: needed {needed} bytes, found {available}")]
    Truncated { needed: usize, available: usize },

    #[error("header/payload disagreement: {0}")]
    LengthMismatch(String),

    #[error("malformed header: {0}")]
    Header(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("probe training diverged at epoch {epoch} (config: {config})")]
    Diverged { epoch: usize, config: String },

    #[error("placement failed for {stimulus_id} after {attempts} attempts")]
    Placement {
        stimulus_id: String,
        attempts: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<CvError>,
    },

    #[error("serialization error: {0}")]
    Serde(String),

    #[error("image encoding error: {0}")]
    Image(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CvError>;

impl CvError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a pipeline stage name.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Self::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

impl From<serde_json::Error> for CvError {
    fn from(e: serde_json::Error) -> Self {
        Self::Serde(e.to_string())
    }
}

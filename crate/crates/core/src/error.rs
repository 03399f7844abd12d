use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("expected {expected} channel(s), found {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error(
        "roi {roi_x},{roi_y} {roi_w}x{roi_h} exceeds frame bounds {frame_w}x{frame_h}"
    )]
    RoiOutOfBounds {
        roi_x: usize,
        roi_y: usize,
        roi_w: usize,
        roi_h: usize,
        frame_w: usize,
        frame_h: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("image is empty")]
    EmptyImage,

    #[error("reference frame is already set")]
    ReferenceAlreadySet,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("bad model snapshot: {0}")]
    Snapshot(String),

    #[error("no frames match {pattern} in {}", dir.display())]
    EmptySequence { dir: PathBuf, pattern: String },

    #[error("frame {index} is missing from the sequence")]
    MissingFrame { index: u64 },

    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_frame(self, index: usize) -> Self {
        Error::Frame {
            index,
            source: Box::new(self),
        }
    }
}

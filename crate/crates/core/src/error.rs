use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image stack is empty")]
    EmptyStack,

    #[error("frame {index} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("stack holds {images} images but {masks} masks")]
    CountMismatch { images: usize, masks: usize },

    #[error("frame index {t} outside 1..={n}")]
    FrameOutOfRange { t: usize, n: usize },

    #[error("label {label} not present in frame mask")]
    LabelAbsent { label: u32 },

    #[error("cost matrix entry ({row}, {col}) is not finite")]
    NonFiniteCost { row: usize, col: usize },

    #[error("brute-force assignment limited to min dimension {max}, got {found}")]
    OracleTooLarge { max: usize, found: usize },

    #[error("daughter label {label} in frame {frame} is referenced by more than one link")]
    DuplicateDaughter { frame: usize, label: u32 },

    #[error("mother label {label} in frame {frame} is referenced by more than one link")]
    DuplicateMother { frame: usize, label: u32 },

    #[error("cell label {label} in frame {frame} is not covered by any track")]
    UncoveredInstance { frame: usize, label: u32 },

    #[error("link refers to unknown label {label} in frame {frame}")]
    UnknownLabel { frame: usize, label: u32 },

    #[error("expected {expected} frame-pair assignments, got {found}")]
    AssignmentCount { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing frame {index} in {dir}")]
    MissingFrame { dir: PathBuf, index: String },

    #[error("no frames found in {0}")]
    NoFrames(PathBuf),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Tiff {
        path: PathBuf,
        #[source]
        source: tiff::TiffError,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

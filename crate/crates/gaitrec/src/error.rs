use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to decode image {path}: {source}")]
    ImageDecode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("failed to encode image {path}: {source}")]
    ImageEncode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("image has zero width or height")]
    EmptyImage,

    #[error("binarization threshold {0} outside (0, 1)")]
    InvalidThreshold(f64),

    #[error("resize target {width}x{height} has a zero dimension")]
    InvalidResizeTarget { width: usize, height: usize },

    #[error("sequence directory {path} holds {found} frames; at least {needed} required")]
    SequenceTooShort {
        path: PathBuf,
        found: usize,
        needed: usize,
    },

    #[error("frame size {found_width}x{found_height} does not match expected {width}x{height}")]
    FrameSizeMismatch {
        width: usize,
        height: usize,
        found_width: usize,
        found_height: usize,
    },

    #[error("silhouette pixels must be 0 or 1; found {0}")]
    NonBinaryPixel(u8),

    #[error("segment count {k} invalid for image height {height}")]
    InvalidSegmentCount { k: usize, height: usize },

    #[error("image has zero mass; moments are undefined")]
    ZeroMass,

    #[error("affine transform is degenerate (|det| = {det:e})")]
    DegenerateTransform { det: f64 },

    #[error("whitening requires at least 2 samples; got {0}")]
    InsufficientSamples(usize),

    #[error("requested {requested} whitened dimensions but only {available} directions carry variance above the floor")]
    InsufficientVarianceRank { requested: usize, available: usize },

    #[error("output dimensionality {0} outside 1..=10")]
    InvalidOutputDim(usize),

    #[error("whitened feature dimensionality mismatch: probe {probe}, gallery {gallery}")]
    DimensionMismatch { probe: usize, gallery: usize },

    #[error("identifier {0:?} is empty or contains whitespace")]
    InvalidId(String),

    #[error("feature vector contains a non-finite value")]
    NonFiniteFeature,

    #[error("duplicate enrollment for person {person} sequence {sequence}")]
    DuplicateSequence { person: String, sequence: String },

    #[error("gallery holds no sequences")]
    EmptyGallery,

    #[error("gallery is not finalized; call finalize (or enroll with finalization) first")]
    NotFinalized,

    #[error("gallery is finalized; no further enrollment is allowed")]
    AlreadyFinalized,

    #[error("unsupported gallery file version: {0:?}")]
    GalleryVersion(String),

    #[error("malformed gallery file at line {line}: {message}")]
    GalleryParse { line: usize, message: String },

    #[error("invalid walker parameters: {0}")]
    InvalidWalkerSpec(String),

    #[error("dataset root {path} holds no usable subjects")]
    EmptyDataset { path: PathBuf },

    #[error("invalid evaluation parameter: {0}")]
    InvalidEvalParam(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Helper for i/o errors that should carry the offending path.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

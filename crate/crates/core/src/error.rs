//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// IDX stream opened with the wrong magic number.
    #[error("bad IDX magic: expected 0x{expected:08x}, found 0x{found:08x}")]
    BadMagic { expected: u32, found: u32 },

    /// IDX stream shorter than its header declares.
    #[error("truncated IDX stream: need {expected} payload bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    /// IDX stream longer than its header declares.
    #[error("trailing bytes in IDX stream: expected {expected} payload bytes, found {found}")]
    TrailingBytes { expected: usize, found: usize },

    /// Label byte outside 0..=9.
    #[error("invalid label {value} at index {index} (labels must be 0-9)")]
    InvalidLabel { index: usize, value: u8 },

    /// Paired collections disagree on length.
    #[error("count mismatch: {left} vs {right}")]
    CountMismatch { left: usize, right: usize },

    /// Vector or matrix dimension differs from what the operation requires.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A required dataset file is absent (checked plain and .gz).
    #[error("missing dataset file: {path} (also tried {path}.gz)", path = path.display())]
    FileMissing { path: PathBuf },

    /// A label class has no samples, so its centroid is undefined.
    #[error("label {label} has no samples; cannot compute its centroid")]
    EmptyClass { label: u8 },

    /// An operation that needs at least one row received none.
    #[error("empty input: at least one row is required")]
    EmptyInput,

    /// Label outside the bank's label set.
    #[error("unknown label {label}")]
    UnknownLabel { label: u8 },

    /// Top-k rank outside 1..=10.
    #[error("invalid top-k value {k} (must be in 1..=10)")]
    InvalidTopK { k: usize },

    /// Plot emission requires a non-empty sweep.
    #[error("empty sweep: nothing to aggregate")]
    EmptySweep,

    /// Unsupported file format version.
    #[error("unsupported {what} version {found} (this build reads version {supported})")]
    UnsupportedVersion {
        what: &'static str,
        found: u32,
        supported: u32,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

//! MNIST IDX ingestion: bit-exact binary parsing, optional gzip, and
//! normalization to flat vectors in `[0, 1]`.
//!
//! IDX is MNIST's container format: a big-endian 32-bit magic number
//! (`0x00000803` for image files, `0x00000801` for label files), big-endian
//! 32-bit dimension fields, then an unsigned-byte payload.
//!
//! ```text
//! images: magic | count | rows | cols | count*rows*cols pixel bytes
//! labels: magic | count | count label bytes (each 0-9)
//! ```

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magic number of an IDX3 image stream.
pub const IMAGE_MAGIC: u32 = 0x0000_0803;
/// Magic number of an IDX1 label stream.
pub const LABEL_MAGIC: u32 = 0x0000_0801;
/// Flattened image dimension: 28 x 28.
pub const MNIST_DIM: usize = 784;
/// Digit classes 0-9.
pub const NUM_CLASSES: usize = 10;

const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// The four canonical MNIST file names (images/labels for train/test),
/// without the optional `.gz` suffix.
pub const CANONICAL_FILES: [&str; 4] = [TRAIN_IMAGES, TRAIN_LABELS, TEST_IMAGES, TEST_LABELS];

/// Raw decoded image set, untransformed pixel bytes in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImageSet {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl RawImageSet {
    /// Re-encodes the set as IDX3 bytes; inverse of [`parse_idx_images`].
    pub fn to_idx_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.pixels.len());
        out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
        out.extend_from_slice(&(self.count as u32).to_be_bytes());
        out.extend_from_slice(&(self.rows as u32).to_be_bytes());
        out.extend_from_slice(&(self.cols as u32).to_be_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Validated label sequence; every entry is in 0..=9.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    labels: Vec<u8>,
}

impl LabelSet {
    /// Wraps a label vector, rejecting entries outside 0..=9.
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        for (index, &value) in labels.iter().enumerate() {
            if value > 9 {
                return Err(Error::InvalidLabel { index, value });
            }
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Re-encodes the set as IDX1 bytes; inverse of [`parse_idx_labels`].
    pub fn to_idx_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.labels.len());
        out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        out.extend_from_slice(&(self.labels.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.labels);
        out
    }
}

/// Which MNIST split a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Test => write!(f, "test"),
        }
    }
}

/// Normalized dataset: one 784-component row per image, components in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub vectors: Array2<f32>,
    pub labels: LabelSet,
    pub split: Split,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn read_be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::Truncated {
            expected: end,
            found: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Parses a complete IDX3 image stream.
///
/// Total over arbitrary input: every byte sequence yields either a value or a
/// typed error. Extra bytes past the declared payload are rejected so a
/// concatenated or corrupt file cannot be silently half-read.
pub fn parse_idx_images(bytes: &[u8]) -> Result<RawImageSet> {
    let magic = read_be_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::BadMagic {
            expected: IMAGE_MAGIC,
            found: magic,
        });
    }
    let count = read_be_u32(bytes, 4)? as usize;
    let rows = read_be_u32(bytes, 8)? as usize;
    let cols = read_be_u32(bytes, 12)? as usize;
    let expected = count
        .checked_mul(rows)
        .and_then(|n| n.checked_mul(cols))
        .ok_or(Error::Truncated {
            expected: usize::MAX,
            found: bytes.len().saturating_sub(16),
        })?;
    let payload = &bytes[16..];
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::TrailingBytes {
            expected,
            found: payload.len(),
        });
    }
    Ok(RawImageSet {
        count,
        rows,
        cols,
        pixels: payload.to_vec(),
    })
}

/// Parses a complete IDX1 label stream; labels must be 0-9.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<LabelSet> {
    let magic = read_be_u32(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::BadMagic {
            expected: LABEL_MAGIC,
            found: magic,
        });
    }
    let count = read_be_u32(bytes, 4)? as usize;
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(Error::Truncated {
            expected: count,
            found: payload.len(),
        });
    }
    if payload.len() > count {
        return Err(Error::TrailingBytes {
            expected: count,
            found: payload.len(),
        });
    }
    LabelSet::new(payload.to_vec())
}

/// Scales pixels to [0, 1] (component = pixel / 255) and flattens each image
/// to a 784-vector, pairing rows with their labels.
pub fn normalize(raw: &RawImageSet, labels: LabelSet, split: Split) -> Result<Dataset> {
    if raw.count != labels.len() {
        return Err(Error::CountMismatch {
            left: raw.count,
            right: labels.len(),
        });
    }
    let dim = raw.rows * raw.cols;
    if dim != MNIST_DIM {
        return Err(Error::DimensionMismatch {
            expected: MNIST_DIM,
            found: dim,
        });
    }
    let data: Vec<f32> = raw.pixels.iter().map(|&p| f32::from(p) / 255.0).collect();
    let vectors = Array2::from_shape_vec((raw.count, MNIST_DIM), data)
        .expect("pixel count validated against declared dimensions");
    Ok(Dataset {
        vectors,
        labels,
        split,
    })
}

/// Reads `<dir>/<name>`, falling back to `<dir>/<name>.gz`. Gzip handling is
/// decided by the `.gz` suffix and confirmed by the 0x1f8b magic bytes.
fn read_maybe_gzipped(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let plain = dir.join(name);
    if plain.is_file() {
        return Ok(fs::read(plain)?);
    }
    let gz = dir.join(format!("{name}.gz"));
    if gz.is_file() {
        let compressed = fs::read(&gz)?;
        if compressed.len() < 2 || compressed[0] != 0x1f || compressed[1] != 0x8b {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{} has a .gz suffix but no gzip magic", gz.display()),
            )));
        }
        let mut out = Vec::new();
        GzDecoder::new(&compressed[..]).read_to_end(&mut out)?;
        return Ok(out);
    }
    Err(Error::FileMissing { path: plain })
}

/// Loads one MNIST split from a directory holding the canonical files
/// (plain or gzipped), parses, and normalizes.
pub fn load_mnist(dir: impl AsRef<Path>, split: Split) -> Result<Dataset> {
    let dir = dir.as_ref();
    let (image_name, label_name) = match split {
        Split::Train => (TRAIN_IMAGES, TRAIN_LABELS),
        Split::Test => (TEST_IMAGES, TEST_LABELS),
    };
    let raw = parse_idx_images(&read_maybe_gzipped(dir, image_name)?)?;
    let labels = parse_idx_labels(&read_maybe_gzipped(dir, label_name)?)?;
    normalize(&raw, labels, split)
}

/// Reports which canonical files are present (plain or gzipped) in `dir`.
pub fn missing_files(dir: impl AsRef<Path>) -> Vec<PathBuf> {
    let dir = dir.as_ref();
    CANONICAL_FILES
        .iter()
        .filter(|name| {
            !dir.join(name).is_file() && !dir.join(format!("{name}.gz")).is_file()
        })
        .map(|name| dir.join(name))
        .collect()
}

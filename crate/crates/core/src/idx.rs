//! Reader (and fixture writer) for the big-endian IDX format used by MNIST
//! and its relatives.

use std::path::Path;

use crate::data::LabeledExample;
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn idx_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Idx {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| idx_error(path, "truncated header"))
}

/// Parse an image file: returns (count, rows, cols, pixels).
pub fn parse_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    let magic = read_u32(bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(idx_error(
            path,
            format!("bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        ));
    }
    let count = read_u32(bytes, 4, path)? as usize;
    let rows = read_u32(bytes, 8, path)? as usize;
    let cols = read_u32(bytes, 12, path)? as usize;
    let expected = count * rows * cols;
    let payload = &bytes[16..];
    if payload.len() != expected {
        return Err(idx_error(
            path,
            format!(
                "truncated or oversized payload: {} bytes, header declares {expected}",
                payload.len()
            ),
        ));
    }
    Ok((count, rows, cols, payload.to_vec()))
}

pub fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(idx_error(
            path,
            format!("bad magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        ));
    }
    let count = read_u32(bytes, 4, path)? as usize;
    let payload = &bytes[8..];
    if payload.len() != count {
        return Err(idx_error(
            path,
            format!(
                "truncated or oversized payload: {} bytes, header declares {count}",
                payload.len()
            ),
        ));
    }
    Ok(payload.to_vec())
}

/// Load an image/label pair. Pixels are scaled to [0, 1] and flattened
/// row-major.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Vec<LabeledExample>> {
    let image_bytes =
        std::fs::read(images_path).map_err(|e| idx_error(images_path, e.to_string()))?;
    let label_bytes =
        std::fs::read(labels_path).map_err(|e| idx_error(labels_path, e.to_string()))?;
    let (count, rows, cols, pixels) = parse_images(&image_bytes, images_path)?;
    let labels = parse_labels(&label_bytes, labels_path)?;
    if labels.len() != count {
        return Err(idx_error(
            labels_path,
            format!("count mismatch: {count} images but {} labels", labels.len()),
        ));
    }
    let size = rows * cols;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let x = pixels[i * size..(i + 1) * size]
                .iter()
                .map(|&p| p as f64 / 255.0)
                .collect();
            LabeledExample::hard(x, y as usize)
        })
        .collect())
}

/// Serialize images in IDX layout (for fixtures and round-trip tests).
pub fn encode_images(rows: usize, cols: usize, images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGES_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for image in images {
        out.extend_from_slice(image);
    }
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

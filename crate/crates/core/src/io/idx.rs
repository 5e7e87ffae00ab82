//! MNIST IDX container: big-endian magic, big-endian `u32` dimensions, raw bytes.

use std::io::Cursor;

use byteorder::{BigEndian, ReadBytesExt};
use thiserror::Error;

use crate::codec::ImageU8;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdxError {
    #[error("bad magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic { found: u32, expected: u32 },
    #[error("file truncated: need {expected} bytes, have {actual}")]
    TruncatedFile { expected: u64, actual: u64 },
    #[error("dimension product overflows or describes zero-sized items: {0:?}")]
    DimensionOverflow(Vec<u32>),
    #[error("{extra} unexpected bytes after the payload")]
    TrailingBytes { extra: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxHeader {
    pub magic: u32,
    pub dims: Vec<u32>,
}

impl IdxHeader {
    pub fn header_len(&self) -> usize {
        4 + 4 * self.dims.len()
    }

    /// Payload bytes implied by the dimensions.
    pub fn payload_len(&self) -> Option<u64> {
        self.dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(u64::from(d)))
    }
}

/// Read the header for the given magic; the dimension count is the magic's low byte.
pub fn parse_idx_header(bytes: &[u8], expected_magic: u32) -> Result<IdxHeader, IdxError> {
    let truncated = |need: u64| IdxError::TruncatedFile {
        expected: need,
        actual: bytes.len() as u64,
    };
    let mut cur = Cursor::new(bytes);
    let magic = cur.read_u32::<BigEndian>().map_err(|_| truncated(4))?;
    if magic != expected_magic {
        return Err(IdxError::BadMagic {
            found: magic,
            expected: expected_magic,
        });
    }
    let ndims = (magic & 0xff) as usize;
    let header_len = 4 + 4 * ndims as u64;
    let dims = (0..ndims)
        .map(|_| cur.read_u32::<BigEndian>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| truncated(header_len))?;
    Ok(IdxHeader { magic, dims })
}

/// Payload slice after checking the total length matches the header exactly.
fn payload<'a>(bytes: &'a [u8], header: &IdxHeader) -> Result<&'a [u8], IdxError> {
    let body = header
        .payload_len()
        .ok_or_else(|| IdxError::DimensionOverflow(header.dims.clone()))?;
    let start = header.header_len() as u64;
    let expected = start
        .checked_add(body)
        .ok_or_else(|| IdxError::DimensionOverflow(header.dims.clone()))?;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(IdxError::TruncatedFile { expected, actual });
    }
    if actual > expected {
        return Err(IdxError::TrailingBytes {
            extra: actual - expected,
        });
    }
    Ok(&bytes[start as usize..])
}

/// Parse an image file (magic `0x00000803`) into row-major images.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<ImageU8>, IdxError> {
    let header = parse_idx_header(bytes, IMAGES_MAGIC)?;
    let (count, rows, cols) = (header.dims[0], header.dims[1] as usize, header.dims[2] as usize);
    let area = rows
        .checked_mul(cols)
        .ok_or_else(|| IdxError::DimensionOverflow(header.dims.clone()))?;
    if count > 0 && area == 0 {
        return Err(IdxError::DimensionOverflow(header.dims.clone()));
    }
    let data = payload(bytes, &header)?;
    Ok(data
        .chunks_exact(area.max(1))
        .take(count as usize)
        .map(|chunk| ImageU8::new(rows, cols, chunk.to_vec()).expect("chunk matches dims"))
        .collect())
}

/// Parse a label file (magic `0x00000801`).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, IdxError> {
    let header = parse_idx_header(bytes, LABELS_MAGIC)?;
    Ok(payload(bytes, &header)?.to_vec())
}

/// Serialize images as an IDX image file. All images must share dimensions.
pub fn write_idx_images(images: &[ImageU8]) -> Vec<u8> {
    let (rows, cols) = images.first().map_or((0, 0), |i| (i.rows(), i.cols()));
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    for d in [images.len(), rows, cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    for img in images {
        assert_eq!((img.rows(), img.cols()), (rows, cols), "mixed image sizes");
        out.extend_from_slice(img.as_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<u8> {
        let mut v = vec![0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2];
        v.extend_from_slice(&[0x00, 0x7f, 0xff, 0x40]);
        v
    }

    #[test]
    fn one_small_image() {
        let imgs = parse_idx_images(&sample()).unwrap();
        assert_eq!(imgs.len(), 1);
        assert_eq!((imgs[0].rows(), imgs[0].cols()), (2, 2));
        assert_eq!(imgs[0].as_bytes(), &[0, 127, 255, 64]);
    }

    #[test]
    fn empty_set() {
        let bytes = [0, 0, 8, 3, 0, 0, 0, 0, 0, 0, 0, 28, 0, 0, 0, 28];
        assert!(parse_idx_images(&bytes).unwrap().is_empty());
    }

    #[test]
    fn wrong_magic() {
        let labels = [0, 0, 8, 1, 0, 0, 0, 3, 5, 0, 4];
        assert!(matches!(parse_idx_images(&labels), Err(IdxError::BadMagic { found: 0x801, .. })));
        assert!(matches!(parse_idx_labels(&sample()), Err(IdxError::BadMagic { found: 0x803, .. })));
    }

    #[test]
    fn labels() {
        assert_eq!(parse_idx_labels(&[0, 0, 8, 1, 0, 0, 0, 3, 5, 0, 4]).unwrap(), vec![5, 0, 4]);
        assert!(matches!(
            parse_idx_labels(&[0, 0, 8, 1, 0, 0, 0, 3, 5, 0]),
            Err(IdxError::TruncatedFile { expected: 11, actual: 10 })
        ));
    }

    #[test]
    fn truncation_and_trailing() {
        let s = sample();
        for n in 0..s.len() {
            assert!(parse_idx_images(&s[..n]).is_err(), "prefix {n}");
        }
        let mut long = s.clone();
        long.push(1);
        assert_eq!(parse_idx_images(&long), Err(IdxError::TrailingBytes { extra: 1 }));
    }

    #[test]
    fn oversized_dims() {
        let bytes = [0, 0, 8, 3, 0xff, 0xff, 0xff, 0xff, 0, 0, 0, 0, 0, 0, 0, 0];
        assert!(matches!(parse_idx_images(&bytes), Err(IdxError::DimensionOverflow(_))));
        let bytes = [0, 0, 8, 3, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff];
        assert!(parse_idx_images(&bytes).is_err());
    }

    #[test]
    fn writer_matches_reader() {
        let imgs = parse_idx_images(&sample()).unwrap();
        assert_eq!(write_idx_images(&imgs), sample());
    }
}

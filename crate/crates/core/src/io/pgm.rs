//! Binary PGM (`P5`, maxval 255).

use std::io::{self, Write};

use thiserror::Error;

use crate::codec::ImageU8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PgmError {
    #[error("not a binary PGM (missing P5 magic)")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    BadHeader(String),
    #[error("unsupported maxval {0} (only 255)")]
    UnsupportedMaxval(u32),
    #[error("PGM payload has {actual} bytes, expected {expected}")]
    Truncated { expected: usize, actual: usize },
}

pub fn write_pgm<W: Write>(img: &ImageU8, mut sink: W) -> io::Result<()> {
    write!(sink, "P5\n{} {}\n255\n", img.cols(), img.rows())?;
    sink.write_all(img.as_bytes())?;
    sink.flush()
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32, PgmError> {
    let tok = next_token(bytes, pos).ok_or_else(|| PgmError::BadHeader(format!("missing {what}")))?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| PgmError::BadHeader(format!("bad {what} {:?}", String::from_utf8_lossy(tok))))
}

pub fn read_pgm(bytes: &[u8]) -> Result<ImageU8, PgmError> {
    if !bytes.starts_with(b"P5") {
        return Err(PgmError::BadMagic);
    }
    let mut pos = 2;
    if bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        return Err(PgmError::BadMagic);
    }
    let cols = header_number(bytes, &mut pos, "width")? as usize;
    let rows = header_number(bytes, &mut pos, "height")? as usize;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(PgmError::UnsupportedMaxval(maxval));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() && rows * cols > 0 {
        return Err(PgmError::Truncated {
            expected: rows * cols,
            actual: 0,
        });
    }
    let data = bytes.get(pos + 1..).unwrap_or(&[]);
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| PgmError::BadHeader(format!("{cols}x{rows} too large")))?;
    if data.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            actual: data.len(),
        });
    }
    Ok(ImageU8::new(rows, cols, data[..expected].to_vec()).expect("length checked"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_image_bytes() {
        let img = ImageU8::new(2, 2, vec![0, 127, 255, 64]).unwrap();
        let mut out = Vec::new();
        write_pgm(&img, &mut out).unwrap();
        // 11 header bytes, 4 raster bytes.
        assert_eq!(out.len(), 15);
        assert_eq!(&out[..11], b"P5\n2 2\n255\n");
        assert_eq!(&out[11..], &[0, 127, 255, 64]);
        assert_eq!(read_pgm(&out).unwrap(), img);
    }

    #[test]
    fn empty_image_header() {
        let mut out = Vec::new();
        write_pgm(&ImageU8::default(), &mut out).unwrap();
        assert_eq!(out, b"P5\n0 0\n255\n");
        assert_eq!(read_pgm(&out).unwrap(), ImageU8::default());
    }

    #[test]
    fn reads_comments_and_rejects_junk() {
        let bytes = b"P5\n# made by hand\n3 1\n255\n\x01\x02\x03";
        assert_eq!(read_pgm(bytes).unwrap().as_bytes(), &[1, 2, 3]);
        assert_eq!(read_pgm(b"P2\n1 1\n255\n1"), Err(PgmError::BadMagic));
        assert_eq!(read_pgm(b"P5\n1 1\n65535\n\0\0"), Err(PgmError::UnsupportedMaxval(65535)));
        assert!(matches!(read_pgm(b"P5\n2 2\n255\n\0"), Err(PgmError::Truncated { .. })));
        assert!(matches!(read_pgm(b"P5\nx 2\n255\n"), Err(PgmError::BadHeader(_))));
    }
}

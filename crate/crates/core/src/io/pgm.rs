//! Binary 8-bit PGM (`P5`, maxval 255).
//!
//! Header tokens may be separated by any whitespace and `#` comments running
//! to end of line. A single whitespace byte separates maxval from the raster,
//! which must end the file.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::texture::GrayImage;

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len()
                    && self.bytes[self.pos] != b'\n'
                    && self.bytes[self.pos] != b'\r'
                {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(parse_err(start, format!("expected {what}")));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        let v: usize = text
            .parse()
            .map_err(|_| parse_err(start, format!("{what} out of range")))?;
        if self.pos < self.bytes.len()
            && !self.bytes[self.pos].is_ascii_whitespace()
            && self.bytes[self.pos] != b'#'
        {
            return Err(parse_err(self.pos, format!("unexpected byte after {what}")));
        }
        Ok(v)
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 {
        return Err(parse_err(0, "file too short for a PGM magic number"));
    }
    match &bytes[..2] {
        b"P5" => {}
        b"P2" => {
            return Err(parse_err(
                0,
                "ASCII PGM (P2) is not supported; convert to P5",
            ))
        }
        _ => return Err(parse_err(0, "not a binary PGM (expected magic 'P5')")),
    }
    let mut h = Header { bytes, pos: 2 };
    if h.pos >= bytes.len() || !(bytes[h.pos].is_ascii_whitespace() || bytes[h.pos] == b'#') {
        return Err(parse_err(h.pos, "expected whitespace after magic number"));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval_at = {
        h.skip_space_and_comments();
        h.pos
    };
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(parse_err(maxval_at, "width and height must be positive"));
    }
    if maxval != 255 {
        return Err(parse_err(
            maxval_at,
            format!("maxval {maxval} unsupported (must be 255)"),
        ));
    }
    if h.pos >= bytes.len() {
        return Err(parse_err(h.pos, "missing whitespace before raster"));
    }
    let data_start = h.pos + 1;
    let len = width
        .checked_mul(height)
        .ok_or_else(|| parse_err(0, "image dimensions overflow"))?;
    let available = bytes.len() - data_start;
    if available < len {
        return Err(parse_err(
            bytes.len(),
            format!("truncated raster: expected {len} bytes, found {available}"),
        ));
    }
    if available > len {
        return Err(parse_err(
            data_start + len,
            format!("{} unexpected bytes after the raster", available - len),
        ));
    }
    GrayImage::new(width, height, bytes[data_start..].to_vec())
}

/// Canonical encoding: `P5\n<w> <h>\n255\n` followed by the raster.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.pixels());
    out
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_pgm(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}

//! Binary PGM (P5) with 8-bit samples.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::GrayImage;

/// Reads whitespace-separated header tokens, skipping `#` comments.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn token(&mut self) -> Option<&[u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, String> {
        let t = self.token().ok_or_else(|| format!("missing {what}"))?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("bad {what}"))
    }
}

fn decode(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut h = Header { bytes, pos: 0 };
    if h.token() != Some(b"P5") {
        return Err("not a binary PGM (P5)".into());
    }
    let w = h.number("width")?;
    let ht = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let start = h.pos + 1;
    let n = w * ht;
    if bytes.len() < start + n {
        return Err(format!("truncated raster: expected {n} bytes"));
    }
    let mut px = bytes[start..start + n].to_vec();
    if maxval != 255 {
        for p in &mut px {
            *p = ((u32::from(*p) * 255 + maxval as u32 / 2) / maxval as u32).min(255) as u8;
        }
    }
    GrayImage::new(w, ht, px).map_err(|e| e.to_string())
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    decode(bytes).map_err(Error::invalid)
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.pixels());
    out
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    decode(&bytes).map_err(|m| Error::file(path, m))
}

pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    fs::write(path, encode_pgm(image)).map_err(|e| Error::file(path, e))
}

//! Portable graymap (P2/P5) reading and writing, plus a P6 pixmap writer.

use std::fs;
use std::path::Path;

use crate::error::{io_err, Error, Result};

/// A single-channel image with integer samples in `0..=maxval`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major samples.
    pub samples: Vec<u16>,
}

/// Parse failure with the byte offset where it happened.
#[derive(Debug, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub msg: String,
}

impl ParseError {
    fn new(offset: usize, msg: impl Into<String>) -> Self {
        ParseError { offset, msg: msg.into() }
    }

    pub(crate) fn at(self, path: &Path) -> Error {
        Error::Format { path: path.to_path_buf(), offset: self.offset, msg: self.msg }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> std::result::Result<u32, ParseError> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ParseError::new(start, format!("expected {what}")))
    }
}

impl Graymap {
    pub fn parse(bytes: &[u8]) -> std::result::Result<Graymap, ParseError> {
        let binary = match bytes.get(..2) {
            Some(b"P5") => true,
            Some(b"P2") => false,
            _ => return Err(ParseError::new(0, "not a P2/P5 graymap")),
        };
        let mut cur = Cursor { bytes, pos: 2 };
        let width = cur.number("width")? as usize;
        let height = cur.number("height")? as usize;
        let maxval_at = cur.pos;
        let maxval = cur.number("maxval")?;
        if maxval == 0 || maxval > u16::MAX as u32 {
            return Err(ParseError::new(maxval_at, format!("maxval {maxval} outside 1..=65535")));
        }
        let n = width * height;
        let mut samples = Vec::with_capacity(n);
        if binary {
            // exactly one whitespace byte separates the header from the raster
            let start = cur.pos + 1;
            let wide = maxval > 255;
            let need = n * if wide { 2 } else { 1 };
            if bytes.len() < start + need {
                return Err(ParseError::new(bytes.len(), format!("raster truncated: need {need} bytes")));
            }
            let data = &bytes[start..start + need];
            if wide {
                samples.extend(data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])));
            } else {
                samples.extend(data.iter().map(|&b| b as u16));
            }
        } else {
            for _ in 0..n {
                samples.push(cur.number("sample")? as u16);
            }
        }
        for (i, &s) in samples.iter().enumerate() {
            if s as u32 > maxval {
                return Err(ParseError::new(i, format!("sample {i} = {s} exceeds maxval {maxval}")));
            }
        }
        Ok(Graymap { width, height, maxval: maxval as u16, samples })
    }

    pub fn read(path: &Path) -> Result<Graymap> {
        let bytes = fs::read(path).map_err(io_err(path))?;
        Graymap::parse(&bytes).map_err(|e| e.at(path))
    }

    /// Binary (P5) encoding.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        if self.maxval > 255 {
            out.extend(self.samples.iter().flat_map(|s| s.to_be_bytes()));
        } else {
            out.extend(self.samples.iter().map(|&s| s as u8));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(io_err(path))
    }
}

/// Binary (P6) RGB pixmap encoding.
pub fn ppm_bytes(width: usize, height: usize, rgb: &[[u8; 3]]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend(rgb.iter().flatten());
    out
}

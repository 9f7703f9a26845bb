use std::fs;
use std::path::Path;

use crate::error::{invalid, Error, Result};

/// 8-bit luma plane, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FramePlane {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl FramePlane {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(invalid!(
                "{width}x{height} plane needs {} samples, got {}",
                width * height,
                samples.len()
            ));
        }
        Ok(FramePlane {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        FramePlane {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [u8] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    pub fn same_dims(&self, other: &FramePlane) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Copies the `w`×`h` window at (`x0`, `y0`).
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<FramePlane> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(invalid!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width,
                self.height
            ));
        }
        let mut out = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            out.extend_from_slice(&self.samples[y * self.width + x0..y * self.width + x0 + w]);
        }
        FramePlane::new(w, h, out)
    }

    /// Extends to `w`×`h` (≥ current size) by replicating the last row/column.
    pub fn pad_replicate(&self, w: usize, h: usize) -> FramePlane {
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            let sy = y.min(self.height - 1);
            let row = &self.samples[sy * self.width..(sy + 1) * self.width];
            out.extend_from_slice(row);
            out.extend(std::iter::repeat_n(row[self.width - 1], w - self.width));
        }
        FramePlane {
            width: w,
            height: h,
            samples: out,
        }
    }
}

/// BT.601 limited-range luma from 8-bit RGB planes.
pub fn rgb_to_luma(r: &[u8], g: &[u8], b: &[u8], width: usize, height: usize) -> Result<FramePlane> {
    let n = width * height;
    if r.len() != n || g.len() != n || b.len() != n {
        return Err(invalid!(
            "RGB planes of {}/{}/{} samples for {width}x{height}",
            r.len(),
            g.len(),
            b.len()
        ));
    }
    let samples = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((&r, &g), &b)| {
            let y = 16.0 + (65.481 * r as f64 + 128.553 * g as f64 + 24.966 * b as f64) / 255.0;
            y.round().clamp(16.0, 235.0) as u8
        })
        .collect();
    FramePlane::new(width, height, samples)
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
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

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("PGM header: bad {what}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<FramePlane> {
    match bytes.get(..2) {
        Some(b"P5") => {}
        Some([b'P', d]) if d.is_ascii_digit() => {
            return Err(Error::UnsupportedFormat(format!(
                "P{} netpbm; only binary 8-bit PGM (P5) is supported",
                *d as char
            )))
        }
        _ => return Err(Error::Parse("not a PGM file".into())),
    }
    let mut r = HeaderReader { bytes, pos: 2 };
    let width = r.number("width")?;
    let height = r.number("height")?;
    let maxval = r.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("PGM maxval {maxval}, expected 255")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Parse("PGM with zero dimension".into()));
    }
    match bytes.get(r.pos) {
        Some(c) if c.is_ascii_whitespace() => r.pos += 1,
        _ => return Err(Error::Parse("PGM header not terminated by whitespace".into())),
    }
    let body = &bytes[r.pos..];
    let n = width * height;
    if body.len() < n {
        return Err(Error::Truncated(format!("PGM body has {} of {n} bytes", body.len())));
    }
    FramePlane::new(width, height, body[..n].to_vec())
}

pub fn encode_pgm(plane: &FramePlane) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", plane.width, plane.height).into_bytes();
    out.extend_from_slice(&plane.samples);
    out
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<FramePlane> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn save_pgm(plane: &FramePlane, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(plane)).map_err(|e| Error::io(path, e))
}

/// Y plane of the first frame of a raw planar 8-bit 4:2:0 file.
pub fn load_yuv420(path: impl AsRef<Path>, width: usize, height: usize) -> Result<FramePlane> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let luma = width * height;
    let frame = luma + 2 * width.div_ceil(2) * height.div_ceil(2);
    if width == 0 || height == 0 || bytes.len() < frame {
        return Err(invalid!(
            "{}: {} bytes cannot hold a {width}x{height} 4:2:0 frame ({frame} bytes)",
            path.display(),
            bytes.len()
        ));
    }
    FramePlane::new(width, height, bytes[..luma].to_vec())
}

//! Toy all-intra block codec.
//!
//! Per block, in raster order: DC prediction from the reconstructed row
//! above and column to the left, orthonormal 2-D DCT-II of the residual,
//! uniform quantization with step `2^((qp-4)/6)`, reconstruction clipped to
//! 8 bits. Blocks with no reconstructed neighbour predict from the frame
//! mean, which a real bitstream would carry in its header. An optional
//! deblocking pass smooths the two samples straddling each block edge when
//! the step across it is below `2·Qstep`.

use super::plane::FramePlane;
use crate::error::{invalid, Result};

pub const MAX_QP: i32 = 63;

pub fn qstep(qp: i32) -> Result<f64> {
    if !(0..=MAX_QP).contains(&qp) {
        return Err(invalid!("qp {qp} outside 0..={MAX_QP}"));
    }
    Ok(2f64.powf((qp - 4) as f64 / 6.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodecConfig {
    pub qp: i32,
    pub block_size: usize,
    pub dc_prediction: bool,
    pub deblock: bool,
}

impl CodecConfig {
    pub fn new(qp: i32) -> Self {
        CodecConfig {
            qp,
            block_size: 8,
            dc_prediction: true,
            deblock: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        qstep(self.qp)?;
        if ![4, 8, 16].contains(&self.block_size) {
            return Err(invalid!("block size {} not in {{4, 8, 16}}", self.block_size));
        }
        Ok(())
    }
}

/// Orthonormal DCT-II basis: `basis[k * n + i]`.
fn dct_basis(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n * n];
    for k in 0..n {
        let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        for i in 0..n {
            b[k * n + i] = scale * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
    }
    b
}

/// `out = B · x · Bᵀ` (forward) or `Bᵀ · x · B` (inverse) for an n×n block.
fn transform(basis: &[f64], n: usize, x: &[f64], inverse: bool, out: &mut [f64]) {
    let at = |k: usize, i: usize| if inverse { basis[i * n + k] } else { basis[k * n + i] };
    let mut tmp = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            tmp[r * n + c] = (0..n).map(|i| at(r, i) * x[i * n + c]).sum();
        }
    }
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = (0..n).map(|i| tmp[r * n + i] * at(c, i)).sum();
        }
    }
}

pub fn dct2d(block: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    transform(&dct_basis(n), n, block, false, &mut out);
    out
}

pub fn idct2d(coeffs: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    transform(&dct_basis(n), n, coeffs, true, &mut out);
    out
}

/// Decoded frame plus the quantized levels that a bitstream would carry.
#[derive(Clone, Debug)]
pub struct CodedFrame {
    pub recon: FramePlane,
    pub levels: Vec<i32>,
    /// Order-0 entropy of `levels` in bits per original pixel.
    pub bits_per_pixel: f64,
}

/// Smooths one edge `p1 p0 | q0 q1`; returns the new `(p0, q0)` or `None`
/// when the step is too large to be a coding artifact.
pub fn deblock_edge(p1: u8, p0: u8, q0: u8, q1: u8, step: f64) -> Option<(u8, u8)> {
    if ((p0 as f64) - (q0 as f64)).abs() >= 2.0 * step {
        return None;
    }
    let (p1, p0, q0, q1) = (p1 as u32, p0 as u32, q0 as u32, q1 as u32);
    Some((((p1 + 2 * p0 + q0 + 2) >> 2) as u8, ((p0 + 2 * q0 + q1 + 2) >> 2) as u8))
}

fn deblock(plane: &mut FramePlane, bs: usize, step: f64) {
    let (w, h) = (plane.width(), plane.height());
    let s = plane.samples_mut();
    for x in (bs..w).step_by(bs) {
        for y in 0..h {
            let i = y * w + x;
            if let Some((p0, q0)) = deblock_edge(s[i - 2], s[i - 1], s[i], s[i + 1], step) {
                s[i - 1] = p0;
                s[i] = q0;
            }
        }
    }
    for y in (bs..h).step_by(bs) {
        for x in 0..w {
            let i = y * w + x;
            if let Some((p0, q0)) = deblock_edge(s[i - 2 * w], s[i - w], s[i], s[i + w], step) {
                s[i - w] = p0;
                s[i] = q0;
            }
        }
    }
}

fn entropy_bits(levels: &[i32]) -> f64 {
    if levels.is_empty() {
        return 0.0;
    }
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    let n = levels.len() as f64;
    let mut bits = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        let p = j as f64 / n;
        bits -= j as f64 * p.log2();
        i += j;
    }
    bits
}

pub fn encode_decode_with_stats(plane: &FramePlane, config: &CodecConfig) -> Result<CodedFrame> {
    config.validate()?;
    let bs = config.block_size;
    let step = qstep(config.qp)?;
    let (w, h) = (plane.width(), plane.height());
    if w == 0 || h == 0 {
        return Err(invalid!("empty plane"));
    }
    let pw = w.div_ceil(bs) * bs;
    let ph = h.div_ceil(bs) * bs;
    let src = plane.pad_replicate(pw, ph);
    let frame_mean = {
        let s: u64 = src.samples().iter().map(|&v| v as u64).sum();
        (s as f64 / (pw * ph) as f64).round()
    };

    let basis = dct_basis(bs);
    let mut recon = FramePlane::filled(pw, ph, 0);
    let mut levels = Vec::with_capacity(pw * ph);
    let mut block = vec![0.0; bs * bs];
    let mut coeffs = vec![0.0; bs * bs];
    let mut rec = vec![0.0; bs * bs];

    for by in (0..ph).step_by(bs) {
        for bx in (0..pw).step_by(bs) {
            let pred = if config.dc_prediction {
                let r = recon.samples();
                let mut sum = 0u32;
                let mut count = 0u32;
                if by > 0 {
                    sum += r[(by - 1) * pw + bx..(by - 1) * pw + bx + bs].iter().map(|&v| v as u32).sum::<u32>();
                    count += bs as u32;
                }
                if bx > 0 {
                    sum += (by..by + bs).map(|y| r[y * pw + bx - 1] as u32).sum::<u32>();
                    count += bs as u32;
                }
                if count == 0 {
                    frame_mean
                } else {
                    (sum as f64 / count as f64).round()
                }
            } else {
                0.0
            };

            for y in 0..bs {
                for x in 0..bs {
                    block[y * bs + x] = src.get(bx + x, by + y) as f64 - pred;
                }
            }
            transform(&basis, bs, &block, false, &mut coeffs);
            for c in coeffs.iter_mut() {
                let level = (*c / step).round();
                levels.push(level as i32);
                *c = level * step;
            }
            transform(&basis, bs, &coeffs, true, &mut rec);
            let out = recon.samples_mut();
            for y in 0..bs {
                for x in 0..bs {
                    out[(by + y) * pw + bx + x] = (rec[y * bs + x] + pred).clamp(0.0, 255.0).round() as u8;
                }
            }
        }
    }

    if config.deblock {
        deblock(&mut recon, bs, step);
    }
    let recon = if (pw, ph) == (w, h) { recon } else { recon.crop(0, 0, w, h)? };
    let bits_per_pixel = entropy_bits(&levels) / (w * h) as f64;
    Ok(CodedFrame {
        recon,
        levels,
        bits_per_pixel,
    })
}

pub fn encode_decode(plane: &FramePlane, config: &CodecConfig) -> Result<FramePlane> {
    encode_decode_with_stats(plane, config).map(|c| c.recon)
}

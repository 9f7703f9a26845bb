use crate::codec::FramePlane;
use crate::error::{invalid, Result};
use crate::eval::psnr_from_mse;

pub const DEFAULT_PATCH: usize = 64;
pub const DEFAULT_STRIDE: usize = 16;
pub const DEFAULT_PSNR_LOW: f64 = 20.0;
pub const DEFAULT_PSNR_HIGH: f64 = 50.0;

/// A co-located reconstructed/original patch pair, row-major 8-bit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PatchRecord {
    pub qp: i32,
    pub size: usize,
    pub recon: Vec<u8>,
    pub orig: Vec<u8>,
}

impl PatchRecord {
    pub fn new(qp: i32, size: usize, recon: Vec<u8>, orig: Vec<u8>) -> Result<Self> {
        if recon.len() != size * size || orig.len() != size * size {
            return Err(invalid!(
                "{size}x{size} patch needs {} samples, got recon {} / orig {}",
                size * size,
                recon.len(),
                orig.len()
            ));
        }
        Ok(PatchRecord { qp, size, recon, orig })
    }

    pub fn mse(&self) -> f64 {
        let s: u64 = self
            .recon
            .iter()
            .zip(&self.orig)
            .map(|(&a, &b)| {
                let d = a as i64 - b as i64;
                (d * d) as u64
            })
            .sum();
        s as f64 / self.recon.len() as f64
    }

    /// PSNR of the reconstruction against the original, peak 255.
    pub fn psnr(&self) -> f64 {
        psnr_from_mse(self.mse(), 255.0)
    }
}

/// Number of patch positions along a dimension.
pub fn patch_count(dim: usize, size: usize, stride: usize) -> usize {
    if dim < size {
        0
    } else {
        (dim - size) / stride + 1
    }
}

/// Top-left anchored grid of `size`×`size` patches every `stride` pixels.
pub fn extract_patches(
    recon: &FramePlane,
    orig: &FramePlane,
    qp: i32,
    size: usize,
    stride: usize,
) -> Result<Vec<PatchRecord>> {
    if !recon.same_dims(orig) {
        return Err(invalid!(
            "recon {}x{} and orig {}x{} differ",
            recon.width(),
            recon.height(),
            orig.width(),
            orig.height()
        ));
    }
    if size == 0 || stride == 0 {
        return Err(invalid!("patch size and stride must be positive"));
    }
    let (w, h) = (recon.width(), recon.height());
    let (nx, ny) = (patch_count(w, size, stride), patch_count(h, size, stride));
    if nx == 0 || ny == 0 {
        log::warn!("{w}x{h} frame is smaller than a {size}x{size} patch; no patches extracted");
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(nx * ny);
    for py in 0..ny {
        for px in 0..nx {
            let (x0, y0) = (px * stride, py * stride);
            let grab = |p: &FramePlane| {
                let mut v = Vec::with_capacity(size * size);
                for y in y0..y0 + size {
                    v.extend_from_slice(&p.samples()[y * w + x0..y * w + x0 + size]);
                }
                v
            };
            out.push(PatchRecord {
                qp,
                size,
                recon: grab(recon),
                orig: grab(orig),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FilterCounts {
    pub kept: usize,
    pub rejected_low: usize,
    pub rejected_high: usize,
}

/// Keeps records with `low <= PSNR <= high`. Lossless patches count as
/// rejected high.
pub fn filter_by_psnr(records: Vec<PatchRecord>, low: f64, high: f64) -> (Vec<PatchRecord>, FilterCounts) {
    let mut counts = FilterCounts::default();
    let kept: Vec<_> = records
        .into_iter()
        .filter(|r| {
            let p = r.psnr();
            if p < low {
                counts.rejected_low += 1;
                false
            } else if p > high {
                counts.rejected_high += 1;
                false
            } else {
                true
            }
        })
        .collect();
    counts.kept = kept.len();
    (kept, counts)
}

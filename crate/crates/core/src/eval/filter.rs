use super::gate::{rd_gate, GateDecision, DEFAULT_LAMBDA_SCALE};
use crate::autograd::Tensor;
use crate::codec::FramePlane;
use crate::error::{invalid, Result};
use crate::net::QpalfWeights;

pub const MIN_FILTER_DIM: usize = 16;
const TILE: usize = 128;

#[derive(Clone, Debug)]
pub struct FilterOutcome {
    /// Frame to use downstream: the filtered frame unless the gate said no.
    pub output: FramePlane,
    pub filtered: FramePlane,
    pub flag: bool,
    pub decision: Option<GateDecision>,
}

pub fn plane_to_tensor(p: &FramePlane) -> Tensor<f32> {
    Tensor::new(
        vec![1, 1, p.height(), p.width()],
        p.samples().iter().map(|&v| v as f32 / 255.0).collect(),
    )
    .expect("plane dimensions")
}

/// Clips to [0, 1] and re-quantizes to 8 bits.
pub fn tensor_to_plane(t: &[f32], width: usize, height: usize) -> Result<FramePlane> {
    let samples = t.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    FramePlane::new(width, height, samples)
}

/// Network output over the whole frame in [0, 1] (unclipped), computed tile
/// by tile with a halo equal to the receptive radius so every tile sees the
/// same context as a full-frame pass.
pub fn infer_frame(plane: &FramePlane, qp: i32, weights: &QpalfWeights) -> Result<Vec<f32>> {
    let (w, h) = (plane.width(), plane.height());
    let halo = weights.config.receptive_radius();
    let mut out = vec![0.0f32; w * h];
    for ty in (0..h).step_by(TILE) {
        for tx in (0..w).step_by(TILE) {
            let (cw, ch) = (TILE.min(w - tx), TILE.min(h - ty));
            let x0 = tx.saturating_sub(halo);
            let y0 = ty.saturating_sub(halo);
            let x1 = (tx + cw + halo).min(w);
            let y1 = (ty + ch + halo).min(h);
            let win = plane.crop(x0, y0, x1 - x0, y1 - y0)?;
            let y = weights.infer(&plane_to_tensor(&win), &[qp])?;
            let ww = x1 - x0;
            for r in 0..ch {
                let src = (ty + r - y0) * ww + (tx - x0);
                out[(ty + r) * w + tx..(ty + r) * w + tx + cw].copy_from_slice(&y.data()[src..src + cw]);
            }
        }
    }
    Ok(out)
}

/// Filters a decoded frame. With `orig`, the frame-level gate decides
/// whether the filtered frame replaces the input.
pub fn filter_frame(
    plane: &FramePlane,
    qp: i32,
    weights: &QpalfWeights,
    orig: Option<&FramePlane>,
) -> Result<FilterOutcome> {
    if plane.width() < MIN_FILTER_DIM || plane.height() < MIN_FILTER_DIM {
        return Err(invalid!(
            "frame {}x{} smaller than {MIN_FILTER_DIM}x{MIN_FILTER_DIM}",
            plane.width(),
            plane.height()
        ));
    }
    let y = infer_frame(plane, qp, weights)?;
    let filtered = tensor_to_plane(&y, plane.width(), plane.height())?;
    match orig {
        None => Ok(FilterOutcome {
            output: filtered.clone(),
            filtered,
            flag: true,
            decision: None,
        }),
        Some(orig) => {
            let d = rd_gate(orig, plane, &filtered, qp, DEFAULT_LAMBDA_SCALE, 1)?;
            Ok(FilterOutcome {
                output: if d.enabled { filtered.clone() } else { plane.clone() },
                filtered,
                flag: d.enabled,
                decision: Some(d),
            })
        }
    }
}

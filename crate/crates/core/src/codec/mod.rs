//! Toy intra codec and luma image I/O.

mod plane;
mod sim;

pub use plane::{decode_pgm, encode_pgm, load_pgm, load_yuv420, rgb_to_luma, save_pgm, FramePlane};
pub use sim::{
    dct2d, deblock_edge, encode_decode, encode_decode_with_stats, idct2d, qstep, CodecConfig, CodedFrame, MAX_QP,
};

use std::path::Path;

use crate::error::{invalid, Result};

/// Loads a luma plane from `.pgm`, or from `.yuv` when `dims` is given.
pub fn load_luma(path: impl AsRef<Path>, dims: Option<(usize, usize)>) -> Result<FramePlane> {
    let path = path.as_ref();
    let ext = path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase());
    match (ext.as_deref(), dims) {
        (Some("yuv"), Some((w, h))) => load_yuv420(path, w, h),
        (Some("yuv"), None) => Err(invalid!("{}: raw YUV input needs --width and --height", path.display())),
        _ => load_pgm(path),
    }
}

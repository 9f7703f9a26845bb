use super::metrics::sse;
use crate::codec::FramePlane;
use crate::error::Result;

pub const DEFAULT_LAMBDA_SCALE: f64 = 0.57;

/// Frame-level on/off decision for the filter.
///
/// The flag costs the same bit whether it is on or off, so the rate term
/// cancels and the decision compares distortion only. λ is kept for
/// reporting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateDecision {
    pub enabled: bool,
    pub ssd_unfiltered: f64,
    pub ssd_filtered: f64,
    pub lambda: f64,
    pub flag_bits: u32,
}

impl GateDecision {
    /// RD cost reduction from enabling the filter.
    pub fn cost_reduction(&self) -> f64 {
        self.ssd_unfiltered - self.ssd_filtered
    }
}

pub fn lambda_for_qp(qp: i32, lambda_scale: f64) -> f64 {
    lambda_scale * 2f64.powf((qp - 12) as f64 / 3.0)
}

pub fn rd_gate(
    orig: &FramePlane,
    unfiltered: &FramePlane,
    filtered: &FramePlane,
    qp: i32,
    lambda_scale: f64,
    flag_bits: u32,
) -> Result<GateDecision> {
    let ssd_unfiltered = sse(orig, unfiltered)?;
    let ssd_filtered = sse(orig, filtered)?;
    let lambda = lambda_for_qp(qp, lambda_scale);
    // J = D + λ·R with an identical flag rate on both branches
    let cost_off = ssd_unfiltered + lambda * flag_bits as f64;
    let cost_on = ssd_filtered + lambda * flag_bits as f64;
    Ok(GateDecision {
        enabled: cost_off - cost_on > 0.0,
        ssd_unfiltered,
        ssd_filtered,
        lambda,
        flag_bits,
    })
}

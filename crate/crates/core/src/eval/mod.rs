//! Quality metrics, gain-rate distributions, BD-rate and the frame gate.

mod bdrate;
mod cdf;
mod filter;
mod gate;
mod metrics;
mod report;
mod timing;

pub use bdrate::{bd_rate, RdCurve, RdPoint};
pub use cdf::{gain_rate_cdf, CdfSeries};
pub use filter::{filter_frame, infer_frame, plane_to_tensor, tensor_to_plane, FilterOutcome, MIN_FILTER_DIM};
pub use gate::{lambda_for_qp, rd_gate, GateDecision, DEFAULT_LAMBDA_SCALE};
pub use metrics::{finite_mean, format_db, mse, psnr, psnr_from_mse, sse, ssim};
pub use report::{
    bd_report_csv, metrics_csv, parse_rd_csv, rd_csv, rd_curve, MetricsRow, RdRow, METRICS_HEADER, RD_HEADER,
};
pub use timing::{delta_time, TimingReport};

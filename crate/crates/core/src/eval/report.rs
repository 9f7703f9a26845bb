//! CSV schemas for evaluation outputs.

use std::fmt::Write as _;

use super::bdrate::{RdCurve, RdPoint};
use super::metrics::format_db;
use crate::error::{Error, Result};

/// One evaluated frame or patch.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub frame: String,
    pub qp: i32,
    pub psnr_in: f64,
    pub psnr_out: f64,
    pub ssim_in: f64,
    pub ssim_out: f64,
    pub gain_rate: f64,
    pub flag: bool,
}

pub const METRICS_HEADER: &str = "frame,qp,psnr_in,psnr_out,ssim_in,ssim_out,gain_rate,flag";

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{:.6},{:.6},{}",
            r.frame,
            r.qp,
            format_db(r.psnr_in),
            format_db(r.psnr_out),
            r.ssim_in,
            r.ssim_out,
            r.gain_rate,
            u8::from(r.flag)
        );
    }
    s
}

/// Average RD point at one QP.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdRow {
    pub qp: i32,
    pub bpp: f64,
    pub psnr: f64,
}

pub const RD_HEADER: &str = "qp,bpp,psnr";

pub fn rd_csv(rows: &[RdRow]) -> String {
    let mut s = format!("{RD_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.6},{:.6}", r.qp, r.bpp, r.psnr);
    }
    s
}

pub fn parse_rd_csv(text: &str) -> Result<Vec<RdRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == RD_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "RD CSV must start with {RD_HEADER:?}, got {:?}",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            let bad = || Error::Parse(format!("RD CSV row {}: {l:?}", i + 2));
            if f.len() != 3 {
                return Err(bad());
            }
            Ok(RdRow {
                qp: f[0].parse().map_err(|_| bad())?,
                bpp: f[1].parse().map_err(|_| bad())?,
                psnr: f[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn rd_curve(rows: &[RdRow]) -> Result<RdCurve> {
    RdCurve::new(rows.iter().map(|r| RdPoint { rate: r.bpp, psnr: r.psnr }).collect())
}

pub fn bd_report_csv(anchor_points: usize, test_points: usize, bd_rate_percent: f64) -> String {
    format!("metric,value\nanchor_points,{anchor_points}\ntest_points,{test_points}\nbd_rate_percent,{bd_rate_percent:.6}\n")
}

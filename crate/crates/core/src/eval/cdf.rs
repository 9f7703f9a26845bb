use crate::error::{invalid, Result};

/// Empirical cumulative distribution of PSNR gain rates.
#[derive(Clone, Debug, PartialEq)]
pub struct CdfSeries {
    pub points: Vec<(f64, f64)>,
}

/// Steps at each distinct value; the fraction counts every sample ≤ value.
pub fn gain_rate_cdf(values: &[f64]) -> Result<CdfSeries> {
    if values.is_empty() {
        return Err(invalid!("gain-rate CDF of an empty set"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(invalid!("gain-rate CDF input contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => points.push((v, frac)),
        }
    }
    Ok(CdfSeries { points })
}

impl CdfSeries {
    /// Fraction of samples at or below `x`.
    pub fn fraction_at(&self, x: f64) -> f64 {
        self.points.iter().take_while(|p| p.0 <= x).last().map_or(0.0, |p| p.1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("gain_rate,cum_fraction\n");
        for (g, f) in &self.points {
            s.push_str(&format!("{g:.6},{f:.6}\n"));
        }
        s
    }
}

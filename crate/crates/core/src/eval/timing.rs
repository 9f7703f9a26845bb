use crate::error::{invalid, Result};

/// Relative run-time increase `(T̂ − T) / T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimingReport {
    pub baseline_seconds: f64,
    pub augmented_seconds: f64,
    pub delta: f64,
}

pub fn delta_time(baseline: f64, augmented: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(invalid!("baseline time must be positive, got {baseline}"));
    }
    Ok((augmented - baseline) / baseline)
}

impl TimingReport {
    pub fn new(baseline_seconds: f64, augmented_seconds: f64) -> Result<Self> {
        Ok(TimingReport {
            baseline_seconds,
            augmented_seconds,
            delta: delta_time(baseline_seconds, augmented_seconds)?,
        })
    }

    pub fn percent(&self) -> f64 {
        self.delta * 100.0
    }
}

//! Bjøntegaard delta rate with classical cubic polynomial fits.

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdPoint {
    /// Bits per pixel.
    pub rate: f64,
    pub psnr: f64,
}

/// Rate–distortion curve sorted by rate, strictly increasing in both axes.
#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve {
    points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(mut points: Vec<RdPoint>) -> Result<Self> {
        if points.len() < 4 {
            return Err(invalid!("an RD curve needs at least 4 points, got {}", points.len()));
        }
        if points.iter().any(|p| !(p.rate > 0.0 && p.rate.is_finite() && p.psnr.is_finite())) {
            return Err(invalid!("RD points need positive finite rate and finite PSNR"));
        }
        points.sort_by(|a, b| a.rate.total_cmp(&b.rate));
        if points.windows(2).any(|w| !(w[1].rate > w[0].rate && w[1].psnr > w[0].psnr)) {
            return Err(invalid!("RD curve must be strictly increasing in rate and PSNR"));
        }
        Ok(RdCurve { points })
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    fn psnr_range(&self) -> (f64, f64) {
        (self.points[0].psnr, self.points[self.points.len() - 1].psnr)
    }
}

/// Least-squares cubic `y ≈ Σ c_i t^i` with `t = (x − shift) / scale`.
struct Cubic {
    coeffs: [f64; 4],
    shift: f64,
    scale: f64,
}

impl Cubic {
    fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len() as f64;
        let shift = xs.iter().sum::<f64>() / n;
        let scale = (xs.iter().map(|x| (x - shift).powi(2)).sum::<f64>() / n).sqrt().max(1e-12);
        // normal equations on the standardized abscissa
        let mut a = [[0.0f64; 5]; 4];
        for (&x, &y) in xs.iter().zip(ys) {
            let t = (x - shift) / scale;
            let pows = [1.0, t, t * t, t * t * t];
            for r in 0..4 {
                for c in 0..4 {
                    a[r][c] += pows[r] * pows[c];
                }
                a[r][4] += pows[r] * y;
            }
        }
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .expect("non-empty");
            if a[pivot][col].abs() < 1e-300 {
                return Err(Error::Evaluation("singular cubic fit".into()));
            }
            a.swap(col, pivot);
            for r in 0..4 {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..5 {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        let mut coeffs = [0.0; 4];
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c = a[i][4] / a[i][i];
        }
        Ok(Cubic { coeffs, shift, scale })
    }

    /// ∫ y dx over [lo, hi].
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        let anti = |x: f64| {
            let t = (x - self.shift) / self.scale;
            self.scale * self.coeffs.iter().enumerate().map(|(i, c)| c * t.powi(i as i32 + 1) / (i + 1) as f64).sum::<f64>()
        };
        anti(hi) - anti(lo)
    }
}

/// Average bitrate difference of `test` against `anchor` at equal PSNR, in
/// percent. Negative values are savings.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve) -> Result<f64> {
    let (a_lo, a_hi) = anchor.psnr_range();
    let (t_lo, t_hi) = test.psnr_range();
    let lo = a_lo.max(t_lo);
    let hi = a_hi.min(t_hi);
    if !(hi > lo) {
        return Err(Error::Evaluation(format!(
            "PSNR ranges [{a_lo:.3}, {a_hi:.3}] and [{t_lo:.3}, {t_hi:.3}] do not overlap"
        )));
    }
    let fit = |c: &RdCurve| {
        let xs: Vec<f64> = c.points.iter().map(|p| p.psnr).collect();
        let ys: Vec<f64> = c.points.iter().map(|p| p.rate.log10()).collect();
        Cubic::fit(&xs, &ys)
    };
    let fa = fit(anchor)?;
    let ft = fit(test)?;
    let avg = (ft.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
    Ok((10f64.powf(avg) - 1.0) * 100.0)
}

use crate::codec::FramePlane;
use crate::error::{invalid, Result};

pub fn sse(a: &FramePlane, b: &FramePlane) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(invalid!(
            "plane sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        ));
    }
    Ok(a.samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum())
}

pub fn mse(a: &FramePlane, b: &FramePlane) -> Result<f64> {
    Ok(sse(a, b)? / a.samples().len() as f64)
}

/// PSNR in dB from an MSE; identical inputs give `f64::INFINITY`.
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// PSNR with peak 255. Identical planes return the `f64::INFINITY` sentinel.
pub fn psnr(a: &FramePlane, b: &FramePlane) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?, 255.0))
}

/// Mean of the finite values; `None` if there are none.
pub fn finite_mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// "inf" for the identical-planes sentinel, fixed precision otherwise.
pub fn format_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable "valid" Gaussian filter: output is (w−10)×(h−10).
fn blur_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Single-scale SSIM: 11×11 Gaussian window (σ = 1.5), K1 = 0.01,
/// K2 = 0.03, range 255, averaged over every fully contained window.
pub fn ssim(a: &FramePlane, b: &FramePlane) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(invalid!("ssim: plane sizes differ"));
    }
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(invalid!("ssim needs planes of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"));
    }
    let k = gaussian_window();
    let fa: Vec<f64> = a.samples().iter().map(|&v| v as f64).collect();
    let fb: Vec<f64> = b.samples().iter().map(|&v| v as f64).collect();
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<f64>>();
    let mu_a = blur_valid(&fa, w, h, &k);
    let mu_b = blur_valid(&fb, w, h, &k);
    let aa = blur_valid(&prod(&fa, &fa), w, h, &k);
    let bb = blur_valid(&prod(&fb, &fb), w, h, &k);
    let ab = blur_valid(&prod(&fa, &fb), w, h, &k);
    let c1 = (0.01 * 255.0f64).powi(2);
    let c2 = (0.03 * 255.0f64).powi(2);
    let n = mu_a.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    Ok(total / n as f64)
}

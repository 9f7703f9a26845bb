//! Convolution kernels on raw N×C×H×W buffers.
//!
//! Stride-1 "same" convolutions lowered to GEMM through an im2col buffer.
//! Work is split per batch sample; weight-gradient partials are reduced in
//! sample order so sequential and parallel execution are bit-identical.

use super::tensor::Real;
use crate::par::Exec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub n: usize,
    pub cin: usize,
    pub cout: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
    pub pad: usize,
}

impl ConvGeom {
    fn hw(&self) -> usize {
        self.h * self.w
    }

    fn patch_len(&self) -> usize {
        self.cin * self.k * self.k
    }

    fn is_pointwise(&self) -> bool {
        self.k == 1 && self.pad == 0
    }
}

/// Unfolds one sample (`cin`×H×W) into a (`cin`·k·k)×(H·W) matrix.
fn im2col<T: Real>(g: &ConvGeom, x: &[T], col: &mut [T]) {
    let (h, w, k, pad) = (g.h, g.w, g.k, g.pad as isize);
    let hw = g.hw();
    for ci in 0..g.cin {
        let plane = &x[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let dst = &mut col[row * hw..(row + 1) * hw];
                let dy = ky as isize - pad;
                let dx = kx as isize - pad;
                for y in 0..h {
                    let sy = y as isize + dy;
                    let out_row = &mut dst[y * w..(y + 1) * w];
                    if sy < 0 || sy >= h as isize {
                        out_row.fill(T::zero());
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    let x0 = (-dx).max(0) as usize;
                    let x1 = (w as isize - dx.max(0)).max(0) as usize;
                    out_row[..x0.min(w)].fill(T::zero());
                    if x1 > x0 {
                        let s0 = (x0 as isize + dx) as usize;
                        out_row[x0..x1].copy_from_slice(&src[s0..s0 + (x1 - x0)]);
                    }
                    out_row[x1.max(x0).min(w)..].fill(T::zero());
                }
            }
        }
    }
}

/// Folds a column matrix back onto one sample, accumulating into `dx`.
fn col2im<T: Real>(g: &ConvGeom, col: &[T], dx: &mut [T]) {
    let (h, w, k, pad) = (g.h, g.w, g.k, g.pad as isize);
    let hw = g.hw();
    for ci in 0..g.cin {
        let plane = &mut dx[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = &col[row * hw..(row + 1) * hw];
                let dy = ky as isize - pad;
                let dxo = kx as isize - pad;
                for y in 0..h {
                    let sy = y as isize + dy;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let x0 = (-dxo).max(0) as usize;
                    let x1 = (w as isize - dxo.max(0)).max(0) as usize;
                    if x1 <= x0 {
                        continue;
                    }
                    let s0 = (x0 as isize + dxo) as usize;
                    let dst = &mut plane[sy as usize * w + s0..sy as usize * w + s0 + (x1 - x0)];
                    for (d, &v) in dst.iter_mut().zip(&src[y * w + x0..y * w + x1]) {
                        *d = *d + v;
                    }
                }
            }
        }
    }
}

/// Forward convolution; `out` has N×`cout`×H×W elements.
pub fn conv2d_forward<T: Real>(
    g: &ConvGeom,
    x: &[T],
    weight: &[T],
    bias: &[T],
    out: &mut [T],
    exec: Exec,
) {
    let hw = g.hw();
    let kk = g.patch_len();
    let in_len = g.cin * hw;
    exec.for_chunks_mut(out, g.cout * hw, |n, dst| {
        let xs = &x[n * in_len..(n + 1) * in_len];
        for (co, plane) in dst.chunks_mut(hw).enumerate() {
            plane.fill(bias[co]);
        }
        if g.is_pointwise() {
            T::gemm(g.cout, kk, hw, T::one(), weight, (kk as isize, 1), xs, (hw as isize, 1), T::one(), dst, (hw as isize, 1));
        } else {
            let mut col = vec![T::zero(); kk * hw];
            im2col(g, xs, &mut col);
            T::gemm(g.cout, kk, hw, T::one(), weight, (kk as isize, 1), &col, (hw as isize, 1), T::one(), dst, (hw as isize, 1));
        }
    });
}

pub struct ConvGrads<T> {
    pub input: Option<Vec<T>>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Backward convolution given the upstream gradient `dout`.
pub fn conv2d_backward<T: Real>(
    g: &ConvGeom,
    x: &[T],
    weight: &[T],
    dout: &[T],
    need_input: bool,
    exec: Exec,
) -> ConvGrads<T> {
    let hw = g.hw();
    let kk = g.patch_len();
    let in_len = g.cin * hw;
    let out_len = g.cout * hw;

    let per_sample = exec.map_range(g.n, |n| {
        let xs = &x[n * in_len..(n + 1) * in_len];
        let ds = &dout[n * out_len..(n + 1) * out_len];
        let owned_col;
        let col: &[T] = if g.is_pointwise() {
            xs
        } else {
            let mut c = vec![T::zero(); kk * hw];
            im2col(g, xs, &mut c);
            owned_col = c;
            &owned_col
        };
        // dW_n = dout_n · colᵀ
        let mut dw = vec![T::zero(); g.cout * kk];
        T::gemm(g.cout, hw, kk, T::one(), ds, (hw as isize, 1), col, (1, hw as isize), T::zero(), &mut dw, (kk as isize, 1));
        let db: Vec<T> = ds.chunks(hw).map(|p| p.iter().copied().sum()).collect();
        let dx = need_input.then(|| {
            // dcol = Wᵀ · dout_n
            let mut dcol = vec![T::zero(); kk * hw];
            T::gemm(kk, g.cout, hw, T::one(), weight, (1, kk as isize), ds, (hw as isize, 1), T::zero(), &mut dcol, (hw as isize, 1));
            if g.is_pointwise() {
                dcol
            } else {
                let mut dx = vec![T::zero(); in_len];
                col2im(g, &dcol, &mut dx);
                dx
            }
        });
        (dw, db, dx)
    });

    let mut weight_grad = vec![T::zero(); g.cout * kk];
    let mut bias_grad = vec![T::zero(); g.cout];
    let mut input_grad = need_input.then(|| Vec::with_capacity(g.n * in_len));
    for (dw, db, dx) in per_sample {
        for (a, b) in weight_grad.iter_mut().zip(dw) {
            *a = *a + b;
        }
        for (a, b) in bias_grad.iter_mut().zip(db) {
            *a = *a + b;
        }
        if let (Some(acc), Some(dx)) = (input_grad.as_mut(), dx) {
            acc.extend_from_slice(&dx);
        }
    }
    ConvGrads {
        input: input_grad,
        weight: weight_grad,
        bias: bias_grad,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(g: &ConvGeom, x: &[f64], wt: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; g.n * g.cout * g.h * g.w];
        for n in 0..g.n {
            for co in 0..g.cout {
                for y in 0..g.h {
                    for xx in 0..g.w {
                        let mut acc = b[co];
                        for ci in 0..g.cin {
                            for ky in 0..g.k {
                                for kx in 0..g.k {
                                    let sy = y as isize + ky as isize - g.pad as isize;
                                    let sx = xx as isize + kx as isize - g.pad as isize;
                                    if sy < 0 || sx < 0 || sy >= g.h as isize || sx >= g.w as isize {
                                        continue;
                                    }
                                    acc += x[((n * g.cin + ci) * g.h + sy as usize) * g.w + sx as usize]
                                        * wt[((co * g.cin + ci) * g.k + ky) * g.k + kx];
                                }
                            }
                        }
                        out[((n * g.cout + co) * g.h + y) * g.w + xx] = acc;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_on_narrow_frames() {
        for (h, w) in [(1, 1), (1, 4), (4, 1), (2, 2), (3, 5)] {
            let g = ConvGeom { n: 2, cin: 2, cout: 3, h, w, k: 3, pad: 1 };
            let x: Vec<f64> = (0..g.n * g.cin * h * w).map(|i| (i as f64 * 0.37).sin()).collect();
            let wt: Vec<f64> = (0..g.cout * g.cin * 9).map(|i| (i as f64 * 0.11).cos()).collect();
            let b = vec![0.1, -0.2, 0.3];
            let mut out = vec![0.0; g.n * g.cout * h * w];
            conv2d_forward(&g, &x, &wt, &b, &mut out, Exec::Sequential);
            let expect = naive(&g, &x, &wt, &b);
            for (a, e) in out.iter().zip(&expect) {
                assert!((a - e).abs() < 1e-12, "{h}x{w}: {a} vs {e}");
            }
        }
    }

    #[test]
    fn sequential_and_parallel_backward_identical() {
        let g = ConvGeom { n: 3, cin: 2, cout: 2, h: 5, w: 4, k: 3, pad: 1 };
        let x: Vec<f32> = (0..g.n * g.cin * 20).map(|i| (i as f32 * 0.3).sin()).collect();
        let wt: Vec<f32> = (0..g.cout * g.cin * 9).map(|i| (i as f32 * 0.7).cos()).collect();
        let dout: Vec<f32> = (0..g.n * g.cout * 20).map(|i| (i as f32 * 0.13).sin()).collect();
        let a = conv2d_backward(&g, &x, &wt, &dout, true, Exec::Sequential);
        let b = conv2d_backward(&g, &x, &wt, &dout, true, Exec::Parallel);
        assert_eq!(a.weight, b.weight);
        assert_eq!(a.bias, b.bias);
        assert_eq!(a.input, b.input);
    }
}

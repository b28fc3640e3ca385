//! Convolution kernels on `(N, C, H, W)` tensors via im2col and dgemm.

use rayon::prelude::*;

use super::Tensor;
use crate::error::{shape_err, Result};

/// Kernel size, stride and (possibly asymmetric) zero padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub kernel: usize,
    pub stride: usize,
    pub pad_lo: usize,
    pub pad_hi: usize,
}

impl ConvGeom {
    /// Padding `K - S`, split low/high, so a stride-`S` conv divides the size
    /// by `S` exactly and its transpose multiplies by `S`.
    pub fn same(kernel: usize, stride: usize) -> Self {
        let total = kernel.saturating_sub(stride);
        ConvGeom {
            kernel,
            stride,
            pad_lo: total / 2,
            pad_hi: total - total / 2,
        }
    }

    pub fn out_size(&self, n: usize) -> Result<usize> {
        let padded = n + self.pad_lo + self.pad_hi;
        if padded < self.kernel || self.stride == 0 {
            return Err(shape_err!("input size {n} too small for {self:?}"));
        }
        Ok((padded - self.kernel) / self.stride + 1)
    }

    /// Output size of the transposed convolution.
    pub fn transposed_size(&self, n: usize) -> Result<usize> {
        let full = (n.max(1) - 1) * self.stride + self.kernel;
        if n == 0 || full < self.pad_lo + self.pad_hi + 1 {
            return Err(shape_err!("input size {n} too small for transposed {self:?}"));
        }
        Ok(full - self.pad_lo - self.pad_hi)
    }
}

/// Output columns `[lo, hi)` whose tap `kx` lands inside a row of width `w`.
#[inline]
fn valid_range(kx: usize, w: usize, wo: usize, g: ConvGeom) -> (usize, usize) {
    let p = g.pad_lo;
    let lo = if kx >= p { 0 } else { (p - kx).div_ceil(g.stride) };
    let hi = if w + p > kx { ((w - 1 + p - kx) / g.stride + 1).min(wo) } else { 0 };
    (lo.min(wo), hi.max(lo.min(wo)))
}

fn im2col(x: &[f64], c: usize, h: usize, w: usize, g: ConvGeom, ho: usize, wo: usize) -> Vec<f64> {
    let k = g.kernel;
    let mut col = Vec::with_capacity(c * k * k * ho * wo);
    let zeros = |col: &mut Vec<f64>, n: usize| col.extend(std::iter::repeat_n(0.0, n));
    for ci in 0..c {
        let plane = &x[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let (lo, hi) = valid_range(kx, w, wo, g);
                for oy in 0..ho {
                    let iy = (oy * g.stride + ky) as isize - g.pad_lo as isize;
                    if iy < 0 || iy >= h as isize {
                        zeros(&mut col, wo);
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    zeros(&mut col, lo);
                    let first = lo * g.stride + kx - g.pad_lo;
                    if g.stride == 1 {
                        col.extend_from_slice(&src[first..first + (hi - lo)]);
                    } else {
                        col.extend((0..hi - lo).map(|j| src[first + j * g.stride]));
                    }
                    zeros(&mut col, wo - hi);
                }
            }
        }
    }
    col
}

fn col2im(col: &[f64], c: usize, h: usize, w: usize, g: ConvGeom, ho: usize, wo: usize, x: &mut [f64]) {
    let k = g.kernel;
    let hw = ho * wo;
    for ci in 0..c {
        let plane = &mut x[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = &col[((ci * k + ky) * k + kx) * hw..][..hw];
                let (lo, hi) = valid_range(kx, w, wo, g);
                for oy in 0..ho {
                    let iy = (oy * g.stride + ky) as isize - g.pad_lo as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    let src = &row[oy * wo + lo..oy * wo + hi];
                    let first = lo * g.stride + kx - g.pad_lo;
                    if g.stride == 1 {
                        for (d, v) in dst[first..first + src.len()].iter_mut().zip(src) {
                            *d += v;
                        }
                    } else {
                        for (j, v) in src.iter().enumerate() {
                            dst[first + j * g.stride] += v;
                        }
                    }
                }
            }
        }
    }
}

/// `op(A) · op(B)` for row-major `A` (m×k) and `B` (k×n) into a new buffer.
fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool) -> Vec<f64> {
    assert!(a.len() >= m * k && b.len() >= k * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    let mut c: Vec<f64> = Vec::with_capacity(m * n);
    // SAFETY: bounds checked above; strides describe the row-major layouts.
    // With beta = 0 the output is written, never read, so the spare capacity
    // is fully initialized before `set_len`.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, 0.0,
            c.spare_capacity_mut().as_mut_ptr() as *mut f64, n as isize, 1,
        );
        c.set_len(m * n);
    }
    c
}

fn check_weight(w: &Tensor, first: usize, k: usize) -> Result<usize> {
    match w.shape()[..] {
        [a, b, ky, kx] if a == first && ky == k && kx == k => Ok(b),
        _ => Err(shape_err!(
            "weight shape {:?} does not fit {} channels with kernel {}",
            w.shape(),
            first,
            k
        )),
    }
}

fn sum_in_order(parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    for p in parts {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    acc
}

fn bias_grad(dy: &Tensor) -> Vec<f64> {
    let (n, c, h, w) = dy.dims4().expect("4-d");
    let mut db = vec![0.0; c];
    for i in 0..n {
        for (ci, d) in db.iter_mut().enumerate() {
            let off = (i * c + ci) * h * w;
            *d += dy.data()[off..off + h * w].iter().sum::<f64>();
        }
    }
    db
}

fn add_bias(y: &mut [f64], bias: Option<&Tensor>, c: usize, hw: usize) {
    if let Some(b) = bias {
        for (ci, chunk) in y.chunks_mut(hw).enumerate() {
            let v = b.data()[ci % c];
            chunk.iter_mut().for_each(|x| *x += v);
        }
    }
}

/// Cross-correlation; `w` is `(O, C, K, K)`.
pub fn conv2d(x: &Tensor, w: &Tensor, bias: Option<&Tensor>, g: ConvGeom) -> Result<Tensor> {
    let (n, c, h, wd) = x.dims4()?;
    let o = w.shape().first().copied().unwrap_or(0);
    if check_weight(w, o, g.kernel)? != c {
        return Err(shape_err!("conv expects {} input channels, got {c}", w.shape()[1]));
    }
    let (ho, wo) = (g.out_size(h)?, g.out_size(wd)?);
    let ckk = c * g.kernel * g.kernel;
    let mut y = vec![0.0; n * o * ho * wo];
    y.par_chunks_mut(o * ho * wo).enumerate().for_each(|(i, yi)| {
        let col = im2col(&x.data()[i * c * h * wd..][..c * h * wd], c, h, wd, g, ho, wo);
        yi.copy_from_slice(&gemm(o, ckk, ho * wo, w.data(), false, &col, false));
    });
    add_bias(&mut y, bias, o, ho * wo);
    Tensor::from_vec(&[n, o, ho, wo], y)
}

/// Gradients of `conv2d` with respect to input, weight and bias.
pub fn conv2d_backward(x: &Tensor, w: &Tensor, g: ConvGeom, dy: &Tensor) -> (Tensor, Tensor, Vec<f64>) {
    let (n, c, h, wd) = x.dims4().expect("4-d");
    let (_, o, ho, wo) = dy.dims4().expect("4-d");
    let ckk = c * g.kernel * g.kernel;
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &x.data()[i * c * h * wd..][..c * h * wd];
            let dyi = &dy.data()[i * o * ho * wo..][..o * ho * wo];
            let col = im2col(xi, c, h, wd, g, ho, wo);
            let dw = gemm(o, ho * wo, ckk, dyi, false, &col, true);
            let col = gemm(ckk, o, ho * wo, w.data(), true, dyi, false);
            let mut dx = vec![0.0; c * h * wd];
            col2im(&col, c, h, wd, g, ho, wo, &mut dx);
            (dx, dw)
        })
        .collect();
    let (dxs, dws): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    let dx = Tensor::from_vec(x.shape(), dxs.concat()).expect("shape");
    let dw = Tensor::from_vec(w.shape(), sum_in_order(dws, o * ckk)).expect("shape");
    (dx, dw, bias_grad(dy))
}

/// Transposed convolution (adjoint of `conv2d`); `w` is `(C_in, C_out, K, K)`.
pub fn conv_transpose2d(x: &Tensor, w: &Tensor, bias: Option<&Tensor>, g: ConvGeom) -> Result<Tensor> {
    let (n, c, h, wd) = x.dims4()?;
    let o = check_weight(w, c, g.kernel)?;
    let (ho, wo) = (g.transposed_size(h)?, g.transposed_size(wd)?);
    if g.out_size(ho)? != h || g.out_size(wo)? != wd {
        return Err(shape_err!("transposed geometry {g:?} does not invert {h}x{wd}"));
    }
    let okk = o * g.kernel * g.kernel;
    let mut y = vec![0.0; n * o * ho * wo];
    y.par_chunks_mut(o * ho * wo).enumerate().for_each(|(i, yi)| {
        let xi = &x.data()[i * c * h * wd..][..c * h * wd];
        let col = gemm(okk, c, h * wd, w.data(), true, xi, false);
        col2im(&col, o, ho, wo, g, h, wd, yi);
    });
    add_bias(&mut y, bias, o, ho * wo);
    Tensor::from_vec(&[n, o, ho, wo], y)
}

pub fn conv_transpose2d_backward(
    x: &Tensor,
    w: &Tensor,
    g: ConvGeom,
    dy: &Tensor,
) -> (Tensor, Tensor, Vec<f64>) {
    let (n, c, h, wd) = x.dims4().expect("4-d");
    let (_, o, ho, wo) = dy.dims4().expect("4-d");
    let okk = o * g.kernel * g.kernel;
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &x.data()[i * c * h * wd..][..c * h * wd];
            let dyi = &dy.data()[i * o * ho * wo..][..o * ho * wo];
            let col = im2col(dyi, o, ho, wo, g, h, wd);
            let dx = gemm(c, okk, h * wd, w.data(), false, &col, false);
            let dw = gemm(c, h * wd, okk, xi, false, &col, true);
            (dx, dw)
        })
        .collect();
    let (dxs, dws): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    let dx = Tensor::from_vec(x.shape(), dxs.concat()).expect("shape");
    let dw = Tensor::from_vec(w.shape(), sum_in_order(dws, c * okk)).expect("shape");
    (dx, dw, bias_grad(dy))
}

//! Valid 2D convolution (stride 1, no padding) followed by batch norm.
//!
//! The convolution is evaluated a group of `g` kernel rows at a time. For an
//! input `[C][H][W]` and kernel width `KW` the column buffer holds, for every
//! `(row in group, c, s)` triple, the input shifted down by the row, left by
//! `s` and cropped to the output width `Wo`. Output rows then see kernel row
//! group `b` through the contiguous column block starting at `b * g * Wo`, so
//! each group is a single GEMM. The buffer is `g * C * KW` rows of roughly
//! `H * Wo`, far smaller than a full im2col matrix when `g` is small.

use crate::error::{NnError, Result};
use crate::scalar::{gemm, Scalar, View};
use crate::tensor::Tensor;

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Convolution kernels and bias plus the batch-norm parameters and running
/// statistics applied to its output.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T = f32> {
    /// `[out][in][kh][kw]`
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
    pub bn_gamma: Tensor<T>,
    pub bn_beta: Tensor<T>,
    pub bn_running_mean: Tensor<T>,
    pub bn_running_var: Tensor<T>,
}

impl<T: Scalar> ConvLayer<T> {
    /// Zero kernels and bias, identity batch norm.
    pub fn new(in_ch: usize, out_ch: usize, kh: usize, kw: usize) -> Self {
        Self {
            kernels: Tensor::zeros(vec![out_ch, in_ch, kh, kw]),
            bias: Tensor::zeros(vec![out_ch]),
            bn_gamma: Tensor::filled(vec![out_ch], T::one()),
            bn_beta: Tensor::zeros(vec![out_ch]),
            bn_running_mean: Tensor::zeros(vec![out_ch]),
            bn_running_var: Tensor::filled(vec![out_ch], T::one()),
        }
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn kernel_size(&self) -> (usize, usize) {
        (self.kernels.shape()[2], self.kernels.shape()[3])
    }

    pub fn validate(&self) -> Result<()> {
        let ks = self.kernels.shape();
        if ks.len() != 4 {
            return Err(NnError::Shape(format!("kernels must be 4-d, got {ks:?}")));
        }
        let o = ks[0];
        for (name, t) in [
            ("bias", &self.bias),
            ("bn_gamma", &self.bn_gamma),
            ("bn_beta", &self.bn_beta),
            ("bn_running_mean", &self.bn_running_mean),
            ("bn_running_var", &self.bn_running_var),
        ] {
            if t.shape() != [o] {
                return Err(NnError::Shape(format!("{name} has shape {:?}, expected [{o}]", t.shape())));
            }
        }
        if self.bn_running_var.values().iter().any(|&v| v < T::zero()) {
            return Err(NnError::Shape("negative running variance".into()));
        }
        Ok(())
    }

    /// Kernels regrouped as `[kh / g][out][g * in * kw]` for row groups of
    /// `g`, one GEMM operand per group.
    fn kernel_groups(&self, g: usize) -> Vec<T> {
        let [o, c, kh, kw] = dims4(&self.kernels);
        let k = g * c * kw;
        let mut out = vec![T::zero(); o * c * kh * kw];
        let w = self.kernels.values();
        for oi in 0..o {
            for ci in 0..c {
                for r in 0..kh {
                    let (rb, gi) = (r / g, r % g);
                    for s in 0..kw {
                        out[(rb * o + oi) * k + (gi * c + ci) * kw + s] = w[((oi * c + ci) * kh + r) * kw + s];
                    }
                }
            }
        }
        out
    }
}

fn dims4<T: Scalar>(t: &Tensor<T>) -> [usize; 4] {
    let s = t.shape();
    [s[0], s[1], s[2], s[3]]
}

/// `(n, c, h, w)` of a `[C][H][W]` or `[N][C][H][W]` tensor.
pub(crate) fn nchw<T: Scalar>(x: &Tensor<T>) -> Result<(usize, usize, usize, usize)> {
    match *x.shape() {
        [c, h, w] => Ok((1, c, h, w)),
        [n, c, h, w] => Ok((n, c, h, w)),
        ref s => Err(NnError::Shape(format!("expected [C][H][W] or [N][C][H][W], got {s:?}"))),
    }
}

fn reshape_like<T: Scalar>(x: &Tensor<T>, n: usize, c: usize, h: usize, w: usize, values: Vec<T>) -> Tensor<T> {
    let shape = if x.shape().len() == 3 { vec![c, h, w] } else { vec![n, c, h, w] };
    Tensor::new(shape, values).expect("consistent shape")
}

/// Smallest divisor of `kh` that gives GEMMs an inner dimension of at
/// least 128.
fn row_group(kh: usize, c: usize, kw: usize) -> usize {
    (1..=kh).find(|g| kh % g == 0 && g * c * kw >= 128).unwrap_or(kh)
}

struct ConvGeom {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    o: usize,
    kh: usize,
    kw: usize,
    ho: usize,
    wo: usize,
    /// kernel rows per GEMM
    g: usize,
}

impl ConvGeom {
    /// Inner GEMM dimension.
    fn k(&self) -> usize {
        self.g * self.c * self.kw
    }

    /// Input rows covered by the column buffer.
    fn hg(&self) -> usize {
        self.h - self.g + 1
    }

    fn cols_len(&self) -> usize {
        self.k() * self.hg() * self.wo
    }

    /// Column buffer `[g][C][KW][hg * Wo]`: input shifted down by the group
    /// row and left by the kernel column, cropped to the output width.
    fn fill_columns<T: Scalar>(&self, x: &[T], buf: &mut [T]) {
        let (hg, wo) = (self.hg(), self.wo);
        for gi in 0..self.g {
            for ci in 0..self.c {
                for s in 0..self.kw {
                    let q = (gi * self.c + ci) * self.kw + s;
                    let dst = &mut buf[q * hg * wo..(q + 1) * hg * wo];
                    for hh in 0..hg {
                        let start = (ci * self.h + hh + gi) * self.w + s;
                        dst[hh * wo..(hh + 1) * wo].copy_from_slice(&x[start..start + wo]);
                    }
                }
            }
        }
    }

    /// Adjoint of [`ConvGeom::fill_columns`], accumulating into `dx`.
    fn scatter_columns<T: Scalar>(&self, dcols: &[T], dx: &mut [T]) {
        let (hg, wo) = (self.hg(), self.wo);
        for gi in 0..self.g {
            for ci in 0..self.c {
                for s in 0..self.kw {
                    let q = (gi * self.c + ci) * self.kw + s;
                    let src = &dcols[q * hg * wo..(q + 1) * hg * wo];
                    for hh in 0..hg {
                        let start = (ci * self.h + hh + gi) * self.w + s;
                        for (d, &v) in dx[start..start + wo].iter_mut().zip(&src[hh * wo..(hh + 1) * wo]) {
                            *d += v;
                        }
                    }
                }
            }
        }
    }
}

fn geometry<T: Scalar>(x: &Tensor<T>, layer: &ConvLayer<T>) -> Result<ConvGeom> {
    layer.validate()?;
    let (n, c, h, w) = nchw(x)?;
    let (kh, kw) = layer.kernel_size();
    if c != layer.in_channels() {
        return Err(NnError::Shape(format!(
            "input has {c} channels, layer expects {}",
            layer.in_channels()
        )));
    }
    if h < kh || w < kw || kh == 0 || kw == 0 {
        return Err(NnError::Shape(format!("input {h}x{w} smaller than kernel {kh}x{kw}")));
    }
    Ok(ConvGeom {
        n,
        c,
        h,
        w,
        o: layer.out_channels(),
        kh,
        kw,
        ho: h - kh + 1,
        wo: w - kw + 1,
        g: row_group(kh, c, kw),
    })
}

/// Valid cross-correlation plus bias: `[C][H][W] -> [O][H-KH+1][W-KW+1]`,
/// batched when the input carries a leading batch axis.
pub fn conv2d_forward<T: Scalar>(x: &Tensor<T>, layer: &ConvLayer<T>) -> Result<Tensor<T>> {
    let g = geometry(x, layer)?;
    let wg = layer.kernel_groups(g.g);
    let k = g.k();
    let plane_in = g.c * g.h * g.w;
    let hw_out = g.ho * g.wo;
    let plane_out = g.o * hw_out;
    let mut cols = vec![T::zero(); g.cols_len()];
    let mut out = vec![T::zero(); g.n * plane_out];
    for ni in 0..g.n {
        g.fill_columns(&x.values()[ni * plane_in..(ni + 1) * plane_in], &mut cols);
        let y = &mut out[ni * plane_out..(ni + 1) * plane_out];
        for (oi, &b) in layer.bias.values().iter().enumerate() {
            y[oi * hw_out..(oi + 1) * hw_out].fill(b);
        }
        for rb in 0..g.kh / g.g {
            gemm(
                g.o,
                k,
                hw_out,
                T::one(),
                View::new(&wg[rb * g.o * k..(rb + 1) * g.o * k], k, 1),
                View::new(&cols[rb * g.g * g.wo..], g.hg() * g.wo, 1),
                T::one(),
                y,
                hw_out,
                1,
            );
        }
    }
    Ok(reshape_like(x, g.n, g.o, g.ho, g.wo, out))
}

/// Gradients of a convolution with respect to its input and parameters.
#[derive(Debug, Clone)]
pub struct ConvGrads<T = f32> {
    pub dx: Option<Tensor<T>>,
    /// Same layout as the kernels, `[out][in][kh][kw]`.
    pub dkernels: Vec<T>,
    pub dbias: Vec<T>,
}

/// Backward pass of [`conv2d_forward`] given the upstream gradient `dy`.
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor<T>,
    layer: &ConvLayer<T>,
    dy: &Tensor<T>,
    need_dx: bool,
) -> Result<ConvGrads<T>> {
    let g = geometry(x, layer)?;
    if dy.len() != g.n * g.o * g.ho * g.wo {
        return Err(NnError::Shape(format!("upstream gradient {:?} does not match the output", dy.shape())));
    }
    let wg = layer.kernel_groups(g.g);
    let k = g.k();
    let blocks = g.kh / g.g;
    let plane_in = g.c * g.h * g.w;
    let hw_out = g.ho * g.wo;
    let plane_out = g.o * hw_out;
    let stride = g.hg() * g.wo;
    let mut cols = vec![T::zero(); g.cols_len()];
    let mut dcols = if need_dx { vec![T::zero(); g.cols_len()] } else { Vec::new() };
    let mut dwg = vec![T::zero(); blocks * g.o * k];
    let mut dbias = vec![T::zero(); g.o];
    let mut dx = if need_dx { vec![T::zero(); g.n * plane_in] } else { Vec::new() };

    for ni in 0..g.n {
        let dyn_ = &dy.values()[ni * plane_out..(ni + 1) * plane_out];
        for (oi, db) in dbias.iter_mut().enumerate() {
            *db += dyn_[oi * hw_out..(oi + 1) * hw_out].iter().copied().sum();
        }
        g.fill_columns(&x.values()[ni * plane_in..(ni + 1) * plane_in], &mut cols);
        for rb in 0..blocks {
            // dW_rb += dY * cols_rb^T
            gemm(
                g.o,
                hw_out,
                k,
                T::one(),
                View::new(dyn_, hw_out, 1),
                View::new(&cols[rb * g.g * g.wo..], 1, stride),
                T::one(),
                &mut dwg[rb * g.o * k..(rb + 1) * g.o * k],
                k,
                1,
            );
        }
        if need_dx {
            dcols.fill(T::zero());
            for rb in 0..blocks {
                // dcols_rb += W_rb^T * dY
                gemm(
                    k,
                    g.o,
                    hw_out,
                    T::one(),
                    View::new(&wg[rb * g.o * k..(rb + 1) * g.o * k], 1, k),
                    View::new(dyn_, hw_out, 1),
                    T::one(),
                    &mut dcols[rb * g.g * g.wo..],
                    stride,
                    1,
                );
            }
            g.scatter_columns(&dcols, &mut dx[ni * plane_in..(ni + 1) * plane_in]);
        }
    }

    let mut dkernels = vec![T::zero(); dwg.len()];
    for oi in 0..g.o {
        for ci in 0..g.c {
            for r in 0..g.kh {
                let (rb, gi) = (r / g.g, r % g.g);
                for s in 0..g.kw {
                    dkernels[((oi * g.c + ci) * g.kh + r) * g.kw + s] = dwg[(rb * g.o + oi) * k + (gi * g.c + ci) * g.kw + s];
                }
            }
        }
    }
    Ok(ConvGrads {
        dx: need_dx.then(|| reshape_like(x, g.n, g.c, g.h, g.w, dx)),
        dkernels,
        dbias,
    })
}

/// Saved state of one batch-norm application.
#[derive(Debug, Clone)]
pub(crate) struct BnCache<T> {
    pub mode: Mode,
    pub xhat: Vec<T>,
    pub inv_std: Vec<T>,
    /// Batch mean and biased variance (train mode only).
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: usize,
}

/// Per-channel batch norm over `n` samples of `c` channels with `hw`
/// spatial elements each.
pub(crate) fn bn_forward<T: Scalar>(
    x: &[T],
    n: usize,
    c: usize,
    hw: usize,
    layer: &ConvLayer<T>,
    mode: Mode,
) -> Result<(Vec<T>, BnCache<T>)> {
    if c != layer.out_channels() || x.len() != n * c * hw {
        return Err(NnError::Shape(format!(
            "batch norm over {c} channels of {hw} elements does not fit {} values",
            x.len()
        )));
    }
    let count = n * hw;
    let eps = BN_EPS;
    let mut mean = vec![0.0f64; c];
    let mut var = vec![0.0f64; c];
    let mut inv_std = vec![T::zero(); c];
    match mode {
        Mode::Train => {
            if count < 2 {
                return Err(NnError::DegenerateBatch(format!(
                    "{count} element per channel, need at least 2"
                )));
            }
            for ci in 0..c {
                let mut s = 0.0;
                for ni in 0..n {
                    s += x[(ni * c + ci) * hw..(ni * c + ci + 1) * hw].iter().map(|v| v.as_f64()).sum::<f64>();
                }
                let m = s / count as f64;
                let mut ss = 0.0;
                for ni in 0..n {
                    ss += x[(ni * c + ci) * hw..(ni * c + ci + 1) * hw]
                        .iter()
                        .map(|v| (v.as_f64() - m).powi(2))
                        .sum::<f64>();
                }
                mean[ci] = m;
                var[ci] = ss / count as f64;
                inv_std[ci] = T::of(1.0 / (var[ci] + eps).sqrt());
            }
        }
        Mode::Eval => {
            for ci in 0..c {
                mean[ci] = layer.bn_running_mean.values()[ci].as_f64();
                let v = layer.bn_running_var.values()[ci].as_f64();
                inv_std[ci] = T::of(1.0 / (v + eps).sqrt());
            }
        }
    }
    let mut xhat = vec![T::zero(); x.len()];
    let mut y = vec![T::zero(); x.len()];
    for ni in 0..n {
        for ci in 0..c {
            let m = T::of(mean[ci]);
            let is = inv_std[ci];
            let gm = layer.bn_gamma.values()[ci];
            let bt = layer.bn_beta.values()[ci];
            let range = (ni * c + ci) * hw..(ni * c + ci + 1) * hw;
            for ((xh, yv), &xv) in xhat[range.clone()].iter_mut().zip(&mut y[range.clone()]).zip(&x[range]) {
                *xh = (xv - m) * is;
                *yv = gm * *xh + bt;
            }
        }
    }
    if mode == Mode::Eval {
        mean.clear();
    }
    Ok((y, BnCache { mode, xhat, inv_std, mean, var, count }))
}

/// Returns `(dx, dgamma, dbeta)`.
pub(crate) fn bn_backward<T: Scalar>(
    dy: &[T],
    n: usize,
    c: usize,
    hw: usize,
    gamma: &[T],
    cache: &BnCache<T>,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let mut dx = vec![T::zero(); dy.len()];
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for ci in 0..c {
        let mut sum_dy = 0.0f64;
        let mut sum_dy_xhat = 0.0f64;
        for ni in 0..n {
            let r = (ni * c + ci) * hw..(ni * c + ci + 1) * hw;
            for (&d, &xh) in dy[r.clone()].iter().zip(&cache.xhat[r]) {
                sum_dy += d.as_f64();
                sum_dy_xhat += (d * xh).as_f64();
            }
        }
        dgamma[ci] = T::of(sum_dy_xhat);
        dbeta[ci] = T::of(sum_dy);
        let gis = gamma[ci] * cache.inv_std[ci];
        match cache.mode {
            Mode::Eval => {
                for ni in 0..n {
                    let r = (ni * c + ci) * hw..(ni * c + ci + 1) * hw;
                    for (o, &d) in dx[r.clone()].iter_mut().zip(&dy[r]) {
                        *o = gis * d;
                    }
                }
            }
            Mode::Train => {
                let cnt = cache.count as f64;
                let a = T::of(sum_dy / cnt);
                let b = T::of(sum_dy_xhat / cnt);
                for ni in 0..n {
                    let r = (ni * c + ci) * hw..(ni * c + ci + 1) * hw;
                    for ((o, &d), &xh) in dx[r.clone()].iter_mut().zip(&dy[r.clone()]).zip(&cache.xhat[r]) {
                        *o = gis * (d - a - xh * b);
                    }
                }
            }
        }
    }
    (dx, dgamma, dbeta)
}

/// Exponential moving average of batch statistics (unbiased variance).
pub(crate) fn bn_update_running<T: Scalar>(layer: &mut ConvLayer<T>, cache: &BnCache<T>) {
    if cache.mode != Mode::Train {
        return;
    }
    let m = BN_MOMENTUM;
    let unbias = cache.count as f64 / (cache.count as f64 - 1.0);
    for (ci, (&bm, &bv)) in cache.mean.iter().zip(&cache.var).enumerate() {
        let rm = &mut layer.bn_running_mean.values_mut()[ci];
        *rm = T::of((1.0 - m) * rm.as_f64() + m * bm);
        let rv = &mut layer.bn_running_var.values_mut()[ci];
        *rv = T::of((1.0 - m) * rv.as_f64() + m * bv * unbias);
    }
}

/// Batch norm of a `[C][H][W]` or `[N][C][H][W]` tensor using the layer's
/// affine parameters. Train mode normalizes with batch statistics and updates
/// the running averages; eval mode uses the running averages.
pub fn batchnorm_forward<T: Scalar>(x: &Tensor<T>, layer: &mut ConvLayer<T>, mode: Mode) -> Result<Tensor<T>> {
    let (n, c, h, w) = nchw(x)?;
    let (y, cache) = bn_forward(x.values(), n, c, h * w, layer, mode)?;
    bn_update_running(layer, &cache);
    Tensor::new(x.shape().to_vec(), y)
}

//! AVX-512 kernel for short, wide products where `b` and `c` are row-contiguous.
//! The general packed kernels lose most of their throughput when `m` is below
//! their register tile height, which is the common case for early and late
//! convolution layers.

#[cfg(target_arch = "x86_64")]
mod x86 {
    use std::arch::x86_64::*;

    const MR: usize = 12;

    #[target_feature(enable = "avx512f")]
    #[allow(clippy::too_many_arguments)]
    unsafe fn panel<const R: usize>(
        k: usize,
        alpha: f32,
        a: *const f32,
        rsa: usize,
        csa: usize,
        b: *const f32,
        rsb: usize,
        beta: f32,
        c: *mut f32,
        rsc: usize,
        mask: (u16, u16),
    ) {
        let mut acc0 = [_mm512_setzero_ps(); R];
        let mut acc1 = [_mm512_setzero_ps(); R];
        for p in 0..k {
            let bp = b.add(p * rsb);
            let b0 = _mm512_maskz_loadu_ps(mask.0, bp);
            let b1 = _mm512_maskz_loadu_ps(mask.1, bp.add(16));
            for r in 0..R {
                let av = _mm512_set1_ps(*a.add(r * rsa + p * csa));
                acc0[r] = _mm512_fmadd_ps(av, b0, acc0[r]);
                acc1[r] = _mm512_fmadd_ps(av, b1, acc1[r]);
            }
        }
        let al = _mm512_set1_ps(alpha);
        let be = _mm512_set1_ps(beta);
        for r in 0..R {
            let cp = c.add(r * rsc);
            let (mut y0, mut y1) = (_mm512_mul_ps(al, acc0[r]), _mm512_mul_ps(al, acc1[r]));
            if beta != 0.0 {
                y0 = _mm512_fmadd_ps(be, _mm512_maskz_loadu_ps(mask.0, cp), y0);
                y1 = _mm512_fmadd_ps(be, _mm512_maskz_loadu_ps(mask.1, cp.add(16)), y1);
            }
            _mm512_mask_storeu_ps(cp, mask.0, y0);
            _mm512_mask_storeu_ps(cp.add(16), mask.1, y1);
        }
    }

    fn lane_mask(w: usize) -> u16 {
        if w >= 16 {
            u16::MAX
        } else {
            ((1u32 << w) - 1) as u16
        }
    }

    /// # Safety
    /// Caller checks `avx512f` support and that every addressed element is in bounds.
    #[target_feature(enable = "avx512f")]
    #[allow(clippy::too_many_arguments)]
    pub unsafe fn sgemm_rowmajor(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: usize,
        csa: usize,
        b: *const f32,
        rsb: usize,
        beta: f32,
        c: *mut f32,
        rsc: usize,
    ) {
        let mut j = 0;
        while j < n {
            let w = (n - j).min(32);
            let mask = (lane_mask(w), lane_mask(w.saturating_sub(16)));
            let bj = b.add(j);
            let mut i = 0;
            while i + MR <= m {
                panel::<MR>(k, alpha, a.add(i * rsa), rsa, csa, bj, rsb, beta, c.add(i * rsc + j), rsc, mask);
                i += MR;
            }
            let (ap, cp) = (a.add(i * rsa), c.add(i * rsc + j));
            macro_rules! tail {
                ($($r:literal)*) => {
                    match m - i {
                        0 => {}
                        $($r => panel::<$r>(k, alpha, ap, rsa, csa, bj, rsb, beta, cp, rsc, mask),)*
                        _ => unreachable!(),
                    }
                };
            }
            tail!(1 2 3 4 5 6 7 8 9 10 11);
            j += 32;
        }
    }
}

/// Runs `c = alpha * a * b + beta * c` on the AVX-512 path when the shape
/// suits it. Returns false without touching `c` otherwise.
///
/// # Safety
/// Every element addressed through the dimensions and strides must lie
/// inside the allocations behind `a`, `b` and `c`.
#[allow(clippy::too_many_arguments)]
pub(crate) unsafe fn try_sgemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f32,
    a: *const f32,
    rsa: isize,
    csa: isize,
    b: *const f32,
    rsb: isize,
    csb: isize,
    beta: f32,
    c: *mut f32,
    rsc: isize,
    csc: isize,
) -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        if m < 16 && n >= 64 && csb == 1 && csc == 1 && rsa >= 0 && csa >= 0 && rsb >= 0 && rsc >= 0 && is_x86_feature_detected!("avx512f") {
            x86::sgemm_rowmajor(m, k, n, alpha, a, rsa as usize, csa as usize, b, rsb as usize, beta, c, rsc as usize);
            return true;
        }
    }
    let _ = (m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    false
}

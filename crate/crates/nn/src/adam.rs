use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Adam moments over a flat view of all parameters, in the order the
/// parameter tensors are passed to [`AdamState::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T = f32> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.len() != self.v.len() {
            return Err(NnError::Shape(format!("moment lengths {} and {} differ", self.m.len(), self.v.len())));
        }
        if self.v.iter().any(|&x| x < T::zero()) {
            return Err(NnError::Shape("negative second moment".into()));
        }
        Ok(())
    }

    /// One bias-corrected update using each tensor's gradient slot; a missing
    /// gradient counts as zero.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>]) -> Result<()> {
        let total: usize = params.iter().map(|p| p.len()).sum();
        if total != self.m.len() || total != self.v.len() {
            return Err(NnError::Shape(format!(
                "optimizer holds {} moments for {total} parameters",
                self.m.len()
            )));
        }
        self.t += 1;
        let mut off = 0;
        let mut zeros = Vec::new();
        for p in params.iter_mut() {
            let n = p.len();
            let (theta, g) = p.split_mut();
            let g = match g {
                Some(g) => g,
                None => {
                    zeros.resize(n, T::zero());
                    &zeros[..]
                }
            };
            adam_update(
                theta,
                g,
                &mut self.m[off..off + n],
                &mut self.v[off..off + n],
                self.t,
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
            )?;
            off += n;
        }
        Ok(())
    }
}

/// Standard Adam update of `theta` at (1-based) step `t`.
#[allow(clippy::too_many_arguments)]
pub fn adam_update<T: Scalar>(
    theta: &mut [T],
    g: &[T],
    m: &mut [T],
    v: &mut [T],
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<()> {
    let n = theta.len();
    if g.len() != n || m.len() != n || v.len() != n {
        return Err(NnError::Shape("parameter, gradient and moment lengths differ".into()));
    }
    if t == 0 {
        return Err(NnError::Shape("adam step count starts at 1".into()));
    }
    let exp = i32::try_from(t).unwrap_or(i32::MAX);
    let c1 = T::of(1.0 / (1.0 - beta1.powi(exp)));
    let c2 = T::of(1.0 / (1.0 - beta2.powi(exp)));
    let (b1, b2) = (T::of(beta1), T::of(beta2));
    let (a1, a2) = (T::of(1.0 - beta1), T::of(1.0 - beta2));
    let (lr, eps) = (T::of(lr), T::of(eps));
    for (((p, &gi), mi), vi) in theta.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
        *mi = b1 * *mi + a1 * gi;
        *vi = b2 * *vi + a2 * gi * gi;
        let mhat = *mi * c1;
        let vhat = *vi * c2;
        *p -= lr * mhat / (vhat.sqrt() + eps);
    }
    Ok(())
}

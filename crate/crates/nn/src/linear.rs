use crate::error::{NnError, Result};
use crate::scalar::{gemm, Scalar, View};
use crate::tensor::Tensor;

/// Fully connected layer, `y = W x + b` with `W` stored `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer<T = f32> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> LinearLayer<T> {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weight: Tensor::zeros(vec![out_dim, in_dim]),
            bias: Tensor::zeros(vec![out_dim]),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn validate(&self) -> Result<()> {
        match *self.weight.shape() {
            [o, _] if self.bias.shape() == [o] => Ok(()),
            _ => Err(NnError::Shape(format!(
                "weight {:?} and bias {:?} disagree",
                self.weight.shape(),
                self.bias.shape()
            ))),
        }
    }
}

fn batch_of<T: Scalar>(x: &Tensor<T>, layer: &LinearLayer<T>) -> Result<usize> {
    layer.validate()?;
    let d = layer.in_dim();
    match *x.shape() {
        [n, k] if k == d => Ok(n),
        [k] if k == d => Ok(1),
        ref s => Err(NnError::Shape(format!("linear layer expects [B][{d}], got {s:?}"))),
    }
}

/// `[B][in] -> [B][out]`.
pub fn linear_forward<T: Scalar>(x: &Tensor<T>, layer: &LinearLayer<T>) -> Result<Tensor<T>> {
    let n = batch_of(x, layer)?;
    let (i, o) = (layer.in_dim(), layer.out_dim());
    let mut y = Vec::with_capacity(n * o);
    for _ in 0..n {
        y.extend_from_slice(layer.bias.values());
    }
    gemm(n, i, o, T::one(), View::new(x.values(), i, 1), View::new(layer.weight.values(), 1, i), T::one(), &mut y, o, 1);
    Tensor::new(vec![n, o], y)
}

/// Returns `(dx, dweight, dbias)` for upstream gradient `dy` of shape `[B][out]`.
pub fn linear_backward<T: Scalar>(
    x: &Tensor<T>,
    layer: &LinearLayer<T>,
    dy: &Tensor<T>,
    need_dx: bool,
) -> Result<(Option<Tensor<T>>, Vec<T>, Vec<T>)> {
    let n = batch_of(x, layer)?;
    let (i, o) = (layer.in_dim(), layer.out_dim());
    if dy.len() != n * o {
        return Err(NnError::Shape(format!("upstream gradient {:?} for [{n}][{o}] output", dy.shape())));
    }
    let mut dw = vec![T::zero(); o * i];
    gemm(o, n, i, T::one(), View::new(dy.values(), 1, o), View::new(x.values(), i, 1), T::zero(), &mut dw, i, 1);
    let mut db = vec![T::zero(); o];
    for row in dy.values().chunks_exact(o) {
        for (d, &g) in db.iter_mut().zip(row) {
            *d += g;
        }
    }
    let dx = if need_dx {
        let mut dx = vec![T::zero(); n * i];
        gemm(n, o, i, T::one(), View::new(dy.values(), o, 1), View::new(layer.weight.values(), i, 1), T::zero(), &mut dx, i, 1);
        Some(Tensor::new(x.shape().to_vec(), dx)?)
    } else {
        None
    };
    Ok((dx, dw, db))
}

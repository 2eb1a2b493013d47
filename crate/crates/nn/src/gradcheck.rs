//! Finite-difference audits of [`Network::backward`] in double precision.

use crate::error::Result;
use crate::loss::{l1_loss, l1_loss_grad};
use crate::conv::Mode;
use crate::network::Network;
use crate::tensor::Tensor;

/// L1 loss of one forward pass; running statistics are not touched.
pub fn loss(net: &Network<f64>, x: &Tensor<f64>, target: &Tensor<f64>, mode: Mode) -> Result<f64> {
    let (y, _) = net.forward(x, mode)?;
    l1_loss(&y, target)
}

/// Analytic gradient of [`loss`] for every trainable tensor, canonical order.
pub fn analytic(net: &mut Network<f64>, x: &Tensor<f64>, target: &Tensor<f64>, mode: Mode) -> Result<Vec<Vec<f64>>> {
    net.zero_grad();
    let (y, tape) = net.forward(x, mode)?;
    net.backward(&tape, &l1_loss_grad(&y, target)?)?;
    Ok(net
        .params()
        .iter()
        .map(|(_, p)| p.grad().map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; p.len()]))
        .collect())
}

/// Central difference of [`loss`] with respect to one parameter entry.
pub fn central_difference(
    net: &mut Network<f64>,
    tensor: usize,
    index: usize,
    h: f64,
    x: &Tensor<f64>,
    target: &Tensor<f64>,
    mode: Mode,
) -> Result<f64> {
    let orig = net.params_mut()[tensor].values()[index];
    net.params_mut()[tensor].values_mut()[index] = orig + h;
    let up = loss(net, x, target, mode);
    net.params_mut()[tensor].values_mut()[index] = orig - h;
    let down = loss(net, x, target, mode);
    net.params_mut()[tensor].values_mut()[index] = orig;
    Ok((up? - down?) / (2.0 * h))
}

/// Central difference along `direction` (one vector per trainable tensor).
pub fn directional_difference(
    net: &mut Network<f64>,
    direction: &[Vec<f64>],
    h: f64,
    x: &Tensor<f64>,
    target: &Tensor<f64>,
    mode: Mode,
) -> Result<f64> {
    let shift = |net: &mut Network<f64>, s: f64| {
        for (p, d) in net.params_mut().into_iter().zip(direction) {
            for (v, dv) in p.values_mut().iter_mut().zip(d) {
                *v += s * dv;
            }
        }
    };
    let original: Vec<Vec<f64>> = net.params().iter().map(|(_, p)| p.values().to_vec()).collect();
    shift(net, h);
    let up = loss(net, x, target, mode);
    shift(net, -2.0 * h);
    let down = loss(net, x, target, mode);
    for (p, o) in net.params_mut().into_iter().zip(&original) {
        p.values_mut().copy_from_slice(o);
    }
    Ok((up? - down?) / (2.0 * h))
}

/// `|a - b| <= abs_tol` or within `rel_tol` of the larger magnitude.
pub fn agrees(analytic: f64, numeric: f64, rel_tol: f64, abs_tol: f64) -> bool {
    let err = (analytic - numeric).abs();
    err <= abs_tol || err <= rel_tol * analytic.abs().max(numeric.abs())
}

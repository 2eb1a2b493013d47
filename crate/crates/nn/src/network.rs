use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activation::{softplus_grad, softplus_scalar};
use crate::conv::{bn_backward, bn_forward, bn_update_running, conv2d_backward, conv2d_forward, nchw, BnCache, ConvLayer};
use crate::conv::Mode;
use crate::error::{NnError, Result};
use crate::linear::{linear_backward, linear_forward, LinearLayer};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Topology: conv blocks (conv, ReLU, batch norm) on a `[C][H][W]` input,
/// flattened into tanh linear layers with a softplus output layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input: [usize; 3],
    pub conv_channels: Vec<usize>,
    pub kernel: (usize, usize),
    pub linear_sizes: Vec<usize>,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            input: [1, 255, 40],
            conv_channels: vec![8, 16, 32, 16, 8, 4],
            kernel: (20, 5),
            linear_sizes: vec![5000, 2000, 800, 300, 12],
        }
    }
}

impl NetworkSpec {
    /// `[C][H][W]` after each conv block.
    pub fn conv_shapes(&self) -> Result<Vec<[usize; 3]>> {
        let (kh, kw) = self.kernel;
        if kh == 0 || kw == 0 {
            return Err(NnError::Config("kernel dimensions must be positive".into()));
        }
        let [_, mut h, mut w] = self.input;
        let mut out = Vec::with_capacity(self.conv_channels.len());
        for (k, &c) in self.conv_channels.iter().enumerate() {
            if h < kh || w < kw {
                return Err(NnError::Config(format!(
                    "conv block {k} input {h}x{w} is smaller than the {kh}x{kw} kernel"
                )));
            }
            h -= kh - 1;
            w -= kw - 1;
            out.push([c, h, w]);
        }
        Ok(out)
    }

    pub fn flatten_dim(&self) -> Result<usize> {
        Ok(match self.conv_shapes()?.last() {
            Some(s) => s.iter().product(),
            None => self.input.iter().product(),
        })
    }

    pub fn output_dim(&self) -> usize {
        self.linear_sizes.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.contains(&0) {
            return Err(NnError::Config(format!("input shape {:?} has a zero axis", self.input)));
        }
        if self.conv_channels.contains(&0) || self.linear_sizes.contains(&0) {
            return Err(NnError::Config("layer widths must be positive".into()));
        }
        if self.linear_sizes.is_empty() {
            return Err(NnError::Config("at least one linear layer is required".into()));
        }
        self.flatten_dim().map(|_| ())
    }

    pub fn parameter_count(&self) -> Result<usize> {
        self.validate()?;
        let (kh, kw) = self.kernel;
        let mut n = 0;
        let mut c = self.input[0];
        for &o in &self.conv_channels {
            n += o * c * kh * kw + 3 * o;
            c = o;
        }
        let mut d = self.flatten_dim()?;
        for &o in &self.linear_sizes {
            n += o * d + o;
            d = o;
        }
        Ok(n)
    }
}

#[derive(Debug, Clone)]
struct ConvRecord<T> {
    input: Tensor<T>,
    active: Vec<bool>,
    bn: BnCache<T>,
}

#[derive(Debug, Clone)]
struct LinearRecord<T> {
    input: Tensor<T>,
    pre: Vec<T>,
    post: Vec<T>,
}

/// Intermediate values recorded by [`Network::forward`] for the backward
/// pass. A default tape is empty.
#[derive(Debug, Clone)]
pub struct Tape<T = f32> {
    record: Option<Record<T>>,
}

impl<T> Default for Tape<T> {
    fn default() -> Self {
        Self { record: None }
    }
}

impl<T> Tape<T> {
    pub fn is_empty(&self) -> bool {
        self.record.is_none()
    }
}

#[derive(Debug, Clone)]
struct Record<T> {
    batch: usize,
    conv: Vec<ConvRecord<T>>,
    linear: Vec<LinearRecord<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T = f32> {
    spec: NetworkSpec,
    pub convs: Vec<ConvLayer<T>>,
    pub linears: Vec<LinearLayer<T>>,
}

impl<T: Scalar> Network<T> {
    /// All weights zero, batch norm at identity.
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let (kh, kw) = spec.kernel;
        let mut c = spec.input[0];
        let mut convs = Vec::new();
        for &o in &spec.conv_channels {
            convs.push(ConvLayer::new(c, o, kh, kw));
            c = o;
        }
        let mut d = spec.flatten_dim()?;
        let mut linears = Vec::new();
        for &o in &spec.linear_sizes {
            linears.push(LinearLayer::new(d, o));
            d = o;
        }
        Ok(Self { spec: spec.clone(), convs, linears })
    }

    /// Kaiming-uniform weights (bound `sqrt(6 / fan_in)`), zero biases,
    /// identity batch norm. Values are drawn in double precision so networks
    /// of either precision from one seed agree up to rounding.
    pub fn init(spec: &NetworkSpec, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |t: &mut Tensor<T>, fan_in: usize| {
            let bound = (6.0 / fan_in as f64).sqrt();
            for v in t.values_mut() {
                *v = T::of(rng.random_range(-bound..bound));
            }
        };
        for l in &mut net.convs {
            let (kh, kw) = l.kernel_size();
            let fan_in = l.in_channels() * kh * kw;
            fill(&mut l.kernels, fan_in);
        }
        for l in &mut net.linears {
            let fan_in = l.in_dim();
            fill(&mut l.weight, fan_in);
        }
        Ok(net)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|(_, t)| t.len()).sum()
    }

    /// Trainable tensors in canonical order.
    pub fn params(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (k, l) in self.convs.iter().enumerate() {
            out.push((format!("conv{k}.kernels"), &l.kernels));
            out.push((format!("conv{k}.bias"), &l.bias));
            out.push((format!("conv{k}.bn_gamma"), &l.bn_gamma));
            out.push((format!("conv{k}.bn_beta"), &l.bn_beta));
        }
        for (k, l) in self.linears.iter().enumerate() {
            out.push((format!("linear{k}.weight"), &l.weight));
            out.push((format!("linear{k}.bias"), &l.bias));
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for l in &mut self.convs {
            out.push(&mut l.kernels);
            out.push(&mut l.bias);
            out.push(&mut l.bn_gamma);
            out.push(&mut l.bn_beta);
        }
        for l in &mut self.linears {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out
    }

    /// Every stored tensor, trainable or not, in checkpoint order.
    pub fn state(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (k, l) in self.convs.iter().enumerate() {
            out.push((format!("conv{k}.kernels"), &l.kernels));
            out.push((format!("conv{k}.bias"), &l.bias));
            out.push((format!("conv{k}.bn_gamma"), &l.bn_gamma));
            out.push((format!("conv{k}.bn_beta"), &l.bn_beta));
            out.push((format!("conv{k}.bn_running_mean"), &l.bn_running_mean));
            out.push((format!("conv{k}.bn_running_var"), &l.bn_running_var));
        }
        for (k, l) in self.linears.iter().enumerate() {
            out.push((format!("linear{k}.weight"), &l.weight));
            out.push((format!("linear{k}.bias"), &l.bias));
        }
        out
    }

    pub fn state_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for l in &mut self.convs {
            out.push(&mut l.kernels);
            out.push(&mut l.bias);
            out.push(&mut l.bn_gamma);
            out.push(&mut l.bn_beta);
            out.push(&mut l.bn_running_mean);
            out.push(&mut l.bn_running_var);
        }
        for l in &mut self.linears {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn clear_grads(&mut self) {
        for p in self.params_mut() {
            p.clear_grad();
        }
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            spec: self.spec.clone(),
            convs: self
                .convs
                .iter()
                .map(|l| ConvLayer {
                    kernels: l.kernels.cast(),
                    bias: l.bias.cast(),
                    bn_gamma: l.bn_gamma.cast(),
                    bn_beta: l.bn_beta.cast(),
                    bn_running_mean: l.bn_running_mean.cast(),
                    bn_running_var: l.bn_running_var.cast(),
                })
                .collect(),
            linears: self
                .linears
                .iter()
                .map(|l| LinearLayer { weight: l.weight.cast(), bias: l.bias.cast() })
                .collect(),
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<usize> {
        let (n, c, h, w) = nchw(x)?;
        if [c, h, w] != self.spec.input {
            return Err(NnError::Shape(format!(
                "network expects [B]{:?}, got {:?}",
                self.spec.input,
                x.shape()
            )));
        }
        Ok(n)
    }

    /// Forward pass on `[B][C][H][W]` (or a single `[C][H][W]`), returning
    /// `[B][out]` and the tape for [`Network::backward`]. Running batch-norm
    /// statistics are left untouched; see [`Network::update_running_stats`].
    pub fn forward(&self, x: &Tensor<T>, mode: Mode) -> Result<(Tensor<T>, Tape<T>)> {
        self.run(x, mode, true)
    }

    /// Eval-mode forward without keeping intermediate values.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.run(x, Mode::Eval, false).map(|(y, _)| y)
    }

    fn run(&self, x: &Tensor<T>, mode: Mode, keep: bool) -> Result<(Tensor<T>, Tape<T>)> {
        let n = self.check_input(x)?;
        let [c, h, w] = self.spec.input;
        let mut cur = x.clone().reshape(vec![n, c, h, w])?;
        let mut record = Record { batch: n, conv: Vec::new(), linear: Vec::new() };

        for layer in &self.convs {
            let z = conv2d_forward(&cur, layer)?;
            let shape = z.shape().to_vec();
            let mut a = z.into_values();
            let active: Vec<bool> = a.iter().map(|&v| v > T::zero()).collect();
            for (v, &on) in a.iter_mut().zip(&active) {
                if !on {
                    *v = T::zero();
                }
            }
            let (y, bn) = bn_forward(&a, n, shape[1], shape[2] * shape[3], layer, mode)?;
            let next = Tensor::new(shape, y)?;
            if keep {
                record.conv.push(ConvRecord { input: cur, active, bn });
            }
            cur = next;
        }

        let flat = self.spec.flatten_dim()?;
        cur = cur.reshape(vec![n, flat])?;
        let last = self.linears.len() - 1;
        for (k, layer) in self.linears.iter().enumerate() {
            let z = linear_forward(&cur, layer)?;
            let shape = z.shape().to_vec();
            let pre = z.into_values();
            let post: Vec<T> = if k == last {
                pre.iter().map(|&v| softplus_scalar(v)).collect()
            } else {
                pre.iter().map(|&v| v.tanh()).collect()
            };
            let next = Tensor::new(shape, post.clone())?;
            if keep {
                record.linear.push(LinearRecord { input: cur, pre, post });
            }
            cur = next;
        }
        cur.check_finite("network output")?;
        let tape = if keep { Tape { record: Some(record) } } else { Tape::default() };
        Ok((cur, tape))
    }

    /// Accumulates parameter gradients for upstream gradient `dout` (shape of
    /// the forward output) into each parameter's gradient slot.
    pub fn backward(&mut self, tape: &Tape<T>, dout: &Tensor<T>) -> Result<()> {
        let rec = tape
            .record
            .as_ref()
            .ok_or_else(|| NnError::Graph("backward called before a recorded forward pass".into()))?;
        let n = rec.batch;
        if rec.conv.len() != self.convs.len() || rec.linear.len() != self.linears.len() {
            return Err(NnError::Graph("tape was recorded on a different topology".into()));
        }
        if dout.shape() != [n, self.spec.output_dim()] {
            return Err(NnError::Shape(format!(
                "output gradient {:?}, expected [{n}][{}]",
                dout.shape(),
                self.spec.output_dim()
            )));
        }

        let last = self.linears.len() - 1;
        let mut g = dout.clone();
        for k in (0..self.linears.len()).rev() {
            let r = &rec.linear[k];
            let mut dz = g.into_values();
            if k == last {
                for (d, &z) in dz.iter_mut().zip(&r.pre) {
                    *d *= softplus_grad(z);
                }
            } else {
                for (d, &a) in dz.iter_mut().zip(&r.post) {
                    *d *= T::one() - a * a;
                }
            }
            let dz = Tensor::new(vec![n, self.linears[k].out_dim()], dz)?;
            let need_dx = k > 0 || !self.convs.is_empty();
            let (dx, dw, db) = linear_backward(&r.input, &self.linears[k], &dz, need_dx)?;
            accumulate(&mut self.linears[k].weight, &dw);
            accumulate(&mut self.linears[k].bias, &db);
            match dx {
                Some(dx) => g = dx,
                None => return Ok(()),
            }
        }

        for k in (0..self.convs.len()).rev() {
            let r = &rec.conv[k];
            let layer = &self.convs[k];
            let (o, ho, wo) = {
                let s = self.spec.conv_shapes()?[k];
                (s[0], s[1], s[2])
            };
            let (mut dz, dgamma, dbeta) = bn_backward(g.values(), n, o, ho * wo, layer.bn_gamma.values(), &r.bn);
            for (d, &on) in dz.iter_mut().zip(&r.active) {
                if !on {
                    *d = T::zero();
                }
            }
            let dz = Tensor::new(vec![n, o, ho, wo], dz)?;
            let grads = conv2d_backward(&r.input, layer, &dz, k > 0)?;
            let layer = &mut self.convs[k];
            accumulate(&mut layer.kernels, &grads.dkernels);
            accumulate(&mut layer.bias, &grads.dbias);
            accumulate(&mut layer.bn_gamma, &dgamma);
            accumulate(&mut layer.bn_beta, &dbeta);
            if let Some(dx) = grads.dx {
                g = dx;
            }
        }
        for p in self.params_mut() {
            if let Some(gr) = p.grad() {
                if gr.iter().any(|v| !v.is_finite()) {
                    return Err(NnError::NonFinite("parameter gradient".into()));
                }
            }
        }
        Ok(())
    }

    /// Folds the batch statistics recorded on a train-mode tape into the
    /// running averages.
    pub fn update_running_stats(&mut self, tape: &Tape<T>) -> Result<()> {
        let rec = tape
            .record
            .as_ref()
            .ok_or_else(|| NnError::Graph("no recorded forward pass".into()))?;
        for (layer, r) in self.convs.iter_mut().zip(&rec.conv) {
            bn_update_running(layer, &r.bn);
        }
        Ok(())
    }
}

fn accumulate<T: Scalar>(t: &mut Tensor<T>, g: &[T]) {
    for (a, &b) in t.grad_mut().iter_mut().zip(g) {
        *a += b;
    }
}

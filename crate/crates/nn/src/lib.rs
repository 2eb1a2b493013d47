//! Small deterministic neural-network engine for the B-scan inversion network.
//!
//! Everything is generic over [`Scalar`] so the same code trains in `f32` and
//! runs gradient audits in `f64`.

mod activation;
mod adam;
mod checkpoint;
mod conv;
mod error;
pub mod gradcheck;
mod linear;
mod loss;
mod network;
mod scalar;
mod simd;
mod tensor;

pub use activation::{relu, softplus, softplus_scalar, tanh_act};
pub use adam::{adam_update, AdamState};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, Checkpoint, CKPT_MAGIC, CKPT_VERSION};
pub use conv::{batchnorm_forward, conv2d_backward, conv2d_forward, ConvGrads, ConvLayer, Mode, BN_EPS, BN_MOMENTUM};
pub use error::{NnError, Result};
pub use linear::{linear_backward, linear_forward, LinearLayer};
pub use loss::{l1_loss, l1_loss_grad};
pub use network::{Network, NetworkSpec, Tape};
pub use scalar::Scalar;
pub use tensor::Tensor;

//! Checkpoint layout, little-endian throughout:
//!
//! ```text
//! "NNCKPT"  u16 version  u32 input[3]  u32 tensor count
//! per tensor: u16 name length, name bytes, u8 rank, u32 dims[rank]
//! f64 values of every tensor, in manifest order
//! u8 optimizer flag; when 1: u64 t, f64 lr, beta1, beta2, eps, u64 n, f64 m[n], f64 v[n]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::adam::AdamState;
use crate::error::{NnError, Result};
use crate::network::{Network, NetworkSpec};
use crate::scalar::Scalar;

pub const CKPT_MAGIC: &[u8; 6] = b"NNCKPT";
pub const CKPT_VERSION: u16 = 1;
/// Upper bound on stored values, a guard against corrupted headers.
const MAX_VALUES: u64 = 1 << 29;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T = f32> {
    pub network: Network<T>,
    pub adam: Option<AdamState<T>>,
}

fn bad(msg: impl Into<String>) -> NnError {
    NnError::Checkpoint(msg.into())
}

/// Names and shapes of every stored tensor for `spec`, in checkpoint order.
pub(crate) fn manifest(spec: &NetworkSpec) -> Result<Vec<(String, Vec<usize>)>> {
    spec.validate()?;
    let (kh, kw) = spec.kernel;
    let mut out = Vec::new();
    let mut c = spec.input[0];
    for (k, &o) in spec.conv_channels.iter().enumerate() {
        out.push((format!("conv{k}.kernels"), vec![o, c, kh, kw]));
        for name in ["bias", "bn_gamma", "bn_beta", "bn_running_mean", "bn_running_var"] {
            out.push((format!("conv{k}.{name}"), vec![o]));
        }
        c = o;
    }
    let mut d = spec.flatten_dim()?;
    for (k, &o) in spec.linear_sizes.iter().enumerate() {
        out.push((format!("linear{k}.weight"), vec![o, d]));
        out.push((format!("linear{k}.bias"), vec![o]));
        d = o;
    }
    Ok(out)
}

/// Recovers the topology from a manifest.
fn infer_spec(input: [usize; 3], entries: &[(String, Vec<usize>)]) -> Result<NetworkSpec> {
    let mut conv_channels = Vec::new();
    let mut kernel = None;
    let mut linear_sizes = Vec::new();
    for (name, shape) in entries {
        if name.ends_with(".kernels") {
            if shape.len() != 4 {
                return Err(bad(format!("{name} has rank {}", shape.len())));
            }
            conv_channels.push(shape[0]);
            kernel.get_or_insert((shape[2], shape[3]));
        } else if name.ends_with(".weight") {
            if shape.len() != 2 {
                return Err(bad(format!("{name} has rank {}", shape.len())));
            }
            linear_sizes.push(shape[0]);
        }
    }
    let spec = NetworkSpec {
        input,
        conv_channels,
        kernel: kernel.unwrap_or((1, 1)),
        linear_sizes,
    };
    let expected = manifest(&spec).map_err(|e| bad(format!("inconsistent topology: {e}")))?;
    if expected != entries {
        return Err(bad("tensor manifest does not describe a supported network"));
    }
    Ok(spec)
}

pub fn encode_checkpoint<T: Scalar, W: Write>(w: &mut W, net: &Network<T>, adam: Option<&AdamState<T>>) -> Result<()> {
    let io = |e: std::io::Error| bad(format!("write failed: {e}"));
    let state = net.state();
    w.write_all(CKPT_MAGIC).map_err(io)?;
    w.write_all(&CKPT_VERSION.to_le_bytes()).map_err(io)?;
    for d in net.spec().input {
        w.write_all(&(d as u32).to_le_bytes()).map_err(io)?;
    }
    w.write_all(&(state.len() as u32).to_le_bytes()).map_err(io)?;
    for (name, t) in &state {
        w.write_all(&(name.len() as u16).to_le_bytes()).map_err(io)?;
        w.write_all(name.as_bytes()).map_err(io)?;
        w.write_all(&[t.shape().len() as u8]).map_err(io)?;
        for &d in t.shape() {
            w.write_all(&(d as u32).to_le_bytes()).map_err(io)?;
        }
    }
    let mut put = |vals: &[T]| -> Result<()> {
        for v in vals {
            w.write_all(&v.as_f64().to_le_bytes()).map_err(io)?;
        }
        Ok(())
    };
    for (_, t) in &state {
        put(t.values())?;
    }
    match adam {
        None => w.write_all(&[0]).map_err(io)?,
        Some(a) => {
            if a.m.len() != net.parameter_count() || a.v.len() != a.m.len() {
                return Err(bad("optimizer state does not match the parameter count"));
            }
            w.write_all(&[1]).map_err(io)?;
            w.write_all(&a.t.to_le_bytes()).map_err(io)?;
            for x in [a.lr, a.beta1, a.beta2, a.eps] {
                w.write_all(&x.to_le_bytes()).map_err(io)?;
            }
            w.write_all(&(a.m.len() as u64).to_le_bytes()).map_err(io)?;
            for vals in [&a.m, &a.v] {
                for v in vals.iter() {
                    w.write_all(&v.as_f64().to_le_bytes()).map_err(io)?;
                }
            }
        }
    }
    Ok(())
}

struct Reader<R> {
    r: R,
    remaining: Option<u64>,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.r.read_exact(&mut b).map_err(|_| bad("truncated checkpoint"))?;
        if let Some(rem) = &mut self.remaining {
            *rem = rem.saturating_sub(N as u64);
        }
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    /// Fails early when fewer than `n` f64 values can follow.
    fn expect_values(&self, n: u64) -> Result<()> {
        if n > MAX_VALUES {
            return Err(bad(format!("{n} stored values exceeds the supported size")));
        }
        match self.remaining {
            Some(rem) if rem < n.saturating_mul(8) => Err(bad("truncated checkpoint")),
            _ => Ok(()),
        }
    }
    fn values<T: Scalar>(&mut self, out: &mut [T]) -> Result<()> {
        for v in out.iter_mut() {
            let x = self.f64()?;
            if !x.is_finite() {
                return Err(bad("non-finite stored value"));
            }
            *v = T::of(x);
        }
        Ok(())
    }
}

fn decode<T: Scalar, R: Read>(r: R, len: Option<u64>) -> Result<Checkpoint<T>> {
    let mut rd = Reader { r, remaining: len };
    if &rd.bytes::<6>()? != CKPT_MAGIC {
        return Err(bad("bad magic, not a checkpoint"));
    }
    let version = rd.u16()?;
    if version != CKPT_VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let input = [rd.u32()? as usize, rd.u32()? as usize, rd.u32()? as usize];
    let count = rd.u32()?;
    if count > 4096 {
        return Err(bad(format!("{count} tensors is implausible")));
    }
    let mut entries = Vec::with_capacity(count as usize);
    let mut total = 0u64;
    for _ in 0..count {
        let n = rd.u16()? as usize;
        let mut name = vec![0u8; n];
        for b in name.iter_mut() {
            *b = rd.u8()?;
        }
        let name = String::from_utf8(name).map_err(|_| bad("tensor name is not UTF-8"))?;
        let rank = rd.u8()? as usize;
        let mut shape = Vec::with_capacity(rank);
        let mut size = 1u64;
        for _ in 0..rank {
            let d = rd.u32()?;
            size = size.saturating_mul(u64::from(d));
            shape.push(d as usize);
        }
        total = total.saturating_add(size);
        entries.push((name, shape));
    }
    rd.expect_values(total)?;
    let spec = infer_spec(input, &entries)?;
    let mut network = Network::<T>::zeros(&spec).map_err(|e| bad(e.to_string()))?;
    for t in network.state_mut() {
        rd.values(t.values_mut())?;
    }
    if network.convs.iter().any(|l| l.validate().is_err()) {
        return Err(bad("negative running variance"));
    }
    let adam = match rd.u8()? {
        0 => None,
        1 => {
            let t = rd.u64()?;
            let (lr, beta1, beta2, eps) = (rd.f64()?, rd.f64()?, rd.f64()?, rd.f64()?);
            let n = rd.u64()?;
            if n != network.parameter_count() as u64 {
                return Err(bad(format!("optimizer holds {n} moments for {} parameters", network.parameter_count())));
            }
            rd.expect_values(n.saturating_mul(2))?;
            let mut a = AdamState::new(n as usize, lr);
            a.t = t;
            a.beta1 = beta1;
            a.beta2 = beta2;
            a.eps = eps;
            rd.values(&mut a.m)?;
            rd.values(&mut a.v)?;
            a.validate().map_err(|e| bad(e.to_string()))?;
            Some(a)
        }
        f => return Err(bad(format!("unknown optimizer flag {f}"))),
    };
    let mut probe = [0u8; 1];
    if rd.r.read(&mut probe).map_err(|e| bad(e.to_string()))? != 0 {
        return Err(bad("trailing bytes after checkpoint"));
    }
    Ok(Checkpoint { network, adam })
}

pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<Checkpoint<T>> {
    decode(bytes, Some(bytes.len() as u64))
}

/// Writes through a temporary sibling file so a failed write never leaves a
/// truncated checkpoint behind.
pub fn write_checkpoint<T: Scalar>(path: &Path, net: &Network<T>, adam: Option<&AdamState<T>>) -> Result<()> {
    let io = |e: std::io::Error| NnError::Io { path: path.display().to_string(), source: e };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp).map_err(io)?);
        encode_checkpoint(&mut w, net, adam)?;
        w.flush().map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

pub fn read_checkpoint<T: Scalar>(path: &Path) -> Result<Checkpoint<T>> {
    let io = |e: std::io::Error| NnError::Io { path: path.display().to_string(), source: e };
    let f = File::open(path).map_err(io)?;
    let len = f.metadata().map_err(io)?.len();
    decode(BufReader::new(f), Some(len))
}

//! `.bscan` binary layout, all little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `BSCN` |
//! | 2     | version (u16) |
//! | 2     | rows (u16) |
//! | 2     | cols (u16) |
//! | 8     | sample interval dt (f64, s) |
//! | 8     | trace step (f64, m) |
//! | 4·rows·cols | samples, row-major f32 |

use std::path::Path;

use ndarray::Array2;

use super::trace::BScan;
use crate::error::{Error, Result};

pub const BSCAN_MAGIC: &[u8; 4] = b"BSCN";
pub const BSCAN_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 2 + 8 + 8;

pub fn encode_bscan(scan: &BScan) -> Result<Vec<u8>> {
    let (rows, cols) = scan.data.dim();
    let rows16 = u16::try_from(rows).map_err(|_| Error::Argument(format!("{rows} rows do not fit the format")))?;
    let cols16 = u16::try_from(cols).map_err(|_| Error::Argument(format!("{cols} cols do not fit the format")))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * rows * cols);
    out.extend_from_slice(BSCAN_MAGIC);
    out.extend_from_slice(&BSCAN_VERSION.to_le_bytes());
    out.extend_from_slice(&rows16.to_le_bytes());
    out.extend_from_slice(&cols16.to_le_bytes());
    out.extend_from_slice(&scan.dt_s().to_le_bytes());
    out.extend_from_slice(&scan.trace_step_m.to_le_bytes());
    for v in scan.data.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_bscan(bytes: &[u8]) -> Result<BScan> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != BSCAN_MAGIC {
        return Err(Error::Format("bad magic, not a .bscan file".into()));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u16_at(4);
    if version != BSCAN_VERSION {
        return Err(Error::Format(format!("unsupported .bscan version {version}")));
    }
    let rows = usize::from(u16_at(6));
    let cols = usize::from(u16_at(8));
    let dt = f64_at(10);
    let step = f64_at(18);
    if !dt.is_finite() || dt < 0.0 || !step.is_finite() {
        return Err(Error::Format("non-finite header values".into()));
    }
    let expected = HEADER_LEN + 4 * rows * cols;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "{rows}x{cols} scan needs {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let values: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let data = Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::Format(e.to_string()))?;
    let window = if rows > 1 { dt * (rows - 1) as f64 } else { dt };
    Ok(BScan::new(data, window, step))
}

pub fn write_bscan(path: &Path, scan: &BScan) -> Result<()> {
    std::fs::write(path, encode_bscan(scan)?).map_err(|e| Error::io(path, e))
}

pub fn read_bscan(path: &Path) -> Result<BScan> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bscan(&bytes)
}

use ndarray::Array2;

use crate::defaults::{BSCAN_SAMPLES, BSCAN_TRACES, TIME_WINDOW_S, TRACE_STEP_M};
use crate::error::{Error, Result};

/// Receiver Ez time series from one antenna position.
#[derive(Debug, Clone, PartialEq)]
pub struct AScan {
    pub samples: Vec<f64>,
    pub dt_s: f64,
    /// Time of `samples[0]`.
    pub t0_s: f64,
}

impl AScan {
    pub fn time_of(&self, index: f64) -> f64 {
        self.t0_s + index * self.dt_s
    }

    pub fn duration(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64 * self.dt_s
    }
}

/// Where a scan came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScanMeta {
    pub origin: String,
    pub seed: Option<u64>,
}

/// Radargram of `rows` time samples by `cols` traces.
#[derive(Debug, Clone, PartialEq)]
pub struct BScan {
    pub data: Array2<f32>,
    pub time_window_s: f64,
    pub trace_step_m: f64,
    pub meta: ScanMeta,
}

impl BScan {
    pub fn new(data: Array2<f32>, time_window_s: f64, trace_step_m: f64) -> Self {
        Self {
            data,
            time_window_s,
            trace_step_m,
            meta: ScanMeta::default(),
        }
    }

    pub fn zeros_canonical() -> Self {
        Self::new(
            Array2::zeros((BSCAN_SAMPLES, BSCAN_TRACES)),
            TIME_WINDOW_S,
            TRACE_STEP_M,
        )
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    /// Interval between time samples.
    pub fn dt_s(&self) -> f64 {
        if self.rows() > 1 {
            self.time_window_s / (self.rows() - 1) as f64
        } else {
            self.time_window_s
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.data.dim() == (BSCAN_SAMPLES, BSCAN_TRACES) && self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_canonical(&self) -> Result<()> {
        if self.data.dim() != (BSCAN_SAMPLES, BSCAN_TRACES) {
            return Err(Error::Argument(format!(
                "scan is {}x{}, expected {BSCAN_SAMPLES}x{BSCAN_TRACES}",
                self.rows(),
                self.cols()
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("scan contains non-finite values".into()));
        }
        Ok(())
    }
}

/// Linear interpolation of `samples` onto `n_out` points spanning the same
/// time interval.
pub fn resample(samples: &[f64], n_out: usize) -> Result<Vec<f64>> {
    let n_in = samples.len();
    if n_out < 2 {
        return Err(Error::Argument(format!("cannot resample to {n_out} points")));
    }
    if n_in < 2 {
        return Err(Error::Argument(format!("trace has only {n_in} samples")));
    }
    let scale = (n_in - 1) as f64 / (n_out - 1) as f64;
    Ok((0..n_out)
        .map(|k| {
            let u = k as f64 * scale;
            let i0 = (u.floor() as usize).min(n_in - 1);
            let frac = u - i0 as f64;
            if frac == 0.0 || i0 + 1 == n_in {
                samples[i0]
            } else {
                samples[i0] * (1.0 - frac) + samples[i0 + 1] * frac
            }
        })
        .collect())
}

/// Resamples an A-scan to `n_out` points. Only downsampling is supported.
pub fn resample_trace(a: &AScan, n_out: usize) -> Result<Vec<f64>> {
    if n_out < 2 {
        return Err(Error::Argument(format!("cannot resample to {n_out} points")));
    }
    if a.samples.len() < n_out {
        return Err(Error::Argument(format!(
            "trace of {} samples is shorter than the requested {n_out}",
            a.samples.len()
        )));
    }
    resample(&a.samples, n_out)
}

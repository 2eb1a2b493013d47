//! Radargram preprocessing: time-zero calibration, high-pass filtering,
//! fixed-width segmentation and amplitude normalization.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{s, Array2};
use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::defaults::{BSCAN_SAMPLES, FIRST_BREAK_THRESHOLD, HIGHPASS_CUTOFF_HZ, BSCAN_TRACES, SEGMENTS_PER_SCAN};
use crate::em::{decode_bscan, resample, BScan, ScanMeta};
use crate::error::{Error, Result};

/// Measured radargram, `data[[time, trace]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRadargram {
    pub data: Array2<f64>,
    pub dt_s: f64,
    pub device: String,
}

impl RawRadargram {
    pub fn new(data: Array2<f64>, dt_s: f64, device: impl Into<String>) -> Result<Self> {
        let r = Self { data, dt_s, device: device.into() };
        r.validate()?;
        Ok(r)
    }

    pub fn samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn traces(&self) -> usize {
        self.data.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s.is_finite() && self.dt_s > 0.0) {
            return Err(Error::Argument(format!("sample interval {} s", self.dt_s)));
        }
        if self.samples() < 2 || self.traces() == 0 {
            return Err(Error::Argument(format!("radargram is {}x{}", self.samples(), self.traces())));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("radargram contains non-finite values".into()));
        }
        Ok(())
    }

    pub fn from_bscan(scan: &BScan) -> Result<Self> {
        Self::new(scan.data.mapv(f64::from), scan.dt_s(), scan.meta.origin.clone())
    }
}

/// First sample whose magnitude reaches `frac` of the trace maximum.
pub fn first_break(trace: &[f64], frac: f64) -> Option<usize> {
    let peak = trace.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return None;
    }
    trace.iter().position(|v| v.abs() >= frac * peak)
}

/// Shifts every trace up by the median first break (lower median for an
/// even trace count), zero-filling the tail.
pub fn time_zero_calibrate(r: &RawRadargram, threshold_frac: f64) -> Result<RawRadargram> {
    if !(threshold_frac > 0.0 && threshold_frac < 1.0) {
        return Err(Error::Argument(format!("threshold fraction {threshold_frac} is outside (0, 1)")));
    }
    let mut breaks = Vec::with_capacity(r.traces());
    for (j, col) in r.data.columns().into_iter().enumerate() {
        let trace: Vec<f64> = col.to_vec();
        breaks.push(first_break(&trace, threshold_frac).ok_or(Error::DegenerateTrace { trace: j })?);
    }
    breaks.sort_unstable();
    let shift = breaks[(breaks.len() - 1) / 2];
    let n = r.samples();
    let mut out = Array2::zeros(r.data.dim());
    out.slice_mut(s![..n - shift, ..]).assign(&r.data.slice(s![shift.., ..]));
    Ok(RawRadargram { data: out, dt_s: r.dt_s, device: r.device.clone() })
}

/// Zero-phase gain: 0 up to `0.8 * cutoff`, 1 from `1.2 * cutoff`, raised
/// cosine in between.
pub fn highpass_gain(f_hz: f64, cutoff_hz: f64) -> f64 {
    let (lo, hi) = (0.8 * cutoff_hz, 1.2 * cutoff_hz);
    if f_hz <= lo {
        0.0
    } else if f_hz >= hi {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * (f_hz - lo) / (hi - lo)).cos())
    }
}

/// Frequency-domain high-pass of every trace. Each trace is mirrored to twice
/// its length before the transform so the periodic extension has no jump at
/// the ends.
pub fn highpass_filter(r: &RawRadargram, cutoff_hz: f64) -> Result<RawRadargram> {
    let nyquist = 0.5 / r.dt_s;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::Argument(format!("cutoff {cutoff_hz} Hz must lie in (0, {nyquist}) Hz")));
    }
    let n = r.samples();
    let len = 2 * n;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let df = 1.0 / (len as f64 * r.dt_s);
    let gain: Vec<f64> = (0..len)
        .map(|k| highpass_gain(k.min(len - k) as f64 * df, cutoff_hz))
        .collect();
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    let mut out = Array2::zeros(r.data.dim());
    for (j, col) in r.data.columns().into_iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            buf[i] = Complex::new(v, 0.0);
            buf[len - 1 - i] = Complex::new(v, 0.0);
        }
        fwd.process(&mut buf);
        for (b, g) in buf.iter_mut().zip(&gain) {
            *b *= *g;
        }
        inv.process(&mut buf);
        let scale = 1.0 / len as f64;
        for i in 0..n {
            out[[i, j]] = buf[i].re * scale;
        }
    }
    Ok(RawRadargram { data: out, dt_s: r.dt_s, device: r.device.clone() })
}

/// Verbatim traces `start..start + width`.
pub fn segment_at(r: &RawRadargram, start: usize, width: usize) -> Result<RawRadargram> {
    if width == 0 || start + width > r.traces() {
        return Err(Error::Argument(format!(
            "traces {start}..{} do not fit a {}-trace radargram",
            start + width,
            r.traces()
        )));
    }
    Ok(RawRadargram {
        data: r.data.slice(s![.., start..start + width]).to_owned(),
        dt_s: r.dt_s,
        device: r.device.clone(),
    })
}

/// Resamples the time axis to `BSCAN_SAMPLES` points over the same window.
pub fn to_bscan(r: &RawRadargram) -> Result<BScan> {
    let window = (r.samples() - 1) as f64 * r.dt_s;
    let mut data = Array2::<f32>::zeros((BSCAN_SAMPLES, r.traces()));
    for (j, col) in r.data.columns().into_iter().enumerate() {
        let trace = resample(&col.to_vec(), BSCAN_SAMPLES)?;
        for (i, v) in trace.into_iter().enumerate() {
            data[[i, j]] = v as f32;
        }
    }
    let mut scan = BScan::new(data, window, 0.0);
    scan.meta = ScanMeta { origin: r.device.clone(), seed: None };
    Ok(scan)
}

/// `k` cuts of `width` adjacent traces at uniform random offsets, each
/// resampled to the canonical sample count.
pub fn segment<R: Rng + ?Sized>(r: &RawRadargram, width: usize, rng: &mut R, k: usize) -> Result<Vec<BScan>> {
    if width == 0 || r.traces() < width {
        return Err(Error::Argument(format!("{} traces cannot hold a {width}-trace segment", r.traces())));
    }
    if k == 0 {
        return Err(Error::Argument("segment count must be at least 1".into()));
    }
    (0..k)
        .map(|_| {
            let start = rng.random_range(0..=r.traces() - width);
            to_bscan(&segment_at(r, start, width)?)
        })
        .collect()
}

/// Divides by the largest magnitude.
pub fn normalize(b: &BScan) -> Result<BScan> {
    let peak = b.data.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    if peak == 0.0 || !peak.is_finite() {
        return Err(Error::DegenerateScan);
    }
    let mut out = b.clone();
    out.data.mapv_inplace(|v| v / peak);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepOptions {
    pub threshold_frac: f64,
    pub cutoff_hz: f64,
    pub segment_width: usize,
    pub segments_per_scan: usize,
}

impl Default for PrepOptions {
    fn default() -> Self {
        Self {
            threshold_frac: FIRST_BREAK_THRESHOLD,
            cutoff_hz: HIGHPASS_CUTOFF_HZ,
            segment_width: BSCAN_TRACES,
            segments_per_scan: SEGMENTS_PER_SCAN,
        }
    }
}

/// Calibrate, filter, cut and normalize.
pub fn preprocess<R: Rng + ?Sized>(r: &RawRadargram, opts: &PrepOptions, rng: &mut R) -> Result<Vec<BScan>> {
    r.validate()?;
    let cal = time_zero_calibrate(r, opts.threshold_frac)?;
    let filtered = highpass_filter(&cal, opts.cutoff_hz)?;
    segment(&filtered, opts.segment_width, rng, opts.segments_per_scan)?
        .iter()
        .map(normalize)
        .collect()
}

/// CSV radargram: a `dt=<seconds>` header line, then one row per time sample
/// with one comma-separated value per trace.
pub fn parse_radargram_csv(text: &str, device: &str) -> Result<RawRadargram> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty radargram".into() })?;
    let dt_s: f64 = header
        .trim()
        .strip_prefix("dt=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Parse { line: 1, message: format!("expected `dt=<seconds>`, found `{}`", header.trim()) })?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, raw) in lines {
        let line = idx + 1;
        let row: Vec<f64> = raw
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse { line, message: format!("bad value `{}`", t.trim()) })
            })
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Parse { line, message: format!("{} values, expected {c}", row.len()) })
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or(Error::Parse { line: 2, message: "no samples".into() })?;
    let data = Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::Format(e.to_string()))?;
    RawRadargram::new(data, dt_s, device)
}

pub fn format_radargram_csv(r: &RawRadargram) -> String {
    let mut out = format!("dt={}\n", r.dt_s);
    for row in r.data.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Reads a `.bscan` file or, for any other extension, a CSV radargram.
pub fn read_radargram(path: &Path) -> Result<RawRadargram> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let device = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    if path.extension().is_some_and(|e| e == "bscan") {
        let mut r = RawRadargram::from_bscan(&decode_bscan(&bytes)?)?;
        r.device = device;
        Ok(r)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::Format(format!("{} is not UTF-8", path.display())))?;
        parse_radargram_csv(&text, &device)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tone(freq: f64, dt: f64, n: usize, traces: usize) -> RawRadargram {
        let data = Array2::from_shape_fn((n, traces), |(i, j)| (2.0 * std::f64::consts::PI * freq * i as f64 * dt + 0.3 * j as f64).sin());
        RawRadargram::new(data, dt, "tone").unwrap()
    }

    fn rms(a: &Array2<f64>) -> f64 {
        (a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64).sqrt()
    }

    #[test]
    fn spike_moves_to_time_zero() {
        let mut data = Array2::zeros((300, 5));
        data.row_mut(30).fill(1.0);
        let r = RawRadargram::new(data, 1e-10, "t").unwrap();
        let c = time_zero_calibrate(&r, 0.2).unwrap();
        assert!(c.data.row(0).iter().all(|&v| v == 1.0));
        assert_eq!(c.data.iter().filter(|&&v| v != 0.0).count(), 5);
    }

    #[test]
    fn calibrated_input_is_a_fixed_point() {
        let data = Array2::from_shape_fn((100, 4), |(i, j)| if i == 0 { 1.0 } else { 0.1 * ((i * j) as f64).sin() });
        let r = RawRadargram::new(data, 1e-10, "t").unwrap();
        assert_eq!(time_zero_calibrate(&r, 0.2).unwrap(), r);
    }

    #[test]
    fn dead_channel_is_reported() {
        let mut data = Array2::from_elem((50, 3), 1.0);
        data.column_mut(1).fill(0.0);
        let r = RawRadargram::new(data, 1e-10, "t").unwrap();
        assert!(matches!(time_zero_calibrate(&r, 0.2), Err(Error::DegenerateTrace { trace: 1 })));
        assert!(matches!(time_zero_calibrate(&r, 1.0), Err(Error::Argument(_))));
    }

    #[test]
    fn median_break_is_used() {
        let mut data = Array2::zeros((64, 3));
        data[[10, 0]] = 1.0;
        data[[20, 1]] = 1.0;
        data[[12, 2]] = 1.0;
        let r = RawRadargram::new(data, 1e-10, "t").unwrap();
        let c = time_zero_calibrate(&r, 0.5).unwrap();
        assert_eq!(c.data[[0, 2]], 1.0);
        assert_eq!(c.data[[8, 1]], 1.0);
        assert_eq!(c.data.column(0).sum(), 0.0);
    }

    proptest! {
        // Traces share a first break and carry arbitrary content after it.
        #[test]
        fn calibration_is_idempotent(
            fb in 0usize..80,
            vals in proptest::collection::vec(-1.0f64..1.0, 4 * 120),
            peaks in proptest::collection::vec(1.0f64..3.0, 4),
        ) {
            let data = Array2::from_shape_fn((120, 4), |(i, j)| {
                if i < fb { 0.1 * peaks[j] * vals[j * 120 + i] } else if i == fb { -peaks[j] } else { 0.9 * vals[j * 120 + i] }
            });
            let r = RawRadargram::new(data, 1e-10, "p").unwrap();
            let once = time_zero_calibrate(&r, 0.2).unwrap();
            let twice = time_zero_calibrate(&once, 0.2).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn highpass_tones() {
        let (dt, n) = (1.0e-10, 2048);
        for (f, lo_db, hi_db) in [(100e6, f64::NEG_INFINITY, -20.0), (1e9, -1.0, 1.0)] {
            let r = tone(f, dt, n, 3);
            let out = highpass_filter(&r, 500e6).unwrap();
            let db = 20.0 * (rms(&out.data) / rms(&r.data)).log10();
            assert!(db >= lo_db && db <= hi_db, "{f} Hz: {db} dB");
        }
    }

    #[test]
    fn highpass_zero_and_nyquist() {
        let r = RawRadargram::new(Array2::zeros((64, 2)), 1e-10, "z").unwrap();
        assert!(highpass_filter(&r, 500e6).unwrap().data.iter().all(|&v| v == 0.0));
        assert!(matches!(highpass_filter(&r, 5e9), Err(Error::Argument(_))));
        assert_eq!(highpass_gain(400e6, 500e6), 0.0);
        assert_eq!(highpass_gain(600e6, 500e6), 1.0);
        assert!((highpass_gain(500e6, 500e6) - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn highpass_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = Array2::from_shape_fn((200, 2), |_| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let y = Array2::from_shape_fn((200, 2), |_| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let f = |d: Array2<f64>| highpass_filter(&RawRadargram::new(d, 5e-11, "l").unwrap(), 500e6).unwrap().data;
            let lhs = f(&x * a + &y * b);
            let rhs = f(x.clone()) * a + f(y.clone()) * b;
            let scale = lhs.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
            for (l, r) in lhs.iter().zip(rhs.iter()) {
                prop_assert!((l - r).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn segments_have_canonical_shape_and_valid_offsets() {
        let r = tone(1e9, 1e-10, 400, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let segs = segment(&r, 40, &mut rng, 3).unwrap();
        assert_eq!(segs.len(), 3);
        assert!(segs.iter().all(|s| s.data.dim() == (255, 40)));
        assert_eq!(segs[0], segs[1]);
        assert_eq!(segs[1], segs[2]);

        let wide = RawRadargram::new(Array2::from_shape_fn((300, 120), |(_, j)| j as f64 + 1.0), 1e-10, "w").unwrap();
        let segs = segment(&wide, 40, &mut rng, 500).unwrap();
        let starts: Vec<usize> = segs.iter().map(|s| s.data[[0, 0]] as usize - 1).collect();
        assert!(starts.iter().all(|&s| s <= 80));
        assert!(starts.contains(&0) && starts.contains(&80));
        assert!(matches!(segment(&wide, 121, &mut rng, 1), Err(Error::Argument(_))));
    }

    #[test]
    fn segment_at_is_verbatim() {
        let r = tone(3e8, 1e-10, 50, 90);
        let s = segment_at(&r, 17, 40).unwrap();
        assert_eq!(s.data, r.data.slice(s![.., 17..57]));
    }

    #[test]
    fn normalize_examples() {
        let mut b = BScan::zeros_canonical();
        assert!(matches!(normalize(&b), Err(Error::DegenerateScan)));
        b.data[[3, 4]] = -5.0;
        b.data[[7, 1]] = 2.5;
        let n = normalize(&b).unwrap();
        assert_eq!(n.data[[3, 4]], -1.0);
        assert_eq!(n.data[[7, 1]], 0.5);
        assert_eq!(normalize(&n).unwrap(), n);
    }

    proptest! {
        #[test]
        fn normalize_keeps_signs(vals in proptest::collection::vec(-100.0f32..100.0, 255 * 40)) {
            prop_assume!(vals.iter().any(|&v| v != 0.0));
            let b = BScan::new(Array2::from_shape_vec((255, 40), vals).unwrap(), 12e-9, 0.004);
            let n = normalize(&b).unwrap();
            let peak = n.data.iter().fold(0.0f32, |m, v| m.max(v.abs()));
            prop_assert_eq!(peak, 1.0);
            for (a, c) in b.data.iter().zip(n.data.iter()) {
                prop_assert_eq!(a.signum() * (*a != 0.0) as i32 as f32, c.signum() * (*c != 0.0) as i32 as f32);
            }
        }
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let r = tone(7e8, 2.5e-11, 12, 3);
        let back = parse_radargram_csv(&format_radargram_csv(&r), "tone").unwrap();
        assert_eq!(back, r);
        assert!(matches!(parse_radargram_csv("dt=1e-10\n1,2\n3\n", "x"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_radargram_csv("step=1\n1\n2\n", "x"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_radargram_csv("dt=1e-10\n1,x\n", "x"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_radargram_csv("dt=-1\n1\n2\n", "x").is_err());
    }

    #[test]
    fn pipeline_is_deterministic() {
        let mut data = Array2::from_shape_fn((600, 90), |(i, j)| 0.01 * ((i * 7 + j * 3) as f64).sin());
        data.row_mut(42).fill(1.0);
        let r = RawRadargram::new(data, 2e-11, "sim").unwrap();
        let opts = PrepOptions::default();
        let a = preprocess(&r, &opts, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = preprocess(&r, &opts, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), SEGMENTS_PER_SCAN);
        for s in &a {
            assert_eq!(s.data.dim(), (255, 40));
            assert_eq!(s.data.iter().fold(0.0f32, |m, v| m.max(v.abs())), 1.0);
        }
    }
}

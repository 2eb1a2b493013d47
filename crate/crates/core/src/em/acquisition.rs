use ndarray::Array2;

use super::fdtd::{FieldState, Solver};
use super::grid::{GridSpec, SimGrid};
use super::source::SourceSpec;
use super::trace::{resample_trace, AScan, BScan, ScanMeta};
use crate::defaults::{
    ANTENNA_SEPARATION_M, BSCAN_SAMPLES, BSCAN_TRACES, CENTER_FREQ_HZ, TRACE_STEP_M,
};
use crate::error::{Error, Result};
use crate::scene::{rasterize_window, WallConfig};

/// Runs the solver for the full window and records Ez at the receiver after
/// every step, so sample `k` is the field at `(k + 1) * dt`.
pub fn run_ascan(grid: &SimGrid, source: &SourceSpec) -> Result<AScan> {
    grid.validate()?;
    source.check_placement(grid)?;
    let solver = Solver::new(grid, source)?;
    let mut state = FieldState::zeros(grid);
    let mut samples = Vec::with_capacity(solver.n_steps());
    for k in 0..solver.n_steps() {
        solver.step(&mut state, k)?;
        samples.push(f64::from(solver.receiver(&state)));
    }
    Ok(AScan {
        samples,
        dt_s: grid.dt_s,
        t0_s: grid.dt_s,
    })
}

/// B-scan acquisition: a Tx/Rx pair stepped across the wall.
///
/// The simulation window travels with the antennas: for trace `p` the wall is
/// rasterized with the window centered on the antenna midpoint, so the pair
/// always sees the same distance to the absorbing boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub grid: GridSpec,
    pub n_traces: usize,
    pub trace_step_m: f64,
    pub separation_m: f64,
    pub n_samples: usize,
    pub center_freq_hz: f64,
    pub source_amplitude: f64,
}

impl Default for Acquisition {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            n_traces: BSCAN_TRACES,
            trace_step_m: TRACE_STEP_M,
            separation_m: ANTENNA_SEPARATION_M,
            n_samples: BSCAN_SAMPLES,
            center_freq_hz: CENTER_FREQ_HZ,
            source_amplitude: 1.0,
        }
    }
}

impl Acquisition {
    /// Antenna midpoints in wall coordinates, centered on the strip.
    pub fn midpoints(&self) -> Vec<f64> {
        let center = self.grid.width_m / 2.0;
        let span = (self.n_traces.saturating_sub(1)) as f64 * self.trace_step_m;
        (0..self.n_traces)
            .map(|p| center - span / 2.0 + p as f64 * self.trace_step_m)
            .collect()
    }

    /// Window offset (cells) for every trace.
    pub fn window_offsets(&self) -> Result<Vec<i64>> {
        if self.n_traces == 0 {
            return Err(Error::Geometry("acquisition needs at least one trace".into()));
        }
        let center = self.grid.width_m / 2.0;
        let half = self.separation_m / 2.0;
        self.midpoints()
            .into_iter()
            .map(|x| {
                if x - half < -1e-12 || x + half > self.grid.width_m + 1e-12 {
                    return Err(Error::Geometry(format!(
                        "antenna pair at {x} m leaves the {} m wall",
                        self.grid.width_m
                    )));
                }
                let cells = (x - center) / self.grid.cell_m;
                if (cells - cells.round()).abs() > 1e-6 {
                    return Err(Error::Geometry(format!(
                        "trace position {x} m is not on the {} m grid",
                        self.grid.cell_m
                    )));
                }
                Ok(cells.round() as i64)
            })
            .collect()
    }

    pub fn source_for(&self, grid: &SimGrid) -> Result<SourceSpec> {
        let mut src = SourceSpec::centered(grid, self.separation_m, self.grid.antenna_height_m)?;
        src.center_freq_hz = self.center_freq_hz;
        src.delay_s = 1.0 / self.center_freq_hz;
        src.amplitude = self.source_amplitude;
        src.validate(grid, self.separation_m)?;
        Ok(src)
    }
}

/// Simulates one trace per antenna position and resamples each to
/// `acq.n_samples`. Positions whose rasterized window is identical to an
/// earlier one reuse that trace.
pub fn run_bscan(config: &WallConfig, acq: &Acquisition) -> Result<BScan> {
    let offsets = acq.window_offsets()?;
    let mut data = Array2::<f32>::zeros((acq.n_samples, acq.n_traces));
    let mut done: Vec<(SimGrid, Vec<f64>)> = Vec::new();
    for (p, &offset) in offsets.iter().enumerate() {
        let grid = rasterize_window(config, &acq.grid, offset)?;
        let cached = done
            .iter()
            .position(|(g, _)| g.eps_r == grid.eps_r && g.sigma == grid.sigma);
        let column = match cached {
            Some(i) => done[i].1.clone(),
            None => {
                let src = acq.source_for(&grid)?;
                let trace = resample_trace(&run_ascan(&grid, &src)?, acq.n_samples)?;
                done.push((grid, trace.clone()));
                trace
            }
        };
        for (row, v) in column.iter().enumerate() {
            data[[row, p]] = *v as f32;
        }
    }
    let mut scan = BScan::new(data, acq.grid.time_window_s, acq.trace_step_m);
    scan.meta = ScanMeta {
        origin: "fdtd".into(),
        seed: Some(config.seed),
    };
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_offsets_span_central_156mm() {
        let acq = Acquisition::default();
        let off = acq.window_offsets().unwrap();
        assert_eq!(off.len(), 40);
        assert_eq!(off[0], -39);
        assert_eq!(off[39], 39);
        let mids = acq.midpoints();
        assert!((mids[39] - mids[0] - 0.156).abs() < 1e-12);
    }

    #[test]
    fn off_grid_step_is_rejected() {
        let acq = Acquisition { trace_step_m: 0.003, ..Acquisition::default() };
        assert!(matches!(acq.window_offsets(), Err(Error::Geometry(_))));
        let acq = Acquisition { trace_step_m: 0.01, ..Acquisition::default() };
        assert!(matches!(acq.window_offsets(), Err(Error::Geometry(_))));
    }
}

use std::f64::consts::PI;

use super::grid::SimGrid;
use crate::defaults::{ANTENNA_SEPARATION_M, CENTER_FREQ_HZ};
use crate::error::{Error, Result};

/// Ricker wavelet `(1 - 2 pi^2 f^2 tau^2) exp(-pi^2 f^2 tau^2)` with `tau = t - delay`.
pub fn ricker_wavelet(t: f64, f: f64, delay: f64) -> f64 {
    let a = (PI * f * (t - delay)).powi(2);
    (1.0 - 2.0 * a) * (-a).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waveform {
    Ricker,
}

/// Point soft source and point receiver, in grid (row, col) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub kind: Waveform,
    pub center_freq_hz: f64,
    pub delay_s: f64,
    /// Scale of the value added to Ez at the transmitter each step.
    pub amplitude: f64,
    pub tx: (usize, usize),
    pub rx: (usize, usize),
}

impl SourceSpec {
    pub fn waveform(&self, t: f64) -> f64 {
        match self.kind {
            Waveform::Ricker => self.amplitude * ricker_wavelet(t, self.center_freq_hz, self.delay_s),
        }
    }

    /// Standard antenna pair for `grid`: centered laterally, `separation_m`
    /// apart, `height_m` above the wall surface.
    pub fn centered(grid: &SimGrid, separation_m: f64, height_m: f64) -> Result<Self> {
        let sep_cells = (separation_m / grid.cell_m).round() as usize;
        let center = grid.pml_cells + grid.interior_cols() / 2;
        let half = sep_cells / 2;
        let height_cells = (height_m / grid.cell_m).round() as usize;
        let surface = grid.surface_row();
        if center < half || height_cells > surface {
            return Err(Error::Geometry("antennas fall outside the grid".into()));
        }
        let row = surface - height_cells;
        let spec = Self {
            kind: Waveform::Ricker,
            center_freq_hz: CENTER_FREQ_HZ,
            delay_s: 1.0 / CENTER_FREQ_HZ,
            amplitude: 1.0,
            tx: (row, center - half),
            rx: (row, center - half + sep_cells),
        };
        spec.check_placement(grid)?;
        Ok(spec)
    }

    pub fn check_placement(&self, grid: &SimGrid) -> Result<()> {
        for (name, (r, c)) in [("transmitter", self.tx), ("receiver", self.rx)] {
            if !grid.is_interior(r, c) {
                return Err(Error::Geometry(format!(
                    "{name} at cell ({r}, {c}) lies inside the PML or outside the grid"
                )));
            }
        }
        Ok(())
    }

    /// Checks separation against `separation_m` (one-cell tolerance) and the
    /// source delay.
    pub fn validate(&self, grid: &SimGrid, separation_m: f64) -> Result<()> {
        self.check_placement(grid)?;
        let dx = (self.rx.1 as f64 - self.tx.1 as f64).abs() * grid.cell_m;
        if (dx - separation_m).abs() > grid.cell_m + 1e-12 {
            return Err(Error::Geometry(format!(
                "antenna separation {dx} m differs from {separation_m} m by more than one cell"
            )));
        }
        if !(self.center_freq_hz > 0.0) {
            return Err(Error::Argument("center frequency must be positive".into()));
        }
        if self.delay_s < 1.0 / self.center_freq_hz {
            return Err(Error::Argument(format!(
                "source delay {:e} s is shorter than one period",
                self.delay_s
            )));
        }
        Ok(())
    }
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            kind: Waveform::Ricker,
            center_freq_hz: CENTER_FREQ_HZ,
            delay_s: 1.0 / CENTER_FREQ_HZ,
            amplitude: 1.0,
            tx: (0, 0),
            rx: (0, (ANTENNA_SEPARATION_M / crate::defaults::CELL_M).round() as usize),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::GridSpec;

    #[test]
    fn peak_is_one_at_delay() {
        assert_eq!(ricker_wavelet(2e-9, 1e9, 2e-9), 1.0);
    }

    #[test]
    fn zero_crossing() {
        let f = 1e9;
        let tau = 1.0 / (PI * f * 2f64.sqrt());
        assert!(ricker_wavelet(1e-9 + tau, f, 1e-9).abs() < 1e-12);
        assert!(ricker_wavelet(1e-9 - tau, f, 1e-9).abs() < 1e-12);
    }

    #[test]
    fn one_nanosecond_after_delay() {
        // Oracle: evaluate the closed form directly.
        let a = PI * PI;
        let expected = (1.0 - 2.0 * a) * (-a).exp();
        let got = ricker_wavelet(2e-9, 1e9, 1e-9);
        assert!((got - expected).abs() <= 1e-15 * expected.abs().max(1.0));
        assert!((got - (-9.6924e-4)).abs() < 1e-7);
    }

    #[test]
    fn integrates_to_zero() {
        let (f, delay, dt) = (1e9, 3e-9, 1e-13);
        let sum: f64 = (0..60_000).map(|k| ricker_wavelet(k as f64 * dt, f, delay) * dt).sum();
        assert!(sum.abs() < 1e-15, "{sum}");
    }

    #[test]
    fn centered_antennas_are_40mm_apart() {
        let grid = GridSpec::default().empty_grid().unwrap();
        let src = SourceSpec::centered(&grid, 0.04, 0.05).unwrap();
        src.validate(&grid, 0.04).unwrap();
        assert_eq!(src.rx.1 - src.tx.1, 20);
        assert_eq!(src.tx.0, grid.surface_row() - 25);
        let mut bad = src;
        bad.delay_s = 0.5e-9;
        assert!(bad.validate(&grid, 0.04).is_err());
        let mut bad = src;
        bad.tx = (2, 2);
        assert!(matches!(bad.validate(&grid, 0.04), Err(Error::Geometry(_))));
    }
}

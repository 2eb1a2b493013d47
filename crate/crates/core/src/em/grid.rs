use crate::defaults::{
    ANTENNA_HEADROOM_M, ANTENNA_HEIGHT_M, C0, CELL_M, COURANT_FRACTION, GRID_DEPTH_M,
    GRID_WIDTH_M, LAYER_SIGMA, PML_CELLS, TIME_WINDOW_S,
};
use crate::error::{Error, Result};

/// Minimum absorbing-boundary thickness accepted by the solver.
pub const MIN_PML_CELLS: usize = 8;

/// Geometry and timing of the computational domain, before any material is
/// assigned.
///
/// Rows run in depth, columns across the wall. From the top the domain holds
/// the PML, an air gap hosting the antennas, the wall rows, and the bottom PML.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub cell_m: f64,
    pub width_m: f64,
    pub depth_m: f64,
    pub pml_cells: usize,
    /// Antenna height above the wall surface.
    pub antenna_height_m: f64,
    /// Air between the antennas and the top PML.
    pub headroom_m: f64,
    pub courant_fraction: f64,
    pub time_window_s: f64,
    /// Conductivity of every wall layer and grain.
    pub layer_sigma: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            cell_m: CELL_M,
            width_m: GRID_WIDTH_M,
            depth_m: GRID_DEPTH_M,
            pml_cells: PML_CELLS,
            antenna_height_m: ANTENNA_HEIGHT_M,
            headroom_m: ANTENNA_HEADROOM_M,
            courant_fraction: COURANT_FRACTION,
            time_window_s: TIME_WINDOW_S,
            layer_sigma: LAYER_SIGMA,
        }
    }
}

fn cells_exact(len_m: f64, cell_m: f64, what: &str) -> Result<usize> {
    let n = len_m / cell_m;
    let rounded = n.round();
    if rounded < 1.0 || (n - rounded).abs() > 1e-6 {
        return Err(Error::Geometry(format!(
            "cell size {cell_m} m does not divide the {what} ({len_m} m)"
        )));
    }
    Ok(rounded as usize)
}

impl GridSpec {
    pub fn with_cell(cell_m: f64) -> Self {
        Self {
            cell_m,
            ..Self::default()
        }
    }

    pub fn interior_cols(&self) -> Result<usize> {
        cells_exact(self.width_m, self.cell_m, "grid width")
    }

    pub fn wall_rows(&self) -> Result<usize> {
        cells_exact(self.depth_m, self.cell_m, "grid depth")
    }

    pub fn air_rows(&self) -> Result<usize> {
        cells_exact(self.antenna_height_m + self.headroom_m, self.cell_m, "air gap")
    }

    /// Largest stable time step of the 2D Yee scheme.
    pub fn courant_limit(&self) -> f64 {
        self.cell_m / (C0 * std::f64::consts::SQRT_2)
    }

    /// Time step and step count such that `n_steps * dt` is exactly the time window.
    pub fn time_stepping(&self) -> (f64, usize) {
        let target = self.courant_fraction * self.courant_limit();
        let n_steps = (self.time_window_s / target).ceil() as usize;
        (self.time_window_s / n_steps as f64, n_steps)
    }

    /// All-air domain with this geometry.
    pub fn empty_grid(&self) -> Result<SimGrid> {
        let cols = self.interior_cols()?;
        let wall_rows = self.wall_rows()?;
        let air_rows = self.air_rows()?;
        let nx = cols + 2 * self.pml_cells;
        let ny = air_rows + wall_rows + 2 * self.pml_cells;
        let (dt_s, n_steps) = self.time_stepping();
        Ok(SimGrid {
            cell_m: self.cell_m,
            nx,
            ny,
            pml_cells: self.pml_cells,
            air_rows,
            wall_rows,
            eps_r: vec![1.0; nx * ny],
            sigma: vec![0.0; nx * ny],
            dt_s,
            n_steps,
        })
    }
}

/// Discretized material fields plus run parameters.
///
/// `eps_r` and `sigma` are row-major over the full domain, PML included.
#[derive(Debug, Clone, PartialEq)]
pub struct SimGrid {
    pub cell_m: f64,
    pub nx: usize,
    pub ny: usize,
    pub pml_cells: usize,
    /// Interior air rows above the wall surface.
    pub air_rows: usize,
    pub wall_rows: usize,
    pub eps_r: Vec<f64>,
    pub sigma: Vec<f64>,
    pub dt_s: f64,
    pub n_steps: usize,
}

impl SimGrid {
    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.nx + col
    }

    pub fn width_m(&self) -> f64 {
        (self.nx - 2 * self.pml_cells) as f64 * self.cell_m
    }

    pub fn depth_m(&self) -> f64 {
        self.wall_rows as f64 * self.cell_m
    }

    /// First row of wall material.
    pub fn surface_row(&self) -> usize {
        self.pml_cells + self.air_rows
    }

    pub fn interior_cols(&self) -> usize {
        self.nx - 2 * self.pml_cells
    }

    pub fn is_interior(&self, row: usize, col: usize) -> bool {
        let p = self.pml_cells;
        row >= p && row < self.ny - p && col >= p && col < self.nx - p
    }

    pub fn courant_limit(&self) -> f64 {
        self.cell_m / (C0 * std::f64::consts::SQRT_2)
    }

    /// Sets a time step without the Courant check. Only useful for probing
    /// the solver's blow-up detection.
    pub fn with_time_step_unchecked(mut self, dt_s: f64) -> Self {
        self.dt_s = dt_s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.pml_cells < MIN_PML_CELLS {
            return Err(Error::Geometry(format!(
                "PML of {} cells is thinner than {MIN_PML_CELLS}",
                self.pml_cells
            )));
        }
        let inner_x = self.nx.saturating_sub(2 * self.pml_cells);
        let inner_y = self.ny.saturating_sub(2 * self.pml_cells);
        if inner_x <= 2 * self.pml_cells || inner_y <= 2 * self.pml_cells {
            return Err(Error::Geometry(format!(
                "interior {inner_x}x{inner_y} too small for a {}-cell PML",
                self.pml_cells
            )));
        }
        if self.eps_r.len() != self.nx * self.ny || self.sigma.len() != self.nx * self.ny {
            return Err(Error::Geometry("material arrays do not match the grid".into()));
        }
        if let Some(e) = self.eps_r.iter().find(|e| !(**e >= 1.0) || !e.is_finite()) {
            return Err(Error::Geometry(format!("relative permittivity {e} below 1")));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::Geometry(format!("negative conductivity {s}")));
        }
        if !(self.dt_s > 0.0) || self.dt_s > self.courant_limit() * (1.0 + 1e-12) {
            return Err(Error::Geometry(format!(
                "time step {:e} s exceeds the Courant limit {:e} s",
                self.dt_s,
                self.courant_limit()
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::Geometry("zero time steps".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_domain_dimensions() {
        let g = GridSpec::default().empty_grid().unwrap();
        assert_eq!(g.interior_cols(), 120);
        assert_eq!(g.wall_rows, 230);
        assert_eq!(g.air_rows, 30);
        assert_eq!(g.nx, 140);
        assert_eq!(g.ny, 280);
        g.validate().unwrap();
    }

    #[test]
    fn time_step_covers_window_exactly() {
        let spec = GridSpec::default();
        let (dt, n) = spec.time_stepping();
        assert!(dt <= 0.95 * spec.courant_limit() + 1e-24);
        assert!((dt * n as f64 - 12e-9).abs() < 1e-21);
        assert_eq!(n, 2678);
        assert!((dt - 4.48e-12).abs() < 0.01e-12);
    }

    #[test]
    fn rejects_non_dividing_cell() {
        assert!(GridSpec::with_cell(0.0017).empty_grid().is_err());
    }

    #[test]
    fn validate_catches_invariant_violations() {
        let g = GridSpec::default().empty_grid().unwrap();
        let mut bad = g.clone();
        bad.eps_r[5] = 0.5;
        assert!(bad.validate().is_err());
        let mut bad = g.clone();
        bad.sigma[5] = -1.0;
        assert!(bad.validate().is_err());
        let bad = g.clone().with_time_step_unchecked(g.courant_limit() * 1.5);
        assert!(bad.validate().is_err());
        let mut bad = g;
        bad.pml_cells = 4;
        assert!(bad.validate().is_err());
    }
}

//! 2D TMz Yee solver with a convolutional PML.
//!
//! Staggering on an `ny x nx` row-major layout:
//! `Ez[j][i]` sits on the integer node, `Hx[j][i]` half a cell below it in
//! depth, `Hy[j][i]` half a cell to its right. The outermost Ez ring is held at
//! zero (PEC behind the PML).

use super::grid::SimGrid;
use super::source::SourceSpec;
use crate::defaults::{EPS0, MU0, PML_ORDER};
use crate::error::{Error, Result};

/// How often (in steps) the field magnitude is scanned for blow-up.
const STABILITY_CHECK_INTERVAL: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub ez: Vec<f32>,
    pub hx: Vec<f32>,
    pub hy: Vec<f32>,
    psi_ezx: Vec<f32>,
    psi_ezy: Vec<f32>,
    psi_hxy: Vec<f32>,
    psi_hyx: Vec<f32>,
}

impl FieldState {
    pub fn zeros(grid: &SimGrid) -> Self {
        let n = grid.nx * grid.ny;
        Self {
            ez: vec![0.0; n],
            hx: vec![0.0; n],
            hy: vec![0.0; n],
            psi_ezx: vec![0.0; n],
            psi_ezy: vec![0.0; n],
            psi_hxy: vec![0.0; n],
            psi_hyx: vec![0.0; n],
        }
    }

    pub fn max_abs_ez(&self) -> f32 {
        self.ez.iter().fold(0.0f32, |m, v| if v.abs() > m || v.is_nan() { v.abs() } else { m })
    }
}

/// CPML recursion coefficients along one axis. `idx` lists the nodes that
/// lie inside the absorbing layer.
#[derive(Debug, Clone)]
struct PmlAxis {
    e_idx: Vec<usize>,
    e_b: Vec<f32>,
    e_a: Vec<f32>,
    h_idx: Vec<usize>,
    h_b: Vec<f32>,
    h_a: Vec<f32>,
}

impl PmlAxis {
    /// `n` nodes along the axis, `npml` absorbing cells at each end.
    fn new(n: usize, npml: usize, cell: f64, dt: f64) -> Self {
        let thickness = npml as f64 * cell;
        let eta0 = (MU0 / EPS0).sqrt();
        let sigma_max = 0.8 * (PML_ORDER + 1.0) / (eta0 * cell);
        let alpha_max = 0.05;
        let inner_lo = npml as f64;
        let inner_hi = (n - 1 - npml) as f64;
        // depth into the absorber for a node at fractional position `x`
        let depth = |x: f64| -> f64 {
            if x < inner_lo {
                (inner_lo - x) * cell
            } else if x > inner_hi {
                (x - inner_hi) * cell
            } else {
                0.0
            }
        };
        let coeffs = |rho: f64| -> (f32, f32) {
            let r = (rho / thickness).min(1.0);
            let sigma = sigma_max * r.powf(PML_ORDER);
            let alpha = alpha_max * (1.0 - r);
            let b = (-(sigma + alpha) * dt / EPS0).exp();
            let a = if sigma > 0.0 { sigma / (sigma + alpha) * (b - 1.0) } else { 0.0 };
            (b as f32, (a / cell) as f32)
        };
        let mut axis = Self {
            e_idx: Vec::new(),
            e_b: Vec::new(),
            e_a: Vec::new(),
            h_idx: Vec::new(),
            h_b: Vec::new(),
            h_a: Vec::new(),
        };
        // Ez nodes 1..n-1 are updated; the boundary node stays zero.
        for i in 1..n - 1 {
            let rho = depth(i as f64);
            if rho > 0.0 {
                let (b, a) = coeffs(rho);
                axis.e_idx.push(i);
                axis.e_b.push(b);
                axis.e_a.push(a);
            }
        }
        for i in 0..n - 1 {
            let rho = depth(i as f64 + 0.5);
            if rho > 0.0 {
                let (b, a) = coeffs(rho);
                axis.h_idx.push(i);
                axis.h_b.push(b);
                axis.h_a.push(a);
            }
        }
        axis
    }
}

/// Splits a sorted index list into `(first index, position in list, length)`
/// runs of consecutive indices.
fn runs(idx: &[usize]) -> Vec<(usize, usize, usize)> {
    let mut out: Vec<(usize, usize, usize)> = Vec::new();
    for (pos, &i) in idx.iter().enumerate() {
        match out.last_mut() {
            Some((start, _, len)) if *start + *len == i => *len += 1,
            _ => out.push((i, pos, 1)),
        }
    }
    out
}

/// Precomputed update coefficients for one grid and source.
#[derive(Debug, Clone)]
pub struct Solver {
    nx: usize,
    ny: usize,
    dt: f64,
    n_steps: usize,
    ca: Vec<f32>,
    /// Ez curl coefficient including 1/cell.
    cb: Vec<f32>,
    /// Ez coefficient applied to PML auxiliary terms (already divided by cell).
    cb_psi: Vec<f32>,
    ch: f32,
    ch_psi: f32,
    pml_x: PmlAxis,
    pml_y: PmlAxis,
    x_e_runs: Vec<(usize, usize, usize)>,
    x_h_runs: Vec<(usize, usize, usize)>,
    source: SourceSpec,
    tx: usize,
    rx: usize,
    blowup_threshold: f32,
}

impl Solver {
    /// Builds update coefficients. The time step is taken from `grid` as is;
    /// an unstable step shows up as [`Error::StabilityViolation`] while stepping.
    pub fn new(grid: &SimGrid, source: &SourceSpec) -> Result<Self> {
        source.check_placement(grid)?;
        let (nx, ny, dt, cell) = (grid.nx, grid.ny, grid.dt_s, grid.cell_m);
        let n = nx * ny;
        let mut ca = vec![0.0f32; n];
        let mut cb = vec![0.0f32; n];
        let mut cb_psi = vec![0.0f32; n];
        for k in 0..n {
            let eps = EPS0 * grid.eps_r[k];
            let loss = grid.sigma[k] * dt / (2.0 * eps);
            ca[k] = ((1.0 - loss) / (1.0 + loss)) as f32;
            let c = dt / eps / (1.0 + loss);
            cb[k] = (c / cell) as f32;
            cb_psi[k] = c as f32;
        }
        let pml_x = PmlAxis::new(nx, grid.pml_cells, cell, dt);
        Ok(Self {
            x_e_runs: runs(&pml_x.e_idx),
            x_h_runs: runs(&pml_x.h_idx),
            nx,
            ny,
            dt,
            n_steps: grid.n_steps,
            ca,
            cb,
            cb_psi,
            ch: (dt / (MU0 * cell)) as f32,
            ch_psi: (dt / MU0) as f32,
            pml_x,
            pml_y: PmlAxis::new(ny, grid.pml_cells, cell, dt),
            source: *source,
            tx: grid.idx(source.tx.0, source.tx.1),
            rx: grid.idx(source.rx.0, source.rx.1),
            blowup_threshold: (1e4 * source.amplitude.abs().max(1e-30)) as f32,
        })
    }

    /// Overrides the |Ez| level treated as numerical blow-up.
    pub fn with_blowup_threshold(mut self, threshold: f32) -> Self {
        self.blowup_threshold = threshold;
        self
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn receiver(&self, state: &FieldState) -> f32 {
        state.ez[self.rx]
    }

    /// One leapfrog update: H from Ez, then Ez from H, then the soft source.
    /// After step `k` the fields represent time `(k + 1) * dt`.
    pub fn step(&self, state: &mut FieldState, step_index: usize) -> Result<()> {
        if step_index >= self.n_steps {
            return Err(Error::Argument(format!(
                "step {step_index} beyond the configured {} steps",
                self.n_steps
            )));
        }
        self.update_h(state);
        self.update_e(state);
        let t = (step_index + 1) as f64 * self.dt;
        state.ez[self.tx] += self.source.waveform(t) as f32;

        if step_index % STABILITY_CHECK_INTERVAL == 0 || step_index + 1 == self.n_steps {
            let max = state.max_abs_ez();
            if !max.is_finite() || max > self.blowup_threshold {
                return Err(Error::StabilityViolation {
                    step: step_index,
                    max_field: f64::from(max),
                });
            }
        }
        Ok(())
    }

    fn update_h(&self, s: &mut FieldState) {
        let nx = self.nx;
        let ch = self.ch;
        // Hx: rows 0..ny-1, derivative along depth
        for j in 0..self.ny - 1 {
            let ez0 = &s.ez[j * nx..(j + 1) * nx];
            let ez1 = &s.ez[(j + 1) * nx..(j + 2) * nx];
            let hx = &mut s.hx[j * nx..(j + 1) * nx];
            for ((h, a), b) in hx.iter_mut().zip(ez0).zip(ez1) {
                *h -= ch * (b - a);
            }
        }
        // Hy: cols 0..nx-1, derivative across
        for j in 0..self.ny {
            let ez = &s.ez[j * nx..(j + 1) * nx];
            let hy = &mut s.hy[j * nx..(j + 1) * nx - 1];
            for ((h, a), b) in hy.iter_mut().zip(&ez[..nx - 1]).zip(&ez[1..]) {
                *h += ch * (b - a);
            }
        }

        let chp = self.ch_psi;
        let py = &self.pml_y;
        for ((&j, &b), &a) in py.h_idx.iter().zip(&py.h_b).zip(&py.h_a) {
            let r0 = j * nx;
            let ez0 = &s.ez[r0..r0 + nx];
            let ez1 = &s.ez[r0 + nx..r0 + 2 * nx];
            let psi = &mut s.psi_hxy[r0..r0 + nx];
            let hx = &mut s.hx[r0..r0 + nx];
            for (((p, h), e0), e1) in psi.iter_mut().zip(hx.iter_mut()).zip(ez0).zip(ez1) {
                *p = b * *p + a * (e1 - e0);
                *h -= chp * *p;
            }
        }
        let px = &self.pml_x;
        for j in 0..self.ny {
            let r = j * nx;
            for &(i0, pos, len) in &self.x_h_runs {
                let lo = r + i0;
                let b = &px.h_b[pos..pos + len];
                let a = &px.h_a[pos..pos + len];
                let e0 = &s.ez[lo..lo + len];
                let e1 = &s.ez[lo + 1..lo + 1 + len];
                let psi = &mut s.psi_hyx[lo..lo + len];
                let hy = &mut s.hy[lo..lo + len];
                for k in 0..len {
                    psi[k] = b[k] * psi[k] + a[k] * (e1[k] - e0[k]);
                    hy[k] += chp * psi[k];
                }
            }
        }
    }

    fn update_e(&self, s: &mut FieldState) {
        let nx = self.nx;
        for j in 1..self.ny - 1 {
            let r = j * nx;
            let lo = r + 1;
            let hi = r + nx - 1;
            let n = hi - lo;
            let ez = &mut s.ez[lo..hi];
            let ca = &self.ca[lo..hi];
            let cb = &self.cb[lo..hi];
            let hy_w = &s.hy[lo - 1..hi - 1];
            let hy = &s.hy[lo..hi];
            let hx = &s.hx[lo..hi];
            let hx_n = &s.hx[lo - nx..hi - nx];
            for k in 0..n {
                let curl = (hy[k] - hy_w[k]) - (hx[k] - hx_n[k]);
                ez[k] = ca[k] * ez[k] + cb[k] * curl;
            }
        }

        let px = &self.pml_x;
        for j in 1..self.ny - 1 {
            let r = j * nx;
            for &(i0, pos, len) in &self.x_e_runs {
                let lo = r + i0;
                let b = &px.e_b[pos..pos + len];
                let a = &px.e_a[pos..pos + len];
                let h0 = &s.hy[lo - 1..lo - 1 + len];
                let h1 = &s.hy[lo..lo + len];
                let psi = &mut s.psi_ezx[lo..lo + len];
                let ez = &mut s.ez[lo..lo + len];
                let c = &self.cb_psi[lo..lo + len];
                for k in 0..len {
                    psi[k] = b[k] * psi[k] + a[k] * (h1[k] - h0[k]);
                    ez[k] += c[k] * psi[k];
                }
            }
        }
        let py = &self.pml_y;
        for ((&j, &b), &a) in py.e_idx.iter().zip(&py.e_b).zip(&py.e_a) {
            let lo = j * nx + 1;
            let hi = lo + nx - 2;
            let hx = &s.hx[lo..hi];
            let hx_n = &s.hx[lo - nx..hi - nx];
            let psi = &mut s.psi_ezy[lo..hi];
            let ez = &mut s.ez[lo..hi];
            let cbp = &self.cb_psi[lo..hi];
            for ((((p, e), c), x), xn) in psi.iter_mut().zip(ez.iter_mut()).zip(cbp).zip(hx).zip(hx_n) {
                *p = b * *p + a * (x - xn);
                *e -= c * *p;
            }
        }
    }
}

/// Single update of `state` on `grid`. Convenience wrapper around [`Solver`];
/// loops should build the solver once instead.
pub fn step_fields(
    grid: &SimGrid,
    state: &mut FieldState,
    source: &SourceSpec,
    step_index: usize,
) -> Result<()> {
    let n = grid.nx * grid.ny;
    if state.ez.len() != n || state.hx.len() != n || state.hy.len() != n {
        return Err(Error::Argument("field state does not match the grid".into()));
    }
    Solver::new(grid, source)?.step(state, step_index)
}

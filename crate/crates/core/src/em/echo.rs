//! Isolating individual interface echoes by differencing simulations.
//!
//! The response of a stack whose layer `k` extends to the bottom of the grid
//! is identical, sample for sample, to the full stack's response until the
//! echo from the bottom of layer `k` arrives. Differencing successive
//! truncated stacks therefore yields one interface echo at a time, free of
//! the direct wave.

use super::acquisition::{run_ascan, Acquisition};
use super::trace::AScan;
use crate::error::Result;
use crate::scene::{rasterize, Layer, WallConfig};

/// Echo traces for each interface, top to bottom. Entry 0 is the wall
/// surface; the last entry is the back face when the stack does not fill
/// the grid depth.
#[derive(Debug, Clone)]
pub struct InterfaceEchoes {
    pub echoes: Vec<Vec<f64>>,
    pub dt_s: f64,
    /// Full response of the unmodified stack.
    pub response: AScan,
}

fn respond(config: Option<&WallConfig>, acq: &Acquisition) -> Result<AScan> {
    let grid = match config {
        Some(c) => rasterize(c, &acq.grid)?,
        None => acq.grid.empty_grid()?,
    };
    let src = acq.source_for(&grid)?;
    run_ascan(&grid, &src)
}

/// Stack of the first `m` layers with the last one extended to full depth.
fn extended(config: &WallConfig, m: usize, depth: f64) -> WallConfig {
    let mut layers: Vec<Layer> = config.layers[..m].to_vec();
    let above: f64 = layers[..m - 1].iter().map(|l| l.thickness_m).sum();
    layers[m - 1].thickness_m = depth - above;
    WallConfig::from_layers(layers)
}

/// Grains are ignored; only the layer stack is simulated.
pub fn interface_echoes(config: &WallConfig, acq: &Acquisition) -> Result<InterfaceEchoes> {
    let layers_only = WallConfig::from_layers(config.layers.clone());
    layers_only.validate_layers()?;
    let depth = acq.grid.depth_m;
    let n = layers_only.layers.len();

    let mut responses = vec![respond(None, acq)?];
    for m in 1..=n {
        responses.push(respond(Some(&extended(&layers_only, m, depth)), acq)?);
    }
    let fills_grid = (layers_only.total_thickness() - depth).abs() < 0.5 * acq.grid.cell_m;
    if !fills_grid {
        responses.push(respond(Some(&layers_only), acq)?);
    }

    let echoes = responses
        .windows(2)
        .map(|w| {
            w[1].samples
                .iter()
                .zip(&w[0].samples)
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect();
    let response = responses.pop().expect("at least two responses");
    Ok(InterfaceEchoes {
        echoes,
        dt_s: response.dt_s,
        response,
    })
}

/// Index of max |x| refined by a parabola through its neighbours.
pub fn peak_position(x: &[f64]) -> f64 {
    let (i, _) = x
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
    refine(i, |k| x[k].abs(), x.len())
}

fn refine(i: usize, f: impl Fn(usize) -> f64, n: usize) -> f64 {
    if i == 0 || i + 1 >= n {
        return i as f64;
    }
    let (a, b, c) = (f(i - 1), f(i), f(i + 1));
    let denom = a - 2.0 * b + c;
    if denom.abs() < f64::MIN_POSITIVE {
        i as f64
    } else {
        i as f64 + 0.5 * (a - c) / denom
    }
}

/// Delay (in samples, ≥ 0) of `later` relative to `earlier`, from the peak of
/// |cross-correlation|. Sign flips between the two pulses are tolerated.
pub fn echo_lag(earlier: &[f64], later: &[f64]) -> f64 {
    let n = earlier.len().min(later.len());
    let corr: Vec<f64> = (0..n)
        .map(|tau| {
            earlier[..n - tau]
                .iter()
                .zip(&later[tau..n])
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect();
    let (i, _) = corr
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
    refine(i, |k| corr[k].abs(), n)
}

/// Analytic two-way travel time through a layer.
pub fn two_way_time(thickness_m: f64, eps_r: f64) -> f64 {
    2.0 * thickness_m * eps_r.sqrt() / crate::defaults::C0
}

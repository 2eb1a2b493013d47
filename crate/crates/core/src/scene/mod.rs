//! Wall configurations: layer stacks with embedded noise grains.
//!
//! Depth is measured from the wall surface facing the scanner; `x` runs
//! across the 24 cm wide strip the grains live in. Layers extend laterally
//! without bound.

mod raster;
mod sampler;
mod text;

pub use raster::{rasterize, rasterize_window};
pub use sampler::{sample_layer_count, sample_wall, sample_wall_from_seed, LAYER_COUNT_WEIGHTS};
pub use text::{format_sig6, parse_scene, write_scene};

use crate::defaults::{GRID_DEPTH_M, GRID_WIDTH_M, MAX_LAYERS, TARGET_LEN};
use crate::error::{Error, Result};

/// Minimum thickness of a wall layer, m.
pub const MIN_LAYER_THICKNESS_M: f64 = 0.02;
/// Largest permittivity accepted on a layer label.
pub const MAX_LAYER_EPS: f64 = 8.0;
pub const GRAIN_RADIUS_RANGE_M: (f64, f64) = (0.002, 0.008);
pub const GRAIN_EPS_RANGE: (f64, f64) = (1.0, 7.0);

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub thickness_m: f64,
    pub eps_r: f64,
}

impl Layer {
    pub fn new(thickness_m: f64, eps_r: f64) -> Self {
        Self { thickness_m, eps_r }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseGrain {
    /// Lateral position of the center, m.
    pub x_m: f64,
    /// Depth of the center below the wall surface, m.
    pub y_m: f64,
    pub radius_m: f64,
    pub eps_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WallConfig {
    /// Index 0 is the layer nearest the scanner.
    pub layers: Vec<Layer>,
    pub grains: Vec<NoiseGrain>,
    pub seed: u64,
}

impl WallConfig {
    pub fn from_layers(layers: Vec<Layer>) -> Self {
        Self {
            layers,
            grains: Vec::new(),
            seed: 0,
        }
    }

    pub fn total_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness_m).sum()
    }

    /// Checks the layer-stack invariants (count, per-layer ranges, total depth).
    pub fn validate_layers(&self) -> Result<()> {
        let n = self.layers.len();
        if n == 0 || n > MAX_LAYERS {
            return Err(Error::Geometry(format!(
                "wall has {n} layers, expected 1..={MAX_LAYERS}"
            )));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.thickness_m >= MIN_LAYER_THICKNESS_M - TOL) || !l.thickness_m.is_finite() {
                return Err(Error::Geometry(format!(
                    "layer {i} thickness {} m is below {MIN_LAYER_THICKNESS_M} m",
                    l.thickness_m
                )));
            }
            if !(1.0..=MAX_LAYER_EPS).contains(&l.eps_r) {
                return Err(Error::Geometry(format!(
                    "layer {i} permittivity {} outside [1, {MAX_LAYER_EPS}]",
                    l.eps_r
                )));
            }
        }
        let total = self.total_thickness();
        if total > GRID_DEPTH_M + TOL {
            return Err(Error::Geometry(format!(
                "total thickness {total} m exceeds {GRID_DEPTH_M} m"
            )));
        }
        Ok(())
    }

    pub fn validate_grains(&self) -> Result<()> {
        let depth = self.total_thickness();
        for (i, g) in self.grains.iter().enumerate() {
            let (rmin, rmax) = GRAIN_RADIUS_RANGE_M;
            if !(rmin - TOL..=rmax + TOL).contains(&g.radius_m) {
                return Err(Error::Geometry(format!(
                    "grain {i} radius {} m outside [{rmin}, {rmax}]",
                    g.radius_m
                )));
            }
            let (emin, emax) = GRAIN_EPS_RANGE;
            if !(emin..=emax).contains(&g.eps_r) {
                return Err(Error::Geometry(format!(
                    "grain {i} permittivity {} outside [{emin}, {emax}]",
                    g.eps_r
                )));
            }
            let inside_x = g.x_m - g.radius_m >= -TOL && g.x_m + g.radius_m <= GRID_WIDTH_M + TOL;
            let inside_y = g.y_m - g.radius_m >= -TOL && g.y_m + g.radius_m <= depth + TOL;
            if !(inside_x && inside_y) {
                return Err(Error::Geometry(format!(
                    "grain {i} at ({}, {}) r={} is not inside the {GRID_WIDTH_M} x {depth} m wall",
                    g.x_m, g.y_m, g.radius_m
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_layers()?;
        self.validate_grains()
    }
}

/// Regression target: thicknesses (m) in slots 0..6, permittivities in 6..12,
/// zero-padded past the last layer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetVector(pub [f64; TARGET_LEN]);

impl TargetVector {
    pub fn thickness(&self, layer: usize) -> f64 {
        self.0[layer]
    }

    pub fn eps(&self, layer: usize) -> f64 {
        self.0[MAX_LAYERS + layer]
    }

    pub fn thicknesses(&self) -> &[f64] {
        &self.0[..MAX_LAYERS]
    }

    pub fn permittivities(&self) -> &[f64] {
        &self.0[MAX_LAYERS..]
    }

    /// Number of leading slots holding a layer (thickness > 0).
    pub fn layer_count(&self) -> usize {
        self.thicknesses().iter().take_while(|&&d| d > 0.0).count()
    }

    pub fn from_slices(thickness: &[f64], eps: &[f64]) -> Result<Self> {
        if thickness.len() != MAX_LAYERS || eps.len() != MAX_LAYERS {
            return Err(Error::Argument(format!(
                "target needs {MAX_LAYERS} thicknesses and {MAX_LAYERS} permittivities"
            )));
        }
        let mut v = [0.0; TARGET_LEN];
        v[..MAX_LAYERS].copy_from_slice(thickness);
        v[MAX_LAYERS..].copy_from_slice(eps);
        Ok(Self(v))
    }

    /// Layer-slot consistency: every slot either carries both values or neither.
    pub fn is_consistent(&self) -> bool {
        self.0.iter().all(|v| v.is_finite() && *v >= 0.0)
            && (0..MAX_LAYERS).all(|i| (self.thickness(i) > 0.0) == (self.eps(i) > 0.0))
    }
}

pub fn to_target(config: &WallConfig) -> TargetVector {
    let mut v = [0.0; TARGET_LEN];
    for (i, layer) in config.layers.iter().take(MAX_LAYERS).enumerate() {
        v[i] = layer.thickness_m;
        v[MAX_LAYERS + i] = layer.eps_r;
    }
    TargetVector(v)
}

/// Rebuilds the layer stack from a target; slots stop at the first zero thickness.
pub fn from_target(target: &TargetVector) -> WallConfig {
    let layers = (0..target.layer_count())
        .map(|i| Layer::new(target.thickness(i), target.eps(i)))
        .collect();
    WallConfig::from_layers(layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene2() -> WallConfig {
        WallConfig::from_layers(vec![
            Layer::new(0.063, 5.423),
            Layer::new(0.065, 5.226),
            Layer::new(0.042, 2.991),
        ])
    }

    #[test]
    fn single_layer_target_layout() {
        let t = to_target(&WallConfig::from_layers(vec![Layer::new(0.1, 5.0)]));
        assert_eq!(t.0, [0.1, 0., 0., 0., 0., 0., 5.0, 0., 0., 0., 0., 0.]);
    }

    #[test]
    fn table_scene_two_target() {
        let t = to_target(&scene2());
        assert_eq!(
            t.0,
            [0.063, 0.065, 0.042, 0., 0., 0., 5.423, 5.226, 2.991, 0., 0., 0.]
        );
        assert!(t.is_consistent());
        assert_eq!(t.layer_count(), 3);
    }

    #[test]
    fn layer_order_is_encoded() {
        let mut swapped = scene2();
        swapped.layers.swap(0, 2);
        assert_ne!(to_target(&scene2()), to_target(&swapped));
    }

    #[test]
    fn validation_rejects_bad_stacks() {
        assert!(WallConfig::from_layers(vec![]).validate().is_err());
        assert!(WallConfig::from_layers(vec![Layer::new(0.01, 3.0)]).validate().is_err());
        assert!(WallConfig::from_layers(vec![Layer::new(0.3, 3.0), Layer::new(0.2, 3.0)])
            .validate()
            .is_err());
        assert!(WallConfig::from_layers(vec![Layer::new(0.1, 9.0)]).validate().is_err());
        let mut c = WallConfig::from_layers(vec![Layer::new(0.1, 3.0)]);
        c.grains.push(NoiseGrain { x_m: 0.1, y_m: 0.098, radius_m: 0.004, eps_r: 2.0 });
        assert!(matches!(c.validate(), Err(Error::Geometry(_))));
        c.grains[0].y_m = 0.05;
        c.validate().unwrap();
    }
}

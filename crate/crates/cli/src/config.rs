//! Run configuration: a TOML file with one table per module, then command-line
//! overrides on top.
//!
//! ```toml
//! seed = 7
//!
//! [paths]
//! dataset = "data/walls"
//!
//! [simulation]
//! time_window_s = 12e-9
//!
//! [model]
//! conv_channels = [8, 16, 32, 16, 8, 4]
//! kernel = [20, 5]
//! epochs = 100
//! ```
//!
//! Relative paths in `[paths]` are resolved against the directory holding the
//! file. Unknown keys are errors.

use std::path::{Path, PathBuf};

use gprwi::defaults::TRAIN_RATIO;
use gprwi::em::Acquisition;
use gprwi::model::ModelConfig;
use gprwi::signal::PrepOptions;
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub preprocess: PreprocessSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub cell_m: Option<f64>,
    pub width_m: Option<f64>,
    pub depth_m: Option<f64>,
    pub pml_cells: Option<usize>,
    pub antenna_height_m: Option<f64>,
    pub headroom_m: Option<f64>,
    pub courant_fraction: Option<f64>,
    pub time_window_s: Option<f64>,
    pub layer_sigma: Option<f64>,
    pub n_traces: Option<usize>,
    pub trace_step_m: Option<f64>,
    pub separation_m: Option<f64>,
    pub center_freq_hz: Option<f64>,
    pub source_amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub n_samples: Option<usize>,
    pub workers: Option<usize>,
    pub split_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub conv_channels: Option<Vec<usize>>,
    pub kernel: Option<[usize; 2]>,
    pub linear_sizes: Option<Vec<usize>>,
    pub flatten_dim: Option<usize>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    pub threshold_frac: Option<f64>,
    pub cutoff_hz: Option<f64>,
    pub segment_width: Option<usize>,
    pub segments_per_scan: Option<usize>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_config(text: &str) -> Result<ConfigFile, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
}

/// Reads a config file and resolves its relative paths against its directory.
pub fn load_config(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let p = &mut cfg.paths;
    for slot in [&mut p.dataset, &mut p.out, &mut p.model, &mut p.catalog] {
        if let Some(v) = slot.as_mut() {
            if v.is_relative() {
                *v = base.join(&*v);
            }
        }
    }
    Ok(cfg)
}

/// Seed precedence: flag, config file, `GPRWI_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, file: &ConfigFile) -> Result<u64, ConfigError> {
    if let Some(s) = flag.or(file.seed) {
        return Ok(s);
    }
    match std::env::var("GPRWI_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("GPRWI_SEED is not an unsigned integer: {v:?}"))),
        Err(_) => Ok(0),
    }
}

macro_rules! set {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src.clone() {
            $dst = v;
        }
    };
}

impl ConfigFile {
    pub fn acquisition(&self) -> Acquisition {
        let s = &self.simulation;
        let mut a = Acquisition::default();
        set!(a.grid.cell_m, s.cell_m);
        set!(a.grid.width_m, s.width_m);
        set!(a.grid.depth_m, s.depth_m);
        set!(a.grid.pml_cells, s.pml_cells);
        set!(a.grid.antenna_height_m, s.antenna_height_m);
        set!(a.grid.headroom_m, s.headroom_m);
        set!(a.grid.courant_fraction, s.courant_fraction);
        set!(a.grid.time_window_s, s.time_window_s);
        set!(a.grid.layer_sigma, s.layer_sigma);
        set!(a.n_traces, s.n_traces);
        set!(a.trace_step_m, s.trace_step_m);
        set!(a.separation_m, s.separation_m);
        set!(a.center_freq_hz, s.center_freq_hz);
        set!(a.source_amplitude, s.source_amplitude);
        a
    }

    pub fn model(&self, seed: u64) -> ModelConfig {
        let m = &self.model;
        let mut c = ModelConfig { seed, ..ModelConfig::default() };
        set!(c.conv_channels, m.conv_channels);
        if let Some([h, w]) = m.kernel {
            c.kernel = (h, w);
        }
        set!(c.linear_sizes, m.linear_sizes);
        set!(c.flatten_dim, m.flatten_dim);
        set!(c.lr, m.lr);
        set!(c.epochs, m.epochs);
        set!(c.batch_size, m.batch_size);
        set!(c.patience, m.patience);
        c
    }

    pub fn prep(&self) -> PrepOptions {
        let p = &self.preprocess;
        let mut o = PrepOptions::default();
        set!(o.threshold_frac, p.threshold_frac);
        set!(o.cutoff_hz, p.cutoff_hz);
        set!(o.segment_width, p.segment_width);
        set!(o.segments_per_scan, p.segments_per_scan);
        o
    }

    pub fn split_ratio(&self) -> f64 {
        self.dataset.split_ratio.unwrap_or(TRAIN_RATIO)
    }
}

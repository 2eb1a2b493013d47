//! Default physics, acquisition and model constants.
//!
//! Every number that shapes the simulated data or the network lives here so
//! that a run configuration can be audited in one place.

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability, H/m.
pub const MU0: f64 = 1.256_637_062_12e-6;

/// Lateral extent of the simulation window, m.
pub const GRID_WIDTH_M: f64 = 0.24;
/// Maximum wall depth represented in the grid, m.
pub const GRID_DEPTH_M: f64 = 0.46;
/// Spatial step of the Yee grid, m.
pub const CELL_M: f64 = 0.002;
/// Fraction of the 2D Courant limit used for the time step.
pub const COURANT_FRACTION: f64 = 0.95;
/// Absorbing boundary thickness in cells.
pub const PML_CELLS: usize = 10;
/// Polynomial grading order of the PML conductivity profile.
pub const PML_ORDER: f64 = 3.0;

/// Ricker source center frequency, Hz.
pub const CENTER_FREQ_HZ: f64 = 1.0e9;
/// Recording window per A-scan, s.
pub const TIME_WINDOW_S: f64 = 12.0e-9;
/// Transmitter to receiver separation, m.
pub const ANTENNA_SEPARATION_M: f64 = 0.040;
/// Height of the antenna pair above the wall surface, m.
pub const ANTENNA_HEIGHT_M: f64 = 0.050;
/// Air between the antennas and the top absorbing boundary, m.
pub const ANTENNA_HEADROOM_M: f64 = 0.010;
/// Conductivity assigned to every wall layer and grain, S/m.
pub const LAYER_SIGMA: f64 = 0.001;

/// Samples per trace in a canonical B-scan.
pub const BSCAN_SAMPLES: usize = 255;
/// Traces per canonical B-scan.
pub const BSCAN_TRACES: usize = 40;
/// Lateral antenna step between traces, m.
pub const TRACE_STEP_M: f64 = 0.004;

/// Maximum number of wall layers.
pub const MAX_LAYERS: usize = 6;
/// Length of the regression target (thickness and permittivity per layer).
pub const TARGET_LEN: usize = 2 * MAX_LAYERS;

/// Convolution output channels of the six feature blocks.
pub const CONV_CHANNELS: [usize; 6] = [8, 16, 32, 16, 8, 4];
/// Convolution kernel (height, width).
pub const KERNEL: (usize, usize) = (20, 5);
/// Output widths of the fully connected stack.
pub const LINEAR_SIZES: [usize; 5] = [5000, 2000, 800, 300, 12];
/// Flattened feature size entering the first fully connected layer.
pub const FLATTEN_DIM: usize = 4 * 141 * 16;
/// Adam step length.
pub const LEARNING_RATE: f64 = 0.001;
/// Mini-batch size.
pub const BATCH_SIZE: usize = 16;
/// Epochs for a desk-scale training run.
pub const EPOCHS: usize = 100;
/// Early stopping patience (epochs without a test-loss improvement).
pub const PATIENCE: usize = 20;
/// Predicted thickness below which a slot is treated as "no layer", m.
pub const LAYER_PRESENCE_THRESHOLD_M: f64 = 0.015;

/// Train fraction of the train/test split.
pub const TRAIN_RATIO: f64 = 0.8;
/// Desk-scale dataset size.
pub const DATASET_SIZE: usize = 500;

/// High-pass cutoff used when preprocessing measured radargrams, Hz.
pub const HIGHPASS_CUTOFF_HZ: f64 = 500.0e6;
/// First-break threshold as a fraction of the per-trace maximum.
pub const FIRST_BREAK_THRESHOLD: f64 = 0.2;
/// Random cuts taken from each measured radargram.
pub const SEGMENTS_PER_SCAN: usize = 8;

//! 2D FDTD simulation of the scanner over a wall.

mod acquisition;
mod bscan_io;
pub mod echo;
mod fdtd;
mod grid;
mod source;
mod trace;

pub use acquisition::{run_ascan, run_bscan, Acquisition};
pub use bscan_io::{decode_bscan, encode_bscan, read_bscan, write_bscan, BSCAN_MAGIC, BSCAN_VERSION};
pub use fdtd::{step_fields, FieldState, Solver};
pub use grid::{GridSpec, SimGrid, MIN_PML_CELLS};
pub use source::{ricker_wavelet, SourceSpec, Waveform};
pub use trace::{resample, resample_trace, AScan, BScan, ScanMeta};

//! Synthetic ground-penetrating-radar scans of layered walls and their
//! inversion into per-layer thickness and permittivity.

pub mod dataset;
pub mod defaults;
pub mod em;
mod error;
pub mod eval;
pub mod model;
pub mod scene;
pub mod signal;

pub use error::{Error, Result};

//! Minimizing-movement (JKO) scheme for two-species cross-diffusion systems
//! on a bounded interval, with a finite-volume reference solver and
//! numerical audits of the structural assumptions.

pub mod config;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod exact;
pub mod fv;
pub mod grid;
pub mod io;
pub mod isotonic;
pub mod jko;
pub mod linalg;
pub mod model;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{Density, Grid1D, SpeciesPair};
pub use jko::{JkoConfig, StepRecord, Trajectory};
pub use model::ModelSpec;

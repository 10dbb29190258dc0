//! Simulation and analysis of coherence-based superresolution in cascaded,
//! asymmetrically coupled Mach-Zehnder interferometer chains.
//!
//! * [`optics`]: 2×2 complex transfer-matrix algebra and elementary elements.
//! * [`cascade`]: the order-`N` chain, stage by stage and in closed form.
//! * [`analytic`]: fringe laws, coincidence product, phase basis, parity port,
//!   and the spring-mass comparison.
//! * [`montecarlo`]: photon-counting and CW emulation of a PZT phase scan.
//! * [`analysis`]: visibility, period and extrema estimation from traces.
//! * [`cli`]: the batch commands behind the `cbw` binary, and their file formats.

pub mod analysis;
pub mod analytic;
pub mod cascade;
pub mod cli;
pub mod error;
pub mod montecarlo;
pub mod optics;

pub use error::{Error, Result};

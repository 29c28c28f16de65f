//! Numerical laboratory for Hölder-Zygmund calculus, radial estimates,
//! cohomological equations and length-spectrum experiments on concrete
//! Anosov systems: the cat map, its perturbations and suspensions, and the
//! Bolza surface.

pub mod cli;
pub mod cohomology;
pub mod error;
pub mod fft;
pub mod fit;
pub mod lp_calculus;
pub mod mat;
pub mod mls_stretch;
pub mod orbits;
pub mod rng;
pub mod source_lab;
pub mod systems;
pub mod thresholds;

pub use error::{LabError, Result};

//! Stretches between suspension flows, marked-length comparisons, the
//! coboundary-free stability measure and the conformal first-order check on
//! the Bolza surface.
//!
//! Roof changes over a common base are the exact model: the stretch
//! `r' / r` reproduces target periods and coboundary projection is
//! computable in Fourier space. The surface side tests only the first-order
//! length formula.

pub mod conformal;
pub mod stability;
pub mod stretch;

pub use conformal::{conformal_linearization_experiment, ConformalPerturbation, ConformalRow, WordSlope, AXIS_NODES};
pub use stability::{
    coboundary_split, mixed_perturbation_family, stability_experiment, stretch_seminorm_lower, CoboundarySplit, StabilityReport,
    StabilityRow, COBOUNDARY_TOL,
};
pub use stretch::{mls_compare, mls_compare_on, reparam_invariance_check, roof_id, stretch_from_roofs, MlsComparison, MlsRow, ReparamReport, StretchField};

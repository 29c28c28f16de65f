//! Concrete hyperbolic systems: toral automorphisms, their trigonometric
//! perturbations, suspension flows and the Bolza surface group.

pub mod bolza;
pub mod conjugacy;
pub mod flow;
pub mod lyapunov;
pub mod map;
pub mod splitting;

pub use bolza::{bolza_systole, fuchsian_bolza, FuchsianGroup, BOLZA_RELATION};
pub use conjugacy::{conjugacy_solve, conjugacy_solve_on, ConjugacyField};
pub use flow::{suspension_flow, AnosovFlow};
pub use lyapunov::{lyapunov_data, LyapunovReport};
pub use map::{cat_map_system, perturbed_cat_map, AnosovMap, ConeCertificate, MapKind, TrigKind, TrigPerturbation, TrigTerm};
pub use splitting::{projector_lie_residual, splitting_at, unstable_projector, SplittingFrame, SystemRef};

/// The standard cat map `[[2, 1], [1, 1]]`.
pub const CAT: crate::mat::Mat2i = [[2, 1], [1, 1]];

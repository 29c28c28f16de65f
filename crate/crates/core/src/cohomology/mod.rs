//! Cohomological equations for the cat map and its suspension: Livšic
//! solves in Fourier space, periodic-orbit obstructions, the U(1) twisted
//! case, and band-decay regularity profiles.

pub mod livsic;
pub mod profile;
pub mod suspension;
pub mod twisted;

pub use livsic::{
    livsic_solve, livsic_solve_checked, obstruction_check, predicted_support, quotient_seminorm_lower, CocycleWeight, LivsicSolution,
};
pub use profile::{regularity_profile, ProfileInput, ProfileReport};
pub use suspension::{suspension_livsic_solve, SuspensionSolution};
pub use twisted::{twisted_transport_solve, TwistedSolution};

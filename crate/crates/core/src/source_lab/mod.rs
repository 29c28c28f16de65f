//! Radial source estimate and propagation of singularities on concrete
//! linear models, through cone multipliers and exact lattice propagators.
//!
//! Everything runs on the zero section: time-`t` propagators of a
//! constant-roof suspension with `t` a multiple of the roof act slice by
//! slice, so the map case and the flow case share one code path with
//! return time `tau`.

pub mod pair;
pub mod propagator;
pub mod section;
pub mod sparse;
pub mod sweep;

pub use pair::{check_propagation_cover, make_radial_pair, pushforward_cover, trajectory_cover, RadialPair};
pub use propagator::{
    generator_apply, propagator_apply, propagator_apply_torus, propagator_sup_norm, telescoping_residual, Propagated,
    PropagatorNorm,
};
pub use section::{line_angle, Section};
pub use sparse::{block_decay_probe, critical_field, max_critical_depth, BlockDecayPoint, BlockDecayReport, SparseField, SparseMode};
pub use sweep::{
    propagation_sweep, quasimode_returns, quasimode_seed_modes, smooth_field, source_estimate_sweep, FamilyKind, FamilySpec,
    PropagationReport, PropagationRow, Regime, ScaleStats, SweepReport, SweepRow,
};

//! Regularity thresholds: the forward/backward thresholds as maxima over
//! periodic orbits, the doubling estimator for subadditive families, the
//! integral (L^2-type) threshold, and foliation bounds from Lyapunov data.

pub mod foliation;
pub mod forward;
mod lattice;
pub mod sobolev;
pub mod subadditive;

pub use foliation::{cone_expansion_equivalence_check, covector_ratio, foliation_threshold, ConeRatioReport};
pub use forward::{forward_threshold, max_weight_rate, orbit_rates, MetricChoice, OrbitRate, RhoGrid, ThresholdMethod, ThresholdReport};
pub use sobolev::{sobolev_threshold_integral, SobolevThresholdReport};
pub use subadditive::{subadditive_limit, ConvergenceReport, DoublingValue, SubadditiveFamily, SubadditiveSpec};

//! Littlewood-Paley calculus on `T^2` and on the mapping torus.
//!
//! Frequencies are `xi = 2 pi k` for lattice index `k`, so band `j` holds
//! `|k|` near `2^j / (2 pi)`.

pub mod bank;
pub mod checks;
pub mod cutoff;
pub mod grid;
pub mod symbol;
pub mod torus;

pub use bank::{build_lp_filters, hz_from_bands, hz_norm, BankDescription, LPFilterBank};
pub use checks::{
    control_by_cs_check, disjoint_support_product_check, disjoint_support_sweep, linf_band_bound,
    norm_equivalence_check, scale_comparison_check, scale_comparison_family, EquivReport,
};
pub use cutoff::CutoffSpec;
pub use grid::{Grid2Field, GridSpec};
pub use symbol::{band_filter_apply, ConeSymbol, RadialProfile};
pub use torus::{hz_norm_torus3, MappingTorusField, TORUS3_EQUIV_FACTOR};

//! Closed orbits of linear toral maps and their suspensions, averages along
//! them, marked length spectra, and closed geodesics on the Bolza surface.

pub mod enumerate;
pub mod geodesic;
pub mod words;
pub mod xray;

pub use enumerate::{enumerate_periodic_orbits, OrbitSet, PeriodicOrbit, DEFAULT_ORBIT_BUDGET};
pub use geodesic::{axis_integral, fold_to_octagon, perturbed_geodesic_length, BumpTerm, ConformalFactor, ShorteningDisc, ShorteningReport};
pub use words::{canonical_word, cyclic_reduce, enumerate_word_classes, geodesic_length_word, inverse_word, word_class, WordClass};
pub use xray::{birkhoff_sum, marked_spectrum, marked_spectrum_on, xray, xray_map, Observable, SpectrumEntry, SpectrumTable};

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::lp_calculus::{Grid2Field, MappingTorusField};
use crate::systems::{AnosovFlow, AnosovMap};

use super::enumerate::{enumerate_periodic_orbits, OrbitSet, PeriodicOrbit, DEFAULT_ORBIT_BUDGET};

/// Function to be averaged along closed orbits.
#[derive(Clone, Copy, Debug)]
pub enum Observable<'a> {
    /// A function on the base torus, averaged along a map orbit.
    Map(&'a Grid2Field),
    /// A function on the mapping torus, averaged along the suspended orbit
    /// of `flow` in real time.
    Flow(&'a MappingTorusField, &'a AnosovFlow),
}

/// Normalized orbit average `(1/l) ∫_0^l f(phi_t x) dt`.
///
/// For maps this is the Birkhoff average over the orbit points; for a
/// suspension each base point contributes `r(x_i) ∫_0^1 f(x_i, s) ds`.
pub fn xray(f: Observable<'_>, orbit: &PeriodicOrbit) -> Result<f64> {
    match f {
        Observable::Map(g) => Ok(orbit.points.iter().map(|&x| g.eval_re(x)).sum::<f64>() / orbit.period as f64),
        Observable::Flow(u, flow) => {
            if u.matrix() != flow.base().matrix() || orbit.matrix != flow.base().matrix() {
                return Err(LabError::InvalidInput(format!(
                    "orbit {} does not belong to the suspension of {:?}",
                    orbit.id(),
                    flow.base().matrix()
                )));
            }
            let mut num = 0.0;
            let mut len = 0.0;
            for &x in &orbit.points {
                let r = flow.roof_at(x);
                num += r * u.s_integral_at(x);
                len += r;
            }
            Ok(num / len)
        }
    }
}

/// `xray` against a map, checking that the orbit belongs to it.
pub fn xray_map(map: &AnosovMap, f: &Grid2Field, orbit: &PeriodicOrbit) -> Result<f64> {
    if orbit.matrix != map.matrix() {
        return Err(LabError::InvalidInput(format!("orbit {} is not an orbit of {:?}", orbit.id(), map.matrix())));
    }
    xray(Observable::Map(f), orbit)
}

/// Unnormalized Birkhoff sum `sum_i f(x_i)` over a map orbit.
pub fn birkhoff_sum(f: &Grid2Field, orbit: &PeriodicOrbit) -> f64 {
    orbit.points.iter().map(|&x| f.eval_re(x)).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEntry {
    pub id: String,
    pub steps: usize,
    pub length: f64,
    pub other: Option<f64>,
}

/// Orbit or word identifiers mapped to lengths, optionally side by side
/// with a second system.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumTable {
    pub label: String,
    pub other_label: Option<String>,
    pub entries: Vec<SpectrumEntry>,
}

impl SpectrumTable {
    pub fn new(label: impl Into<String>, entries: Vec<SpectrumEntry>) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| !(e.length > 0.0) || e.other.is_some_and(|o| !(o > 0.0))) {
            return Err(LabError::Validation(format!("non-positive length for {}", e.id)));
        }
        Ok(SpectrumTable { label: label.into(), other_label: None, entries })
    }

    /// Pair with a second table on the same keys.
    pub fn side_by_side(&self, other: &SpectrumTable) -> Result<SpectrumTable> {
        if self.entries.len() != other.entries.len() {
            return Err(LabError::InvalidInput("spectrum tables have different key sets".into()));
        }
        let mut entries = Vec::with_capacity(self.entries.len());
        for (a, b) in self.entries.iter().zip(&other.entries) {
            if a.id != b.id {
                return Err(LabError::InvalidInput(format!("key mismatch: {} vs {}", a.id, b.id)));
            }
            entries.push(SpectrumEntry { other: Some(b.length), ..a.clone() });
        }
        Ok(SpectrumTable { label: self.label.clone(), other_label: Some(other.label.clone()), entries })
    }

    /// Largest `|L - L'|` over the paired entries.
    pub fn max_difference(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.other.map(|o| (e.length - o).abs())).try_fold(0.0f64, |m, d| d.map(|d| m.max(d)))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        match &self.other_label {
            Some(o) => writeln!(s, "id,steps,{},{}", self.label, o),
            None => writeln!(s, "id,steps,{}", self.label),
        }
        .ok();
        for e in &self.entries {
            match e.other {
                Some(o) => writeln!(s, "{},{},{:.17e},{:.17e}", e.id, e.steps, e.length, o),
                None => writeln!(s, "{},{},{:.17e}", e.id, e.steps, e.length),
            }
            .ok();
        }
        s
    }
}

/// Closed-orbit periods of a suspension, keyed by base orbit.
pub fn marked_spectrum(flow: &AnosovFlow, max_period: usize) -> Result<SpectrumTable> {
    let set = enumerate_periodic_orbits(flow.base(), max_period, DEFAULT_ORBIT_BUDGET)?;
    marked_spectrum_on(flow, &set)
}

pub fn marked_spectrum_on(flow: &AnosovFlow, set: &OrbitSet) -> Result<SpectrumTable> {
    if set.matrix != flow.base().matrix() {
        return Err(LabError::InvalidInput("orbit set belongs to a different base map".into()));
    }
    let entries = set
        .orbits
        .iter()
        .map(|o| SpectrumEntry { id: o.id(), steps: o.period, length: flow.period_of(&o.points), other: None })
        .collect();
    SpectrumTable::new("period", entries)
}

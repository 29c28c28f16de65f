use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohomology::CocycleWeight;
use crate::error::{LabError, Result};
use crate::mat::{self, Mat2};
use crate::orbits::{enumerate_periodic_orbits, DEFAULT_ORBIT_BUDGET};
use crate::systems::{AnosovMap, SystemRef};

/// Uniform grid `rho = k * step`, `k = 0..=ceil(max / step)`, refined by
/// bisection inside the bracketing cell.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RhoGrid {
    pub step: f64,
    pub max: f64,
}

impl Default for RhoGrid {
    fn default() -> Self {
        RhoGrid { step: 1.0 / 64.0, max: 8.0 }
    }
}

impl RhoGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.max > self.step) {
            return Err(LabError::Config(format!("bad rho grid: step {} max {}", self.step, self.max)));
        }
        Ok(())
    }

    fn points(&self) -> usize {
        (self.max / self.step).ceil() as usize
    }
}

/// Metric used to measure `|d phi_{-T}|_{E^u}|`. The threshold does not
/// depend on it; `Sheared` exists to check exactly that.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricChoice {
    #[default]
    Flat,
    /// `|v|' = |P v|` with `P = [[1, shear], [0, 1]]`.
    Sheared { shear: f64 },
}

impl MetricChoice {
    fn matrix(&self) -> Mat2 {
        match *self {
            MetricChoice::Flat => [[1.0, 0.0], [0.0, 1.0]],
            MetricChoice::Sheared { shear } => [[1.0, shear], [0.0, 1.0]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    PeriodicOrbitMax,
    Doubling,
}

/// Per-orbit data, all as rates per unit time.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitRate {
    pub id: String,
    pub period: usize,
    pub time: f64,
    /// Average of the weight's log growth, `(1/T) ∫ v`.
    pub weight_rate: f64,
    pub unstable_rate: f64,
    pub stable_rate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// Smallest grid point where the max over orbits is already negative.
    pub omega_plus_grid: f64,
    pub omega_minus_grid: f64,
    pub method: ThresholdMethod,
    pub max_period: usize,
    pub rho_grid: RhoGrid,
    pub metric: MetricChoice,
    pub table: Vec<OrbitRate>,
}

/// `inf { rho > 0 : max_i (a_i - rho b_i) < 0 }` on the grid, refined by
/// bisection; `b_i > 0`. Returns `(bisected, grid point)`.
pub(crate) fn sign_change(rates: &[(f64, f64)], grid: &RhoGrid) -> Result<(f64, f64)> {
    let g = |rho: f64| rates.iter().map(|&(a, b)| a - rho * b).fold(f64::NEG_INFINITY, f64::max);
    if g(0.0) <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let k = (1..=grid.points())
        .find(|&k| g(k as f64 * grid.step) < 0.0)
        .ok_or_else(|| LabError::InvalidInput(format!("grid too narrow: rate still >= 0 at rho = {}", grid.max)))?;
    let (mut lo, mut hi) = ((k - 1) as f64 * grid.step, k as f64 * grid.step);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, k as f64 * grid.step))
}

fn linear_base<'a>(system: &SystemRef<'a>) -> Result<&'a AnosovMap> {
    let map = match system {
        SystemRef::Map(m) => *m,
        SystemRef::Flow(f) => f.base(),
    };
    if !map.is_linear() {
        return Err(LabError::InvalidInput("periodic-orbit thresholds need a linear base map".into()));
    }
    Ok(map)
}

/// Per-orbit rates for the weight along all primitive orbits up to `max_period`.
pub fn orbit_rates(system: SystemRef<'_>, weight: &CocycleWeight, max_period: usize, metric: MetricChoice) -> Result<Vec<OrbitRate>> {
    weight.validate()?;
    let map = linear_base(&system)?;
    let set = enumerate_periodic_orbits(map, max_period, DEFAULT_ORBIT_BUDGET)?;
    let p = metric.matrix();
    let a = mat::to_f64(&map.matrix());
    let rates = set
        .orbits
        .par_iter()
        .map(|o| {
            let roof: Vec<f64> = o
                .points
                .iter()
                .map(|&x| match &system {
                    SystemRef::Map(_) => 1.0,
                    SystemRef::Flow(f) => f.roof_at(x),
                })
                .collect();
            let time: f64 = roof.iter().sum();
            let weight_integral = match weight {
                CocycleWeight::Potential(v) => o.points.iter().zip(&roof).map(|(&x, r)| r * v.eval_re(x)).sum(),
                // Unitary transfer: the propagator has norm one.
                CocycleWeight::Phase(_) => 0.0,
            };
            // |D^n e|' / |e|' along the closed orbit; e returns to itself.
            let grow = |e: [f64; 2]| {
                let mut v = e;
                for _ in 0..o.period {
                    v = mat::apply(&a, v);
                }
                (mat::norm2(mat::apply(&p, v)) / mat::norm2(mat::apply(&p, e))).ln()
            };
            OrbitRate {
                id: o.id(),
                period: o.period,
                time,
                weight_rate: weight_integral / time,
                unstable_rate: grow(map.e_u()) / time,
                stable_rate: -grow(map.e_s()) / time,
            }
        })
        .collect();
    Ok(rates)
}

/// Forward and backward thresholds as maxima over periodic orbits.
///
/// Along a closed orbit the forward rate is `w - rho * lambda_u` with `w`
/// the orbit average of `v`; `omega_+` is where the largest of these
/// crosses zero. `omega_-` uses `-w` and the stable rate.
pub fn forward_threshold(
    system: SystemRef<'_>,
    weight: &CocycleWeight,
    max_period: usize,
    grid: RhoGrid,
    metric: MetricChoice,
) -> Result<ThresholdReport> {
    if max_period < 4 {
        return Err(LabError::InvalidInput(format!("max period {max_period} < 4")));
    }
    grid.validate()?;
    let table = orbit_rates(system, weight, max_period, metric)?;
    let fwd: Vec<(f64, f64)> = table.iter().map(|r| (r.weight_rate, r.unstable_rate)).collect();
    let bwd: Vec<(f64, f64)> = table.iter().map(|r| (-r.weight_rate, r.stable_rate)).collect();
    let (omega_plus, omega_plus_grid) = sign_change(&fwd, &grid)?;
    let (omega_minus, omega_minus_grid) = sign_change(&bwd, &grid)?;
    Ok(ThresholdReport {
        omega_plus,
        omega_minus,
        omega_plus_grid,
        omega_minus_grid,
        method: ThresholdMethod::PeriodicOrbitMax,
        max_period,
        rho_grid: grid,
        metric,
        table,
    })
}

/// Largest orbit average of the weight in the table.
pub fn max_weight_rate(report: &ThresholdReport) -> f64 {
    report.table.iter().map(|r| r.weight_rate).fold(f64::NEG_INFINITY, f64::max)
}

use rand::Rng;
use serde::Serialize;

use crate::cohomology::CocycleWeight;
use crate::error::{LabError, Result};
use crate::lp_calculus::Grid2Field;
use crate::mat::{self, Mat2};
use crate::rng::rng_from_seed;
use crate::systems::{AnosovMap, SystemRef};

use super::forward::{orbit_rates, MetricChoice};
use super::lattice::{compose, lattice_permutation, lattice_values};

/// Continuous subadditive family `g(x, T)`.
#[derive(Clone, Debug)]
pub enum SubadditiveFamily {
    /// `g(x, T) = ∫_0^T v(phi_t x) dt` (additive, hence subadditive).
    Birkhoff(Grid2Field),
    /// `g(x, T) = log |D f^T(x)|` (submultiplicativity of norms).
    LogCocycleNorm,
}

#[derive(Clone, Debug)]
pub struct SubadditiveSpec {
    pub family: SubadditiveFamily,
    /// Sample lattice `(1/N) Z^2` for the sup over `x`.
    pub lattice_n: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DoublingValue {
    pub m: u32,
    pub time: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    /// `sup_x g(x, 2^m) / 2^m` for `m = 1..=m_max`.
    pub doubling: Vec<DoublingValue>,
    /// Largest value of the family's average over periodic orbit measures.
    pub orbit_max: Option<f64>,
    pub gap: Option<f64>,
    /// `|g(x, T + 1) - g(x, T)|` bound along orbits.
    pub lipschitz: f64,
    pub spot_check_violation: f64,
    pub spot_checks: usize,
}

pub const SUBADDITIVITY_TOL: f64 = 1e-9;

fn time_scale(system: &SystemRef<'_>) -> Result<f64> {
    match system {
        SystemRef::Map(_) => Ok(1.0),
        SystemRef::Flow(f) => f
            .roof_constant()
            .ok_or_else(|| LabError::InvalidInput("doubling on a suspension needs a constant roof".into())),
    }
}

fn base<'a>(system: &SystemRef<'a>) -> &'a AnosovMap {
    match system {
        SystemRef::Map(m) => m,
        SystemRef::Flow(f) => f.base(),
    }
}

/// `log |D f^T(x)|` along one float orbit, recorded at every `T <= t_max`.
fn log_norm_path(map: &AnosovMap, x0: [f64; 2], t_max: usize) -> Vec<f64> {
    let mut x = x0;
    let mut acc: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    let mut log_scale = 0.0;
    let mut out = Vec::with_capacity(t_max);
    for _ in 0..t_max {
        acc = mat::mul(&map.derivative(x), &acc);
        let s = acc.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for row in acc.iter_mut() {
            for v in row.iter_mut() {
                *v /= s;
            }
        }
        log_scale += s.ln();
        out.push(log_scale + mat::op_norm(&acc).ln());
        x = map.apply(x);
    }
    out
}

/// Doubling estimator `sup_x g(x, 2^m) / 2^m` against the periodic-orbit
/// maximum.
///
/// For Birkhoff families on a linear map the lattice is invariant, so
/// `g(., 2^{m+1}) = g(., 2^m) + g(., 2^m) o A^{2^m}` is evaluated exactly
/// with permutations, mirroring the doubling step of the limit argument.
pub fn subadditive_limit(spec: &SubadditiveSpec, system: SystemRef<'_>, m_max: u32, max_period: usize) -> Result<ConvergenceReport> {
    if m_max < 1 || m_max > 20 {
        return Err(LabError::InvalidInput(format!("m_max = {m_max} outside 1..=20")));
    }
    let c = time_scale(&system)?;
    let map = base(&system);
    let n = spec.lattice_n;
    let mut rng = rng_from_seed(spec.seed);
    let spot_checks = 64;
    match &spec.family {
        SubadditiveFamily::Birkhoff(v) => {
            if !map.is_linear() {
                return Err(LabError::InvalidInput("exact lattice doubling needs a linear map".into()));
            }
            let vals: Vec<f64> = lattice_values(v, n).into_iter().map(|x| c * x).collect();
            let perm = lattice_permutation(&map.matrix(), n);
            let lipschitz = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            // Spot checks: direct sums, g(x, T + T') vs g(x, T) + g(A^T x, T').
            let g = |mut x: usize, t: usize| -> (f64, usize) {
                let mut s = 0.0;
                for _ in 0..t {
                    s += vals[x];
                    x = perm[x];
                }
                (s, x)
            };
            let mut violation = 0.0f64;
            for _ in 0..spot_checks {
                let x = rng.gen_range(0..n * n);
                let (t1, t2) = (rng.gen_range(1..64), rng.gen_range(1..64));
                let (whole, _) = g(x, t1 + t2);
                let (a, y) = g(x, t1);
                let (b, _) = g(y, t2);
                violation = violation.max(whole - a - b);
            }
            if violation > SUBADDITIVITY_TOL {
                return Err(LabError::Validation(format!("family not subadditive (excess {violation:.3e})")));
            }
            let mut sums = vals.clone();
            let mut p = perm;
            let mut doubling = Vec::new();
            for m in 1..=m_max {
                let shifted: Vec<f64> = (0..n * n).map(|x| sums[p[x]]).collect();
                for (s, t) in sums.iter_mut().zip(&shifted) {
                    *s += t;
                }
                p = compose(&p, &p);
                let t = 2f64.powi(m as i32);
                let sup = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                doubling.push(DoublingValue { m, time: c * t, value: sup / (c * t) });
            }
            let rates = orbit_rates(system, &CocycleWeight::Potential(v.clone()), max_period, MetricChoice::Flat)?;
            let orbit_max = rates.iter().map(|r| r.weight_rate).fold(f64::NEG_INFINITY, f64::max);
            let last = doubling.last().map(|d| d.value).unwrap_or(f64::NAN);
            Ok(ConvergenceReport {
                doubling,
                orbit_max: Some(orbit_max),
                gap: Some(last - orbit_max),
                lipschitz: lipschitz / c,
                spot_check_violation: violation,
                spot_checks,
            })
        }
        SubadditiveFamily::LogCocycleNorm => {
            let t_max = 1usize << m_max;
            let points: Vec<[f64; 2]> = (0..n * n).map(|i| [(i / n) as f64 / n as f64, (i % n) as f64 / n as f64]).collect();
            let mut violation = 0.0f64;
            for _ in 0..spot_checks {
                let x = points[rng.gen_range(0..n * n)];
                let (t1, t2) = (rng.gen_range(1..32), rng.gen_range(1..32));
                let path = log_norm_path(map, x, t1 + t2);
                let mut y = x;
                for _ in 0..t1 {
                    y = map.apply(y);
                }
                let tail = log_norm_path(map, y, t2);
                violation = violation.max(path[t1 + t2 - 1] - path[t1 - 1] - tail[t2 - 1]);
            }
            if violation > SUBADDITIVITY_TOL {
                return Err(LabError::Validation(format!("family not subadditive (excess {violation:.3e})")));
            }
            let paths: Vec<Vec<f64>> = points.iter().map(|&x| log_norm_path(map, x, t_max)).collect();
            let doubling = (1..=m_max)
                .map(|m| {
                    let t = 1usize << m;
                    let sup = paths.iter().map(|p| p[t - 1]).fold(f64::NEG_INFINITY, f64::max);
                    DoublingValue { m, time: c * t as f64, value: sup / (c * t as f64) }
                })
                .collect::<Vec<_>>();
            let lipschitz = points.iter().map(|&x| mat::op_norm(&map.derivative(x)).ln()).fold(0.0f64, f64::max) / c;
            let orbit_max = map.is_linear().then(|| map.log_lambda() / c);
            let last = doubling.last().map(|d| d.value).unwrap_or(f64::NAN);
            Ok(ConvergenceReport {
                gap: orbit_max.map(|o| last - o),
                doubling,
                orbit_max,
                lipschitz,
                spot_check_violation: violation,
                spot_checks,
            })
        }
    }
}

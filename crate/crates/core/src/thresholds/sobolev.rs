use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fit::fit_line;
use crate::lp_calculus::Grid2Field;
use crate::systems::SystemRef;

use super::forward::{sign_change, RhoGrid};
use super::lattice::{lattice_permutation, lattice_values};

#[derive(Clone, Debug, Serialize)]
pub struct SobolevThresholdReport {
    pub omega: f64,
    pub omega_grid: f64,
    /// `(T, log ∫ e^{S_T v} dmu)`, per unit time `T`.
    pub log_integrals: Vec<(f64, f64)>,
    /// Fitted growth rate of the weight integral.
    pub growth_rate: f64,
    pub expansion_rate: f64,
    pub fit_residual: f64,
    pub lattice_n: usize,
}

/// Fit residual above which the horizon is declared too short.
pub const SOBOLEV_FIT_TOL: f64 = 1e-2;

/// `L^2`-type threshold: the sup over `x` in the forward threshold is
/// replaced by an integral against Lebesgue measure,
/// `(1/T) log ∫ e^{S_T v} |d phi_{-T}|_{E^u}|^rho dmu`.
///
/// For the linear model the expansion factor is `lambda^{-rho T}` at every
/// point, so the rate is `P_T(v) - rho log lambda` with `P_T(v)` the growth
/// rate of `∫ e^{S_T v}`, computed by lattice quadrature over `(1/N) Z^2`
/// (exact Birkhoff sums, `x -> Ax` permutes the lattice) and fitted in `T`
/// over the second half of the horizon.
pub fn sobolev_threshold_integral(
    system: SystemRef<'_>,
    v: &Grid2Field,
    grid: RhoGrid,
    t_max: usize,
    lattice_n: usize,
) -> Result<SobolevThresholdReport> {
    grid.validate()?;
    if t_max < 4 {
        return Err(LabError::InvalidInput(format!("horizon {t_max} < 4")));
    }
    let (map, c) = match system {
        SystemRef::Map(m) => (m, 1.0),
        SystemRef::Flow(f) => (
            f.base(),
            f.roof_constant().ok_or_else(|| LabError::InvalidInput("integral threshold on a suspension needs a constant roof".into()))?,
        ),
    };
    if !map.is_linear() {
        return Err(LabError::InvalidInput("integral threshold needs a linear base map".into()));
    }
    let n = lattice_n;
    let vals: Vec<f64> = lattice_values(v, n).into_iter().map(|x| c * x).collect();
    let perm = lattice_permutation(&map.matrix(), n);
    let mut pos: Vec<usize> = (0..n * n).collect();
    let mut sums = vec![0.0; n * n];
    let mut log_integrals = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        for (s, p) in sums.iter_mut().zip(pos.iter_mut()) {
            *s += vals[*p];
            *p = perm[*p];
        }
        // log-mean-exp with a shift, summed in index order for determinism.
        let top = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = sums.iter().map(|s| (s - top).exp()).sum::<f64>() / (n * n) as f64;
        log_integrals.push((c * t as f64, top + mean.ln()));
    }
    let tail = &log_integrals[t_max / 2..];
    let xs: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| LabError::InvalidInput("horizon too short".into()))?;
    if fit.max_residual > SOBOLEV_FIT_TOL {
        return Err(LabError::Validation(format!("horizon too short: fit residual {:.3e}", fit.max_residual)));
    }
    let expansion_rate = map.log_lambda() / c;
    let (omega, omega_grid) = sign_change(&[(fit.slope, expansion_rate)], &grid)?;
    Ok(SobolevThresholdReport {
        omega,
        omega_grid,
        log_integrals,
        growth_rate: fit.slope,
        expansion_rate,
        fit_residual: fit.max_residual,
        lattice_n: n,
    })
}

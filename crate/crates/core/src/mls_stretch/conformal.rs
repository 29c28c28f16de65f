use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fit::{fit_line, LineFit};
use crate::orbits::{axis_integral, perturbed_geodesic_length, ConformalFactor, ShorteningDisc};
use crate::orbits::geodesic::EQUIVARIANCE_TOL;
use crate::systems::FuchsianGroup;

/// Nodes of the arclength-uniform rule for `∫_{gamma_0} sigma`.
pub const AXIS_NODES: usize = 512;

/// Metric `g = e^{2 eps sigma} g_0` on the surface.
#[derive(Clone, Debug, Serialize)]
pub struct ConformalPerturbation {
    pub sigma: ConformalFactor,
    pub eps: f64,
}

impl ConformalPerturbation {
    pub fn new(group: &FuchsianGroup, sigma: ConformalFactor, eps: f64) -> Result<Self> {
        sigma.validate(group)?;
        let res = sigma.equivariance_residual(group);
        if res > EQUIVARIANCE_TOL {
            return Err(LabError::InvalidInput(format!("conformal factor is not group-invariant (residual {res:.3e})")));
        }
        if !eps.is_finite() {
            return Err(LabError::InvalidInput("amplitude must be finite".into()));
        }
        Ok(ConformalPerturbation { sigma, eps })
    }

    /// `pi_2^*(g - g_0)` at a disk point and unit `g_0`-vector: `e^{2 eps sigma} - 1`.
    pub fn metric_change(&self, group: &FuchsianGroup, z: Complex64) -> f64 {
        (2.0 * self.eps * self.sigma.eval_disk(group, z)).exp_m1()
    }

    pub fn factor(&self) -> ConformalFactor {
        self.sigma.scaled(self.eps)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConformalRow {
    pub eps: f64,
    pub length: f64,
    /// `R(eps) = L_eps / L_0 - 1 - (eps / L_0) ∫_{gamma_0} sigma`, with `L_0`
    /// the discrete minimizer length so that discretization bias cancels.
    pub remainder: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct WordSlope {
    pub word: Vec<usize>,
    /// Translation length of the word.
    pub l0: f64,
    /// Length of the minimizer found for `sigma = 0`.
    pub l0_minimizer: f64,
    pub axis_integral: f64,
    pub rows: Vec<ConformalRow>,
    /// Fit of `ln |R|` on `ln eps`; `None` when some remainder vanishes.
    pub fit: Option<LineFit>,
}

/// First-order check of the length functional under conformal changes:
/// the remainder after the linear term should scale like `eps^2`.
pub fn conformal_linearization_experiment(
    group: &FuchsianGroup,
    sigma: &ConformalFactor,
    eps_list: &[f64],
    words: &[Vec<usize>],
    disc: &ShorteningDisc,
) -> Result<Vec<WordSlope>> {
    check_eps(eps_list)?;
    ConformalPerturbation::new(group, sigma.clone(), 1.0)?;
    if words.is_empty() {
        return Err(LabError::InvalidInput("no words given".into()));
    }
    words.par_iter().map(|w| word_slope(group, sigma, eps_list, w, disc)).collect()
}

fn check_eps(eps_list: &[f64]) -> Result<()> {
    if eps_list.len() < 3 {
        return Err(LabError::InvalidInput(format!("need at least 3 amplitudes, got {}", eps_list.len())));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(LabError::InvalidInput("amplitudes must be positive".into()));
    }
    let q = eps_list[1] / eps_list[0];
    if eps_list.windows(2).any(|p| ((p[1] / p[0]) / q - 1.0).abs() > 1e-9) || (q - 1.0).abs() < 1e-9 {
        return Err(LabError::InvalidInput("amplitudes must form a nonconstant geometric progression".into()));
    }
    Ok(())
}

fn word_slope(group: &FuchsianGroup, sigma: &ConformalFactor, eps_list: &[f64], word: &[usize], disc: &ShorteningDisc) -> Result<WordSlope> {
    let base = perturbed_geodesic_length(group, word, &ConformalFactor::zero(), disc)?;
    let l0 = base.unperturbed;
    let l0_disc = base.length;
    let integral = axis_integral(group, word, sigma, AXIS_NODES)?;
    let rows = eps_list
        .iter()
        .map(|&eps| {
            let rep = perturbed_geodesic_length(group, word, &sigma.scaled(eps), disc)?;
            let remainder = rep.length / l0_disc - 1.0 - eps * integral / l0_disc;
            Ok(ConformalRow { eps, length: rep.length, remainder, iterations: rep.iterations })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = if rows.iter().all(|r| r.remainder != 0.0) {
        let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.eps.ln(), r.remainder.abs().ln())).unzip();
        fit_line(&x, &y)
    } else {
        None
    };
    Ok(WordSlope { word: base.word, l0, l0_minimizer: base.length, axis_integral: integral, rows, fit })
}

use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pair::{check_propagation_cover, RadialPair};
use super::propagator::{step_back, step_forward};
use super::section::{step_multiplier, Section};
use crate::cohomology::CocycleWeight;
use crate::error::{LabError, Result};
use crate::fit::{self, LineFit};
use crate::lp_calculus::{band_filter_apply, hz_norm, ConeSymbol, CutoffSpec, Grid2Field, LPFilterBank};
use crate::mat::{apply_i, pow_i, transpose_i};
use crate::rng::split;
use crate::systems::SystemRef;
use crate::thresholds::{forward_threshold, MetricChoice, RhoGrid};

/// Seeded test fields on the `n x n` section lattice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilySpec {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub kind: FamilyKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// Truncated backward Duhamel sums `u_h = sum_{j=0}^{K(h)} e^{j tau X} g`
    /// of a random seed `g` on `A`'s plateau. `K(h)` puts the top mode at
    /// scale `h`, and `X_tau u_h` telescopes to a top term plus a low term
    /// outside `B`.
    Quasimode,
    /// `sum_k c_k e^{2 pi i k.x}` over `|k|_inf <= max_mode`, real, with
    /// `|c_k| <= (1 + |k|)^{-decay}`.
    Smooth { max_mode: i64, decay: f64 },
    Zero,
}

impl FamilySpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(LabError::InvalidInput("test family is empty".into()));
        }
        if !self.n.is_power_of_two() || self.n < 16 {
            return Err(LabError::InvalidInput(format!("family grid side {} must be a power of two >= 16", self.n)));
        }
        if let FamilyKind::Smooth { max_mode, .. } = self.kind {
            if max_mode < 1 || max_mode >= (self.n / 2) as i64 {
                return Err(LabError::InvalidInput(format!("max_mode {max_mode} not resolved on n = {}", self.n)));
            }
        }
        Ok(())
    }
}

/// Seeded real trigonometric polynomial of a `Smooth` family, sample `index`.
pub fn smooth_field(n: usize, max_mode: i64, decay: f64, seed: u64, index: u64) -> Result<Grid2Field> {
    let mut rng = split(seed, "smooth-field", index);
    let mut modes = Vec::new();
    for k1 in -max_mode..=max_mode {
        for k2 in -max_mode..=max_mode {
            // One representative of each +-k pair; the conjugate keeps it real.
            if (k1, k2) <= (0, 0) {
                continue;
            }
            let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
            let c = Complex64::from_polar(rng.gen_range(0.0..1.0) * (1.0 + r).powf(-decay), rng.gen_range(0.0..std::f64::consts::TAU));
            modes.push(([k1, k2], c));
            modes.push(([-k1, -k2], c.conj()));
        }
    }
    Grid2Field::from_modes(n, &modes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `rho` above the forward threshold: the estimate holds.
    Bounded,
    /// `rho` at or below the threshold: ratios may diverge as `h -> 0`.
    Divergent,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub sample: usize,
    pub h: f64,
    /// Number of returns in the quasimode sum.
    pub returns: usize,
    /// `sup_{2^j >= 1/h0} 2^{j rho} ||phi_j A_{h0} u||_inf`.
    pub lhs: f64,
    /// `||B_{h0} X u||_{C^rho} + h0^N ||u||_{C^{-N}}`.
    pub rhs: f64,
    pub negative_norm: f64,
    /// `None` when `u = 0` and both sides vanish.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleStats {
    pub h: f64,
    pub max: f64,
    pub median: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub per_h: Vec<ScaleStats>,
    /// Fit of `log2(median ratio)` against `log2(1/h)`.
    pub median_fit: Option<LineFit>,
    pub max_fit: Option<LineFit>,
    pub rho: f64,
    pub n_neg: f64,
    pub horizon: f64,
    pub omega: f64,
    /// `max(omega - rho, 0) log2(lambda)` times the fitted growth of `K(h)`
    /// per octave: the slope the quasimode family would show if the top
    /// term alone set `rhs`. An empirical reference, not a sharp rate.
    pub predicted_slope: f64,
    pub regime: Regime,
    pub skipped: usize,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,h,lhs,rhs,ratio\n");
        for r in &self.rows {
            let ratio = r.ratio.map(|v| format!("{v:.12e}")).unwrap_or_default();
            out.push_str(&format!("{},{:.12e},{:.12e},{:.12e},{}\n", r.sample, r.h, r.lhs, r.rhs, ratio));
        }
        out
    }

    /// Largest over smallest per-`h` max ratio.
    pub fn max_ratio_spread(&self) -> f64 {
        let (lo, hi) = self.per_h.iter().fold((f64::INFINITY, 0.0f64), |(a, b), s| (a.min(s.max), b.max(s.max)));
        hi / lo
    }
}

/// Forward threshold of the weight, 0 without one.
pub(crate) fn omega_of(system: SystemRef<'_>, weight: Option<&CocycleWeight>) -> Result<f64> {
    match weight {
        None => Ok(0.0),
        Some(w) => Ok(forward_threshold(system, w, 12, RhoGrid::default(), MetricChoice::Flat)?.omega_plus),
    }
}

/// Return count `K(h)` of the quasimode at scale `h`: the least `K >= 0`
/// with `lambda^{K+2} >= h0 / h`, which brings the top term
/// `e^{K tau X} g` of a seed on `A`'s plateau up to `|xi| ~ 1 / h`.
pub fn quasimode_returns(lambda: f64, h0: f64, h: f64) -> usize {
    ((h0 / h).ln() / lambda.ln() - 2.0 - 1e-9).ceil().max(0.0) as usize
}

/// Seed modes `k` (one per `+-k` pair) with `a(h0 xi) = 1` and
/// `b(h0 Phi_1 xi) = 0`, so `e^{-tau X}` of the seed lies outside `B`.
pub fn quasimode_seed_modes(sec: &Section, pair: &RadialPair) -> Vec<[i64; 2]> {
    let reach = (super::pair::B_RADIAL.0 * sec.lambda / (std::f64::consts::TAU * pair.h0)).ceil() as i64 + 1;
    let back = transpose_i(&pow_i(&sec.matrix, -1));
    let xi = |k: [i64; 2]| [std::f64::consts::TAU * k[0] as f64, std::f64::consts::TAU * k[1] as f64];
    let mut out = Vec::new();
    for k1 in 0..=reach {
        for k2 in -reach..=reach {
            if (k1, k2) <= (0, 0) {
                continue;
            }
            let k = [k1, k2];
            // Keeps the top mode of `u_h` near scale `h`.
            if pair.h0 * crate::mat::norm2(xi(k)) > super::pair::B_RADIAL.0 * sec.lambda {
                continue;
            }
            if pair.a_op.eval_scaled(&xi(k), pair.h0) == 1.0 && pair.b_op.eval_scaled(&xi(apply_i(&back, k)), pair.h0) == 0.0 {
                out.push(k);
            }
        }
    }
    out
}

struct Quasimode {
    u: Grid2Field,
    xu: Grid2Field,
    returns: usize,
}

fn quasimode(
    sec: &Section,
    pair: &RadialPair,
    seeds: &[[i64; 2]],
    w: Option<&Grid2Field>,
    n: usize,
    h: f64,
    seed: u64,
    index: u64,
) -> Result<Quasimode> {
    let returns = quasimode_returns(sec.lambda, pair.h0, h);
    let fwd = transpose_i(&pow_i(&sec.matrix, returns as i64));
    let half = (n / 2) as i64;
    for &k in seeds {
        let top = apply_i(&fwd, k);
        if top[0].abs() >= half || top[1].abs() >= half {
            return Err(LabError::InvalidInput(format!(
                "quasimode at h = {h} needs mode {top:?}, not resolved on n = {n}; raise n or h"
            )));
        }
    }
    let mut rng = split(seed, "quasimode", index);
    let mut modes = Vec::with_capacity(2 * seeds.len());
    for &k in seeds {
        let c = Complex64::from_polar(rng.gen_range(0.5..1.0) * 0.5, rng.gen_range(0.0..std::f64::consts::TAU));
        modes.push((k, c));
        modes.push(([-k[0], -k[1]], c.conj()));
    }
    let g = Grid2Field::from_modes(n, &modes)?;
    let mut term = g;
    let mut u = term.clone();
    for _ in 0..returns {
        term = step_forward(sec, &term, w);
        u = u.add(&term);
    }
    let xu = u.sub(&step_back(sec, &u, w)).scale(1.0 / sec.tau);
    Ok(Quasimode { u, xu, returns })
}

/// `sup_{j >= j0} 2^{j rho} ||phi_j f||_inf` with `2^{j0} >= 1/h0`.
fn high_band_norm(f: &Grid2Field, rho: f64, h0: f64) -> f64 {
    let bank = LPFilterBank::cached(&[f.n(), f.n()], CutoffSpec::default()).expect("valid grid");
    let j0 = (1.0 / h0).log2().ceil().max(1.0) as usize;
    bank.band_sup_norms(f)
        .iter()
        .enumerate()
        .skip(j0)
        .fold(0.0f64, |m, (j, &b)| m.max((rho * j as f64).exp2() * b))
}

fn scale_stats(rows: &[SweepRow], h_list: &[f64]) -> Vec<ScaleStats> {
    h_list
        .iter()
        .map(|&h| {
            let ratios: Vec<f64> = rows.iter().filter(|r| r.h == h).filter_map(|r| r.ratio).collect();
            ScaleStats {
                h,
                max: ratios.iter().cloned().fold(0.0f64, f64::max),
                median: fit::median(&ratios),
                count: ratios.len(),
            }
        })
        .collect()
}

fn trend(per_h: &[ScaleStats], pick: impl Fn(&ScaleStats) -> f64) -> Option<LineFit> {
    let pts: Vec<(f64, f64)> =
        per_h.iter().filter(|s| s.count > 0 && pick(s) > 0.0).map(|s| ((1.0 / s.h).log2(), pick(s).log2())).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    fit::fit_line(&x, &y)
}

/// Semiclassical source estimate over dyadic scales.
///
/// For each sample and each `h` in `h_list` the family supplies `u`; the
/// report holds `lhs`, `rhs` and their ratio, per-scale statistics and the
/// fitted trend in `log2(1/h)`.
pub fn source_estimate_sweep(
    system: SystemRef<'_>,
    pair: &RadialPair,
    rho: f64,
    n_neg: f64,
    h_list: &[f64],
    family: &FamilySpec,
    weight: Option<&CocycleWeight>,
) -> Result<SweepReport> {
    family.validate()?;
    if h_list.is_empty() || h_list.iter().any(|&h| !(h > 0.0 && h <= pair.h0)) {
        return Err(LabError::InvalidInput(format!("scales must lie in (0, h0 = {}]", pair.h0)));
    }
    let sec = Section::of(system)?;
    let n = family.n;
    let w = step_multiplier(weight, sec.tau, n)?;
    let omega = omega_of(system, weight)?;
    let seeds = match family.kind {
        FamilyKind::Quasimode => {
            let s = quasimode_seed_modes(&sec, pair);
            if s.is_empty() {
                return Err(LabError::InvalidInput("no lattice frequency on A's plateau at this h0; lower h0".into()));
            }
            s
        }
        _ => Vec::new(),
    };
    let jobs: Vec<(usize, usize)> = (0..family.samples).flat_map(|s| (0..h_list.len()).map(move |i| (s, i))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(sample, hi)| {
            let h = h_list[hi];
            let (u, xu, returns) = match family.kind {
                FamilyKind::Quasimode => {
                    let q = quasimode(&sec, pair, &seeds, w.as_ref(), n, h, family.seed, sample as u64)?;
                    (q.u, q.xu, q.returns)
                }
                FamilyKind::Smooth { max_mode, decay } => {
                    let u = smooth_field(n, max_mode, decay, family.seed, sample as u64)?;
                    let xu = u.sub(&step_back(&sec, &u, w.as_ref())).scale(1.0 / sec.tau);
                    (u, xu, 0)
                }
                FamilyKind::Zero => (Grid2Field::zeros(n)?, Grid2Field::zeros(n)?, 0),
            };
            let lhs = high_band_norm(&band_filter_apply(&u, &pair.a_op, pair.h0)?, rho, pair.h0);
            let negative_norm = hz_norm(&u, -n_neg);
            let rhs = hz_norm(&band_filter_apply(&xu, &pair.b_op, pair.h0)?, rho) + pair.h0.powf(n_neg) * negative_norm;
            let ratio = if rhs > 0.0 {
                Some(lhs / rhs)
            } else if lhs == 0.0 {
                None
            } else {
                Some(f64::INFINITY)
            };
            Ok(SweepRow { sample, h, returns, lhs, rhs, negative_norm, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    let skipped = rows.iter().filter(|r| r.ratio.is_none()).count();
    let per_h = scale_stats(&rows, h_list);
    let k_per_octave = match family.kind {
        FamilyKind::Quasimode => {
            let x: Vec<f64> = h_list.iter().map(|h| (1.0 / h).log2()).collect();
            let k: Vec<f64> = h_list.iter().map(|&h| quasimode_returns(sec.lambda, pair.h0, h) as f64).collect();
            fit::fit_line(&x, &k).map_or(0.0, |f| f.slope)
        }
        _ => 0.0,
    };
    Ok(SweepReport {
        median_fit: trend(&per_h, |s| s.median),
        max_fit: trend(&per_h, |s| s.max),
        per_h,
        rows,
        rho,
        n_neg,
        horizon: pair.horizon,
        omega,
        predicted_slope: (omega - rho).max(0.0) * sec.lambda.log2() * k_per_octave,
        regime: if rho > omega { Regime::Bounded } else { Regime::Divergent },
        skipped,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PropagationRow {
    pub sample: usize,
    pub a_norm: f64,
    pub b_norm: f64,
    pub d_norm: f64,
    pub negative_norm: f64,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropagationReport {
    pub rows: Vec<PropagationRow>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub s: f64,
    pub n_neg: f64,
    pub time: f64,
    pub covectors_checked: usize,
}

/// Ratios `||A u||_{C^s} / (||B X u||_{C^s} + ||D u||_{C^s} + ||u||_{C^{-N}})`
/// after checking that `B` covers the trajectory and `D` the time-`T`
/// pushforward of `supp A`. Symbols act at `h = 1`.
pub fn propagation_sweep(
    system: SystemRef<'_>,
    a: &ConeSymbol,
    b: &ConeSymbol,
    d: &ConeSymbol,
    s: f64,
    n_neg: f64,
    t: f64,
    family: &FamilySpec,
    weight: Option<&CocycleWeight>,
) -> Result<PropagationReport> {
    family.validate()?;
    let covectors_checked = check_propagation_cover(system, a, b, d, t)?;
    let sec = Section::of(system)?;
    let n = family.n;
    let w = step_multiplier(weight, sec.tau, n)?;
    let rows = (0..family.samples)
        .into_par_iter()
        .map(|sample| {
            let u = match family.kind {
                FamilyKind::Smooth { max_mode, decay } => smooth_field(n, max_mode, decay, family.seed, sample as u64)?,
                FamilyKind::Zero => Grid2Field::zeros(n)?,
                FamilyKind::Quasimode => {
                    return Err(LabError::InvalidInput("propagation sweeps take smooth or zero families".into()))
                }
            };
            let xu = u.sub(&step_back(&sec, &u, w.as_ref())).scale(1.0 / sec.tau);
            let a_norm = hz_norm(&band_filter_apply(&u, a, 1.0)?, s);
            let b_norm = hz_norm(&band_filter_apply(&xu, b, 1.0)?, s);
            let d_norm = hz_norm(&band_filter_apply(&u, d, 1.0)?, s);
            let negative_norm = hz_norm(&u, -n_neg);
            let den = b_norm + d_norm + negative_norm;
            let ratio = if den > 0.0 { Some(a_norm / den) } else { None };
            Ok(PropagationRow { sample, a_norm, b_norm, d_norm, negative_norm, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    Ok(PropagationReport {
        max_ratio: ratios.iter().cloned().fold(0.0f64, f64::max),
        median_ratio: fit::median(&ratios),
        rows,
        s,
        n_neg,
        time: t,
        covectors_checked,
    })
}

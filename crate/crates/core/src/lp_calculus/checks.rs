//! Numerical checks of the norm comparison lemmas on the torus.

use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use super::bank::{hz_from_bands, hz_norm, LPFilterBank};
use super::cutoff::CutoffSpec;
use super::grid::Grid2Field;
use super::symbol::{band_filter_apply, ConeSymbol, RadialProfile};
use crate::error::{LabError, Result};
use crate::fit::fit_line;
use crate::rng::split;

#[derive(Clone, Debug, Serialize)]
pub struct EquivReport {
    /// `||Op_{h0}(Psi) f|| + sup_h h^{-s} ||Op_h(Phi) f||` over `h_sample`.
    pub norm_a: f64,
    /// `hz_norm(f, s)`.
    pub norm_b: f64,
    pub ratio: f64,
    pub low_term: f64,
    pub high_terms: Vec<f64>,
    pub h_sample: Vec<f64>,
}

/// Default comparison symbols: `Phi` on `(1/2, 2)` and `Psi` equal to 1 on
/// `|xi| < 2` and vanishing beyond 3.
pub fn default_phi() -> ConeSymbol {
    ConeSymbol::isotropic(RadialProfile::annulus(0.5, 0.7, 1.45, 2.0).expect("static profile"))
}

pub fn default_psi() -> ConeSymbol {
    ConeSymbol::isotropic(RadialProfile::ball(2.0, 3.0).expect("static profile"))
}

/// `h0 2^{-m}` down to the scale where `Phi` stops seeing the grid.
pub fn dyadic_h_sample(h0: f64, phi: &ConeSymbol, n: usize) -> Vec<f64> {
    let r_max = 2.0 * PI * (n / 2) as f64 * 2f64.sqrt();
    let mut out = Vec::new();
    let mut h = h0;
    while h * r_max >= phi.radial.support_lo && out.len() < 64 {
        out.push(h);
        h *= 0.5;
    }
    out
}

pub fn norm_equivalence_check(
    f: &Grid2Field,
    s: f64,
    h0: f64,
    phi: &ConeSymbol,
    psi: &ConeSymbol,
    h_sample: &[f64],
) -> Result<EquivReport> {
    if h_sample.is_empty() {
        return Err(LabError::Config("empty h-sample".into()));
    }
    if phi.direction.is_some() || !phi.radial.is_compact() || phi.radial.support_lo <= 0.0 {
        return Err(LabError::Config("Phi must be an isotropic compact annulus".into()));
    }
    if psi.direction.is_some() || psi.radial.support_lo != 0.0 || psi.radial.plateau_hi < 2.0 || psi.radial.support_hi > 3.0 {
        return Err(LabError::Config("Psi must equal 1 on |xi| < 2 and vanish beyond 3".into()));
    }
    if h_sample.iter().any(|&h| !(h > 0.0 && h <= h0)) {
        return Err(LabError::Config("h-sample must lie in (0, h0]".into()));
    }
    let low_term = band_filter_apply(f, psi, h0)?.max_abs();
    let high_terms: Vec<f64> = h_sample
        .par_iter()
        .map(|&h| Ok(h.powf(-s) * band_filter_apply(f, phi, h)?.max_abs()))
        .collect::<Result<_>>()?;
    let norm_a = low_term + high_terms.iter().cloned().fold(0.0, f64::max);
    let norm_b = hz_norm(f, s);
    let ratio = if norm_b > 0.0 { norm_a / norm_b } else { f64::NAN };
    Ok(EquivReport { norm_a, norm_b, ratio, low_term, high_terms, h_sample: h_sample.to_vec() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ComparisonForm {
    /// `b` vanishes on `|xi| <= 1/2`: lower regularity controlled by higher.
    HighFrequency,
    /// `b` vanishes on `|xi| >= 2`: the converse estimate.
    LowFrequency,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleComparison {
    pub form: ComparisonForm,
    pub lhs: f64,
    /// The main right-hand term without the constant.
    pub rhs_main: f64,
    /// `h^N ||f||_{C^{-N}}`.
    pub rhs_tail: f64,
    pub rhs: f64,
    pub constant: f64,
    pub satisfied: bool,
}

pub const COMPARISON_N: f64 = 4.0;

pub fn comparison_form(b: &ConeSymbol) -> Result<ComparisonForm> {
    if b.amplitude == 0.0 || b.radial.support_lo >= 0.5 {
        Ok(ComparisonForm::HighFrequency)
    } else if b.radial.support_hi <= 2.0 {
        Ok(ComparisonForm::LowFrequency)
    } else {
        Err(LabError::Config("b must vanish on |xi| <= 1/2 or on |xi| >= 2".into()))
    }
}

/// Evaluates both sides of the applicable rho / rho' comparison with the
/// supplied constant `C`.
pub fn scale_comparison_check(
    f: &Grid2Field,
    rho: f64,
    rho_prime: f64,
    h: f64,
    b: &ConeSymbol,
    constant: f64,
) -> Result<ScaleComparison> {
    if rho_prime <= rho {
        return Err(LabError::Config("need rho' > rho".into()));
    }
    let form = comparison_form(b)?;
    let g = band_filter_apply(f, b, h)?;
    let bank = LPFilterBank::cached(&[f.n(), f.n()], CutoffSpec::default())?;
    let bands = bank.band_sup_norms(&g);
    let tail = h.powf(COMPARISON_N) * hz_norm(f, -COMPARISON_N);
    let (lhs, main) = match form {
        ComparisonForm::HighFrequency => (hz_from_bands(&bands, rho), h.powf(rho_prime - rho) * hz_from_bands(&bands, rho_prime)),
        ComparisonForm::LowFrequency => (hz_from_bands(&bands, rho_prime), h.powf(rho - rho_prime) * hz_from_bands(&bands, rho)),
    };
    let rhs = main + tail;
    Ok(ScaleComparison { form, lhs, rhs_main: main, rhs_tail: tail, rhs, constant, satisfied: lhs <= constant * rhs * (1.0 + 1e-12) })
}

/// Fits the smallest `C` valid over a family of `(f, h)` pairs and reports
/// every instance against it.
pub fn scale_comparison_family(
    cases: &[(Grid2Field, f64)],
    rho: f64,
    rho_prime: f64,
    b: &ConeSymbol,
) -> Result<(f64, Vec<ScaleComparison>)> {
    let raw: Vec<ScaleComparison> = cases
        .par_iter()
        .map(|(f, h)| scale_comparison_check(f, rho, rho_prime, *h, b, 1.0))
        .collect::<Result<_>>()?;
    let c = raw
        .iter()
        .filter(|r| r.rhs > 0.0)
        .map(|r| r.lhs / r.rhs)
        .fold(0.0, f64::max);
    let reports = raw
        .into_iter()
        .map(|r| ScaleComparison { constant: c, satisfied: r.lhs <= c * r.rhs * (1.0 + 1e-12), ..r })
        .collect();
    Ok((c, reports))
}

#[derive(Clone, Debug, Serialize)]
pub struct LinfBoundReport {
    pub h: Vec<f64>,
    pub estimate: Vec<f64>,
    pub trials: usize,
    pub n_side: usize,
    /// `max / min` of the per-h estimates.
    pub spread: f64,
}

/// Random real trig polynomial with most modes inside the symbol's active
/// frequency range at scale `h`, normalized to unit grid sup.
pub fn scale_adapted_polynomial(n: usize, sym: &ConeSymbol, h: f64, rng: &mut impl Rng) -> Result<Grid2Field> {
    let half = (n / 2) as i64 - 1;
    let r_lo = sym.radial.support_lo / h;
    let r_hi = if sym.radial.is_compact() { sym.radial.support_hi / h } else { 2.0 * PI * half as f64 };
    let mut modes = Vec::new();
    let mut attempts = 0;
    while modes.len() < 8 && attempts < 20000 {
        attempts += 1;
        let k = [rng.gen_range(-half..=half), rng.gen_range(-half..=half)];
        let r = 2.0 * PI * ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        if r >= r_lo && r <= r_hi {
            modes.push(k);
        }
    }
    for _ in 0..4 {
        modes.push([rng.gen_range(-4..=4), rng.gen_range(-4..=4)]);
    }
    let mut terms = Vec::new();
    for k in modes {
        let amp: f64 = rng.gen_range(0.2..1.0);
        let phase: f64 = rng.gen_range(0.0..2.0 * PI);
        let c = Complex64::from_polar(amp / 2.0, phase);
        terms.push((k, c));
        terms.push(([-k[0], -k[1]], c.conj()));
    }
    let u = Grid2Field::from_modes(n, &terms)?;
    let m = u.max_abs();
    Ok(if m > 0.0 { u.scale(1.0 / m) } else { u })
}

/// Max over trials of `||Op_h(sym) u||_inf / ||u||_inf`, per `h`. Trial 0 is
/// a plane wave on the symbol plateau when one is resolvable.
pub fn linf_band_bound(sym: &ConeSymbol, h_list: &[f64], trials: usize, seed: u64, n: usize) -> Result<LinfBoundReport> {
    if !sym.radial.is_compact() {
        return Err(LabError::Config("symbol annulus must be compact".into()));
    }
    let estimate: Vec<f64> = h_list
        .iter()
        .enumerate()
        .map(|(hi, &h)| {
            let per_trial: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let u = if t == 0 {
                        match plateau_plane_wave(sym, h, n)? {
                            Some(u) => u,
                            None => return Ok(0.0),
                        }
                    } else {
                        let mut rng = split(seed, "linf_band_bound", (hi * trials + t) as u64);
                        scale_adapted_polynomial(n, sym, h, &mut rng)?
                    };
                    let su = u.max_abs();
                    Ok(if su > 0.0 { band_filter_apply(&u, sym, h)?.max_abs() / su } else { 0.0 })
                })
                .collect::<Result<_>>()?;
            Ok(per_trial.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    let pos: Vec<f64> = estimate.iter().cloned().filter(|&v| v > 0.0).collect();
    let spread = if pos.is_empty() {
        1.0
    } else {
        pos.iter().cloned().fold(0.0, f64::max) / pos.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    Ok(LinfBoundReport { h: h_list.to_vec(), estimate, trials, n_side: n, spread })
}

/// Real plane wave `cos(2 pi k.x)` with `h xi` on the symbol plateau.
pub fn plateau_plane_wave(sym: &ConeSymbol, h: f64, n: usize) -> Result<Option<Grid2Field>> {
    let half = (n / 2) as i64 - 1;
    for a in 0..=half {
        for b in 0..=half {
            let xi = [2.0 * PI * a as f64, 2.0 * PI * b as f64];
            if sym.amplitude > 0.0 && sym.eval_scaled(&xi, h) == sym.amplitude && (a, b) != (0, 0) {
                let u = Grid2Field::from_real_fn(n, |x| (2.0 * PI * (a as f64 * x[0] + b as f64 * x[1])).cos())?;
                return Ok(Some(u));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductCheck {
    pub h: f64,
    pub residual: f64,
    /// Frequency supports of `a(h0 .)` and `b(h .)` intersect.
    pub overlap: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductSweep {
    pub h0: f64,
    pub points: Vec<ProductCheck>,
    /// `log2(r(h) / r(h/2))` for consecutive sample pairs.
    pub local_exponents: Vec<f64>,
    /// Samples whose residual sits at the round-off floor.
    pub at_floor: Vec<bool>,
}

/// Width of the spatial localizer `exp(kappa (cos 2 pi x1 + cos 2 pi x2))`
/// carried by `b`; it makes `b` a genuinely `x`-dependent symbol so the
/// product is not trivially zero.
pub const LOCALIZER_KAPPA: f64 = 3.0;
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

fn localizer(n: usize) -> Result<Grid2Field> {
    let raw = Grid2Field::from_real_fn(n, |x| (LOCALIZER_KAPPA * ((2.0 * PI * x[0]).cos() + (2.0 * PI * x[1]).cos())).exp())?;
    let m = raw.max_abs();
    Ok(raw.scale(1.0 / m))
}

fn supports_overlap(a: &ConeSymbol, b: &ConeSymbol, h0: f64, h: f64) -> bool {
    if a.amplitude == 0.0 || b.amplitude == 0.0 {
        return false;
    }
    let (a_lo, a_hi) = (a.radial.support_lo / h0, a.radial.support_hi / h0);
    let (b_lo, b_hi) = (b.radial.support_lo / h, b.radial.support_hi / h);
    a_lo < b_hi && b_lo < a_hi
}

/// `||Op_{h0}(a) (chi Op_h(b) f)||_inf` with the fixed localizer `chi`.
pub fn disjoint_support_product_check(a: &ConeSymbol, b: &ConeSymbol, h0: f64, h: f64, f: &Grid2Field) -> Result<ProductCheck> {
    if !(h > 0.0 && h < h0) {
        return Err(LabError::InvalidInput(format!("need 0 < h < h0, got h = {h}, h0 = {h0}")));
    }
    let chi = localizer(f.n())?;
    let inner = chi.mul(&band_filter_apply(f, b, h)?);
    let residual = band_filter_apply(&inner, a, h0)?.max_abs();
    Ok(ProductCheck { h, residual, overlap: supports_overlap(a, b, h0, h) })
}

pub fn disjoint_support_sweep(a: &ConeSymbol, b: &ConeSymbol, h0: f64, h_list: &[f64], f: &Grid2Field) -> Result<ProductSweep> {
    let points: Vec<ProductCheck> = h_list
        .par_iter()
        .map(|&h| disjoint_support_product_check(a, b, h0, h, f))
        .collect::<Result<_>>()?;
    let local_exponents = points
        .windows(2)
        .map(|w| (w[0].residual / w[1].residual).log2() / (w[0].h / w[1].h).log2())
        .collect();
    let at_floor = points.iter().map(|p| p.residual <= ROUNDOFF_FLOOR).collect();
    Ok(ProductSweep { h0, points, local_exponents, at_floor })
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlReport {
    pub h: Vec<f64>,
    pub ratio: Vec<f64>,
    pub constant: f64,
}

/// `||Op_h(sym) f||_inf / (h^s hz_norm(f, s))` across `h`; `sym` must vanish
/// on `|xi| <= 1`.
pub fn control_by_cs_check(f: &Grid2Field, sym: &ConeSymbol, s: f64, h_list: &[f64]) -> Result<ControlReport> {
    if sym.radial.support_lo < 1.0 {
        return Err(LabError::Config("symbol must vanish on |xi| <= 1".into()));
    }
    let norm = hz_norm(f, s);
    let ratio: Vec<f64> = h_list
        .iter()
        .map(|&h| Ok(band_filter_apply(f, sym, h)?.max_abs() / (h.powf(s) * norm)))
        .collect::<Result<_>>()?;
    let constant = ratio.iter().cloned().fold(0.0, f64::max);
    Ok(ControlReport { h: h_list.to_vec(), ratio, constant })
}

/// Least-squares slope of `log2 y` against `log2 x`, ignoring nonpositive values.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.log2(), b.log2()))
        .unzip();
    fit_line(&lx, &ly).map(|fit| fit.slope)
}

use serde::Serialize;

use super::section::{line_angle, Section};
use crate::error::{LabError, Result};
use crate::lp_calculus::{ConeSymbol, RadialProfile};
use crate::mat;
use crate::systems::SystemRef;

/// Smoothing of `A`'s angular factor: plateau at `0.75 * half_angle`.
pub const A_SMOOTHING: f64 = 0.25;
/// Smoothing of `B`'s angular factor. With half-angle `1.5 * theta` its
/// plateau is `1.05 * theta`, just past the support angle of `A`.
pub const B_SMOOTHING: f64 = 0.3;
/// `A` vanishes below `|h0 xi| = 4` and equals 1 above 5.
pub const A_RADIAL: (f64, f64) = (4.0, 5.0);
/// `B` equals 1 on `|h0 xi| >= 3.9`, a neighbourhood of `supp A`, and
/// vanishes below 3.6 so one backward-contracted copy of `A`'s plateau
/// frequencies up to `3.6 lambda` stays outside it.
pub const B_RADIAL: (f64, f64) = (3.6, 3.9);
/// `C_1 = {a = 1, |h0 xi| > 10}`.
pub const C1_RADIUS: f64 = 10.0;

const SAMPLE_ANGLES: usize = 16;
const SAMPLE_RADII: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct RadialPair {
    pub a_op: ConeSymbol,
    pub b_op: ConeSymbol,
    pub h0: f64,
    /// Horizon in time units, a whole number of returns.
    pub horizon: f64,
    pub returns: i64,
    /// Number of sampled covectors whose backward orbits were checked.
    pub samples_checked: usize,
}

/// Covectors on a polar grid over `supp A`: angles up to the support angle,
/// radii from the support floor to `4 x` the floor, both signs.
fn support_samples(axis: [f64; 2], half_angle: f64, r_lo: f64) -> Vec<[f64; 2]> {
    let base = axis[1].atan2(axis[0]);
    let mut out = Vec::with_capacity(2 * (2 * SAMPLE_ANGLES + 1) * SAMPLE_RADII);
    for ia in 0..=2 * SAMPLE_ANGLES {
        let phi = base - half_angle + half_angle * ia as f64 / SAMPLE_ANGLES as f64;
        for ir in 0..SAMPLE_RADII {
            let r = r_lo * 4f64.powf(ir as f64 / (SAMPLE_RADII - 1) as f64);
            for sign in [1.0, -1.0] {
                out.push([sign * r * phi.cos(), sign * r * phi.sin()]);
            }
        }
    }
    out
}

/// `A` around `E*_s` with support angle `half_angle`, `B` around the same
/// line with plateau angle `half_angle`.
///
/// Backward transport `xi -> (A^q)^T xi` rotates covectors in the cone
/// toward `E*_s` and, for cones narrower than 45 degrees about the axis of
/// an orthogonal splitting, does not shrink them; both facts are checked on
/// samples rather than assumed. With `horizon = None` the horizon is the
/// smallest number of returns taking every sample into `C_1`.
pub fn make_radial_pair(system: SystemRef<'_>, half_angle: f64, h0: f64, horizon: Option<f64>) -> Result<RadialPair> {
    let sec = Section::of(system)?;
    if !(h0 > 0.0 && h0 <= 1.0) {
        return Err(LabError::InvalidInput(format!("base scale h0 must lie in (0, 1], got {h0}")));
    }
    if !(half_angle > 0.0) {
        return Err(LabError::InvalidInput(format!("half_angle must be positive, got {half_angle}")));
    }
    let split = sec.splitting_angle();
    let b_angle = 1.5 * half_angle;
    if b_angle >= split - 1e-9 {
        return Err(LabError::Validation(format!(
            "B cone of half-angle {:.1} deg meets E*_u at {:.1} deg from E*_s; use half_angle < {:.1} deg",
            b_angle.to_degrees(),
            split.to_degrees(),
            (split / 1.5).to_degrees()
        )));
    }
    let a_op = ConeSymbol::cone(&sec.cov_s, half_angle, A_SMOOTHING, RadialProfile::tail(A_RADIAL.0, A_RADIAL.1)?)?;
    let b_op = ConeSymbol::cone(&sec.cov_s, b_angle, B_SMOOTHING, RadialProfile::tail(B_RADIAL.0, B_RADIAL.1)?)?;

    let samples = support_samples(sec.cov_s, half_angle, A_RADIAL.0);
    let in_c1 = |xi: [f64; 2]| a_op.on_plateau(&xi) && mat::norm2(xi) > C1_RADIUS;
    let returns = match horizon {
        Some(t) => sec.returns(t)?,
        None => (1..=64)
            .find(|&q| samples.iter().all(|&xi| in_c1(sec.push_covector(xi, -q))))
            .ok_or_else(|| LabError::Validation("backward saturation not reached within 64 returns".into()))?,
    };
    if returns < 0 {
        return Err(LabError::InvalidInput("horizon must be nonnegative".into()));
    }
    for &xi in &samples {
        for q in 0..=returns {
            let eta = sec.push_covector(xi, -q);
            if !b_op.on_plateau(&eta) {
                return Err(LabError::Validation(format!(
                    "covector ({:.3}, {:.3}) leaves the plateau of B after {q} backward returns; \
                     use a smaller half_angle or a larger B",
                    xi[0], xi[1]
                )));
            }
        }
    }
    Ok(RadialPair {
        a_op,
        b_op,
        h0,
        horizon: returns as f64 * sec.tau,
        returns,
        samples_checked: samples.len(),
    })
}

/// Covectors sampled over `supp a`: a polar grid over the support angle and
/// the support radii, capped at `4 x` the floor for tails.
pub(crate) fn symbol_samples(a: &ConeSymbol) -> Result<Vec<[f64; 2]>> {
    let (lo, hi) = a.support();
    let r_lo = lo.max(1e-3);
    let r_hi = if hi.is_finite() { hi } else { 4.0 * r_lo };
    let (base, width) = match &a.direction {
        Some(d) if d.len() == 2 => (d[1].atan2(d[0]), a.half_angle),
        Some(_) => return Err(LabError::InvalidInput("planar experiments need 2D symbols".into())),
        None => (0.0, std::f64::consts::FRAC_PI_2),
    };
    let mut out = Vec::new();
    for ia in 0..=2 * SAMPLE_ANGLES {
        let phi = base - width + width * ia as f64 / SAMPLE_ANGLES as f64;
        for ir in 0..SAMPLE_RADII {
            let r = r_lo * (r_hi / r_lo).powf(ir as f64 / (SAMPLE_RADII - 1) as f64);
            for sign in [1.0, -1.0] {
                let xi = [sign * r * phi.cos(), sign * r * phi.sin()];
                if a.eval(&xi) > 0.0 {
                    out.push(xi);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(LabError::InvalidInput("symbol A has empty sampled support".into()));
    }
    Ok(out)
}

/// Checks `b > 0` on `Phi_q(supp A)` for `q = 0..=T` and `d > 0` on
/// `Phi_T(supp A)`, with `Phi_q xi = (A^{-q})^T xi`.
pub fn check_propagation_cover(system: SystemRef<'_>, a: &ConeSymbol, b: &ConeSymbol, d: &ConeSymbol, t: f64) -> Result<usize> {
    let sec = Section::of(system)?;
    let q = sec.returns(t)?;
    if q < 0 {
        return Err(LabError::InvalidInput("propagation time must be nonnegative".into()));
    }
    let samples = symbol_samples(a)?;
    for &xi in &samples {
        for i in 0..=q {
            let eta = sec.push_covector(xi, i);
            if q > 0 && b.eval(&eta) <= 0.0 {
                return Err(LabError::Validation(format!(
                    "B vanishes at ({:.3}, {:.3}) on the trajectory after {i} returns",
                    eta[0], eta[1]
                )));
            }
            if i == q && d.eval(&eta) <= 0.0 {
                return Err(LabError::Validation(format!(
                    "D is not elliptic on the time-{t} pushforward of supp A: vanishes at ({:.3}, {:.3})",
                    eta[0], eta[1]
                )));
            }
        }
    }
    Ok(samples.len())
}

/// Cone symbol whose plateau contains `Phi_T(supp A)` on samples, with a
/// 10% angular and radial margin. The axis is the image of `A`'s axis.
pub fn pushforward_cover(system: SystemRef<'_>, a: &ConeSymbol, t: f64) -> Result<ConeSymbol> {
    let sec = Section::of(system)?;
    let q = sec.returns(t)?;
    let pushed: Vec<[f64; 2]> = symbol_samples(a)?.into_iter().map(|xi| sec.push_covector(xi, q)).collect();
    let axis = match &a.direction {
        Some(d) => mat::normalize(sec.push_covector([d[0], d[1]], q)),
        None => return Ok(ConeSymbol::isotropic(cover_radial(&pushed, is_tail(a))?)),
    };
    let spread = pushed.iter().map(|&xi| line_angle(xi, axis)).fold(0.0f64, f64::max);
    let smoothing = 0.25;
    let half_angle = ((1.1 * spread).max(0.05) / (1.0 - smoothing)).min(std::f64::consts::FRAC_PI_2);
    ConeSymbol::cone(&axis, half_angle, smoothing, cover_radial(&pushed, is_tail(a))?)
}

/// Isotropic annulus whose plateau contains every `Phi_q(supp A)`, `q = 0..=T`.
pub fn trajectory_cover(system: SystemRef<'_>, a: &ConeSymbol, t: f64) -> Result<ConeSymbol> {
    let sec = Section::of(system)?;
    let q = sec.returns(t)?;
    let samples = symbol_samples(a)?;
    let all: Vec<[f64; 2]> = (0..=q.max(0)).flat_map(|i| samples.iter().map(move |&xi| (xi, i))).map(|(xi, i)| sec.push_covector(xi, i)).collect();
    Ok(ConeSymbol::isotropic(cover_radial(&all, is_tail(a))?))
}

fn is_tail(a: &ConeSymbol) -> bool {
    !a.support().1.is_finite()
}

/// Radial plateau over the sampled radii with a 10% margin; a tail when the
/// source symbol is one, since its samples stop at a finite radius.
fn cover_radial(points: &[[f64; 2]], tail: bool) -> Result<RadialProfile> {
    let (lo, hi) = points.iter().map(|&p| mat::norm2(p)).fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r), b.max(r)));
    let (p_lo, p_hi) = (lo / 1.1, hi * 1.1);
    if tail {
        return RadialProfile::tail(p_lo / 1.25, p_lo);
    }
    RadialProfile::annulus(p_lo / 1.25, p_lo, p_hi, p_hi * 1.25)
}

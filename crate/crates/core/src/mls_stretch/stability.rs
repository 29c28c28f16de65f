use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::cohomology::livsic_solve;
use crate::error::{LabError, Result};
use crate::fft::{bin, freq};
use crate::lp_calculus::Grid2Field;
use crate::mat::{apply_i, inverse_i, transpose_i, Mat2i};
use crate::orbits::{enumerate_periodic_orbits, OrbitSet, DEFAULT_ORBIT_BUDGET};
use crate::rng::split;
use crate::systems::AnosovMap;

/// Split of a band-limited `F` into `(w o A - w) + R`, where `R` carries the
/// mean and, for each transpose orbit of frequencies, the orbit sum of `F^`
/// placed on one representative frequency.
#[derive(Clone, Debug)]
pub struct CoboundarySplit {
    /// Coboundary-free representative `R`.
    pub residual: Grid2Field,
    /// Transfer function `w`.
    pub transfer: Grid2Field,
    /// `max |F - (w o A - w) - R|` on the lattice.
    pub reconstruction_error: f64,
}

fn norm_sq(k: [i64; 2]) -> i64 {
    k[0] * k[0] + k[1] * k[1]
}

fn in_box(k: [i64; 2], n: usize) -> bool {
    let h = (n / 2) as i64;
    k[0].abs() < h && k[1].abs() < h
}

/// Sign-normalized form of `k`, identical for `k` and `-k`.
fn sign_key(k: [i64; 2]) -> [i64; 2] {
    if k[0] < 0 || (k[0] == 0 && k[1] < 0) {
        [-k[0], -k[1]]
    } else {
        k
    }
}

/// Representative of the transpose orbit of `k` among its in-box elements:
/// least Euclidean norm, ties broken by the sign-normalized form, so that
/// the representative of `-k` is minus that of `k` and real fields stay real.
fn representative(b: &Mat2i, b_inv: &Mat2i, k: [i64; 2], n: usize) -> [i64; 2] {
    let limit = (n * n) as i64;
    let better = |c: [i64; 2], best: [i64; 2]| {
        let (nc, nb) = (norm_sq(c), norm_sq(best));
        nc < nb || (nc == nb && sign_key(c) < sign_key(best))
    };
    let mut best = k;
    for m in [b, b_inv] {
        let mut cur = k;
        let mut prev = norm_sq(cur);
        loop {
            cur = apply_i(m, cur);
            let r = norm_sq(cur);
            // Norms along a hyperbolic orbit are eventually increasing;
            // past `n` in norm the orbit has left the box for good.
            if r > limit && r > prev {
                break;
            }
            if in_box(cur, n) && better(cur, best) {
                best = cur;
            }
            prev = r;
        }
    }
    best
}

/// Coboundary split over the base map `x -> Ax`.
pub fn coboundary_split(matrix: Mat2i, f: &Grid2Field) -> Result<CoboundarySplit> {
    let n = f.n();
    let c = f.coeffs();
    let b = transpose_i(&matrix);
    let b_inv = inverse_i(&b);
    let mut rc = vec![Complex64::default(); n * n];
    rc[0] = c[0];
    for idx in 1..n * n {
        let k = [freq(idx / n, n), freq(idx % n, n)];
        if !in_box(k, n) {
            // Nyquist rows of band-limited data carry nothing; keep them
            // in the residual rather than guess their orbit.
            rc[idx] += c[idx];
            continue;
        }
        let rep = representative(&b, &b_inv, k, n);
        rc[bin(rep[0], n) * n + bin(rep[1], n)] += c[idx];
    }
    let residual = Grid2Field::from_coeffs(n, rc)?.real_part();
    let zero_sum = f.sub(&residual);
    let sol = livsic_solve(matrix, &zero_sum, n as f64)?;
    let cob = sol.u.compose_linear(matrix).sub(&sol.u);
    let reconstruction_error = f.sub(&cob).sub(&residual).max_abs();
    Ok(CoboundarySplit { residual, transfer: sol.u, reconstruction_error })
}

/// `max_gamma |∫_{gamma_{r0}} (a - 1)| / L_{r0}(gamma)` for `a = (r0 + dr) / r0`,
/// i.e. `max_gamma |sum dr(x_i)| / sum r0(x_i)`: a lower bound for the sup
/// norm of every `a - 1 + Xu`. For constant `r0` it equals the base-map
/// quotient seminorm of `a - 1`.
pub fn stretch_seminorm_lower(r0: &Grid2Field, dr: &Grid2Field, orbits: &OrbitSet) -> f64 {
    orbits
        .orbits
        .par_iter()
        .map(|o| {
            let (num, den) = o.points.iter().fold((0.0, 0.0), |(s, l), &x| (s + dr.eval_re(x), l + r0.eval_re(x)));
            (num / den).abs()
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityRow {
    pub sample: usize,
    pub s_lower: f64,
    /// Sup norm of the coboundary-free representative of `dr`.
    pub residual_norm: f64,
    pub reconstruction_error: f64,
    pub ratio: Option<f64>,
    /// Why the sample was excluded, when it was.
    pub flag: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    /// Largest finite ratio: the empirical stability constant.
    pub constant: Option<f64>,
    pub max_period: usize,
    pub nu: f64,
    pub skipped: usize,
    pub flagged: usize,
}

impl StabilityReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sample,s_lower,residual_norm,ratio,flag\n");
        for r in &self.rows {
            let ratio = r.ratio.map(|v| format!("{v:.17e}")).unwrap_or_default();
            s.push_str(&format!(
                "{},{:.17e},{:.17e},{},{}\n",
                r.sample,
                r.s_lower,
                r.residual_norm,
                ratio,
                r.flag.as_deref().unwrap_or("")
            ));
        }
        s
    }
}

/// Both sides below this, relative to `max(1, |dr|)`, mark a coboundary.
pub const COBOUNDARY_TOL: f64 = 1e-11;

/// Compares the coboundary-free size of each roof perturbation with the
/// orbit lower bound on the quotient seminorm of its stretch.
///
/// `nu` is recorded only: the sup norm bounds every Hölder quotient norm
/// from below, so the lower bound serves any `nu >= 0`.
pub fn stability_experiment(base: &AnosovMap, r0: &Grid2Field, family: &[Grid2Field], max_period: usize, nu: f64) -> Result<StabilityReport> {
    if !base.is_linear() {
        return Err(LabError::InvalidInput("stability experiment needs a linear base".into()));
    }
    let r0 = r0.real_part();
    if !(r0.min_re() > 0.0) {
        return Err(LabError::InvalidInput(format!("r0 must be strictly positive, min is {}", r0.min_re())));
    }
    if !(nu >= 0.0) {
        return Err(LabError::InvalidInput(format!("nu must be nonnegative, got {nu}")));
    }
    let orbits = enumerate_periodic_orbits(base, max_period, DEFAULT_ORBIT_BUDGET)?;
    let rows: Vec<StabilityRow> = family
        .par_iter()
        .enumerate()
        .map(|(sample, dr)| stability_row(base.matrix(), &r0, dr, &orbits, sample))
        .collect();
    let constant = rows.iter().filter_map(|r| r.ratio).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    let skipped = rows.iter().filter(|r| r.ratio.is_none() && r.flag.as_deref() == Some("coboundary")).count();
    let flagged = rows.iter().filter(|r| r.ratio.is_none()).count() - skipped;
    Ok(StabilityReport { rows, constant, max_period, nu, skipped, flagged })
}

fn stability_row(matrix: Mat2i, r0: &Grid2Field, dr: &Grid2Field, orbits: &OrbitSet, sample: usize) -> StabilityRow {
    let flagged = |flag: String| StabilityRow {
        sample,
        s_lower: f64::NAN,
        residual_norm: f64::NAN,
        reconstruction_error: f64::NAN,
        ratio: None,
        flag: Some(flag),
    };
    if dr.n() != r0.n() {
        return flagged(format!("grid {} differs from the roof grid {}", dr.n(), r0.n()));
    }
    let dr = dr.real_part();
    if !(r0.add(&dr).min_re() > 0.0) {
        return flagged("perturbed roof is not positive".into());
    }
    let split = match coboundary_split(matrix, &dr) {
        Ok(s) => s,
        Err(e) => return flagged(format!("livsic failure: {e}")),
    };
    let s_lower = stretch_seminorm_lower(r0, &dr, orbits);
    let residual_norm = split.residual.max_abs();
    let tol = COBOUNDARY_TOL * dr.max_abs().max(1.0);
    let (ratio, flag) = if residual_norm <= tol && s_lower <= tol {
        (None, Some("coboundary".to_string()))
    } else if s_lower <= tol {
        (None, Some("orbit bound vanishes on a non-coboundary; raise max_period".to_string()))
    } else {
        (Some(residual_norm / s_lower), None)
    };
    StabilityRow { sample, s_lower, residual_norm, reconstruction_error: split.reconstruction_error, ratio, flag }
}

/// Roof perturbations `amplitude (g + w o A - w)` with random low-mode `g`
/// and `w`, every third sample a pure coboundary.
pub fn mixed_perturbation_family(matrix: Mat2i, n: usize, count: usize, amplitude: f64, seed: u64) -> Result<Vec<Grid2Field>> {
    (0..count)
        .map(|i| {
            let mut rng = split(seed, "mls-stability", i as u64);
            let mut random_field = |max_mode: i64| -> Result<Grid2Field> {
                let mut modes = Vec::new();
                for k0 in -max_mode..=max_mode {
                    for k1 in 0..=max_mode {
                        if k1 == 0 && k0 <= 0 {
                            continue;
                        }
                        let decay = 1.0 / (1.0 + (k0 * k0 + k1 * k1) as f64);
                        let amp: f64 = rng.gen_range(-1.0..1.0) * decay;
                        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                        let c = Complex64::from_polar(0.5 * amp, phase);
                        modes.push(([k0, k1], c));
                        modes.push(([-k0, -k1], c.conj()));
                    }
                }
                Grid2Field::from_modes(n, &modes)
            };
            let w = random_field(2)?;
            let cob = w.compose_linear(matrix).sub(&w);
            let field = if i % 3 == 2 { cob } else { random_field(2)?.add(&cob) };
            Ok(field.scale(amplitude).real_part())
        })
        .collect()
}

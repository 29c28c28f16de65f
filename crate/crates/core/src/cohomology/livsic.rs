use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::fft::{bin, freq};
use crate::lp_calculus::Grid2Field;
use crate::mat::{apply_i, inverse_i, transpose_i, Mat2i};
use crate::orbits::{birkhoff_sum, xray, Observable, OrbitSet};

/// Weight entering the twisted transport.
#[derive(Clone, Debug)]
pub enum CocycleWeight {
    /// Scalar potential `v`: the derivation `X - v`, or the transfer `u -> e^{-v} u o A`.
    Potential(Grid2Field),
    /// U(1) phase `theta`: the transfer `u -> e^{i theta} u o A`.
    Phase(Grid2Field),
}

impl CocycleWeight {
    pub fn field(&self) -> &Grid2Field {
        match self {
            CocycleWeight::Potential(v) | CocycleWeight::Phase(v) => v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let im = self.field().max_im_abs();
        if im > 1e-12 {
            return Err(LabError::InvalidInput(format!("weight must be real (imaginary part {im:e})")));
        }
        Ok(())
    }
}

pub const MEAN_TOL: f64 = 1e-12;
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct LivsicSolution {
    pub u: Grid2Field,
    /// `max |u(Ax) - u(x) - F(x)|` over the lattice, where `x -> Ax`
    /// permutes lattice points so the check is exact.
    pub residual: f64,
    /// `max |u_fwd - u_bwd|` over coefficients when the backward sum was
    /// also evaluated.
    pub backward_discrepancy: Option<f64>,
}

fn in_box(k: [i64; 2], n: usize) -> bool {
    let h = (n / 2) as i64;
    k[0].abs() < h && k[1].abs() < h
}

fn norm2(k: [i64; 2]) -> f64 {
    ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt()
}

/// `sum_{j >= j0} c(M^j k)` along a hyperbolic orbit, stopping once the
/// orbit has left the ball `|k| <= k_max` for good. The Euclidean norm
/// along a hyperbolic orbit is convex in `j`, so leaving while growing is
/// final.
fn orbit_sum(coeffs: &[Complex64], n: usize, m: &Mat2i, k: [i64; 2], j0: usize, k_max: f64) -> Complex64 {
    let mut acc = Complex64::default();
    let mut cur = k;
    for _ in 0..j0 {
        cur = apply_i(m, cur);
    }
    let mut prev = f64::INFINITY;
    loop {
        let r = norm2(cur);
        if r > k_max && r > prev {
            break;
        }
        if in_box(cur, n) {
            acc += coeffs[bin(cur[0], n) * n + bin(cur[1], n)];
        }
        prev = r;
        cur = apply_i(m, cur);
    }
    acc
}

/// Solves `u o A - u = F` for band-limited `F` by summing Fourier
/// coefficients along transpose orbits: `u^(k) = sum_{j >= 1} F^(B^j k)`
/// with `B = A^T`. Orbits leave every ball, so the sum is finite.
pub fn livsic_solve(matrix: Mat2i, f: &Grid2Field, k_max: f64) -> Result<LivsicSolution> {
    livsic_solve_with(matrix, f, k_max, false)
}

/// As `livsic_solve`, also evaluating `u^(k) = -sum_{j >= 0} F^(B^{-j} k)`
/// and recording the largest coefficient discrepancy.
pub fn livsic_solve_checked(matrix: Mat2i, f: &Grid2Field, k_max: f64) -> Result<LivsicSolution> {
    livsic_solve_with(matrix, f, k_max, true)
}

fn livsic_solve_with(matrix: Mat2i, f: &Grid2Field, k_max: f64, backward: bool) -> Result<LivsicSolution> {
    let n = f.n();
    let c = f.coeffs();
    if c[0].norm() > MEAN_TOL {
        return Err(LabError::Obstruction(format!("F has mean {:.3e}; the fixed-point sum cannot vanish", c[0].norm())));
    }
    if !(k_max > 0.0) {
        return Err(LabError::InvalidInput("k_max must be positive".into()));
    }
    let b = transpose_i(&matrix);
    let b_inv = inverse_i(&b);
    let forward: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let k = [freq(idx / n, n), freq(idx % n, n)];
            if k == [0, 0] || !in_box(k, n) {
                Complex64::default()
            } else {
                orbit_sum(c, n, &b, k, 1, k_max)
            }
        })
        .collect();
    let backward_discrepancy = backward.then(|| {
        (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let k = [freq(idx / n, n), freq(idx % n, n)];
                if k == [0, 0] || !in_box(k, n) {
                    return 0.0;
                }
                (forward[idx] + orbit_sum(c, n, &b_inv, k, 0, k_max)).norm()
            })
            .reduce(|| 0.0, f64::max)
    });
    let u = Grid2Field::from_coeffs(n, forward)?;
    let residual = u.compose_linear(matrix).sub(&u).sub(f).max_abs();
    if residual > RESIDUAL_TOL * f.max_abs().max(1.0) {
        return Err(LabError::Obstruction(format!(
            "transfer residual {residual:.3e}: F has nonzero periodic-orbit sums or is not band-limited"
        )));
    }
    Ok(LivsicSolution { u, residual, backward_discrepancy })
}

/// Frequencies `k` lying strictly inside a transpose-orbit segment of
/// `supp F^`: some `B^j k` with `j >= 1` and some `B^j k` with `j <= 0` hit
/// the support. Solutions of `u o A - u = F` are supported there.
pub fn predicted_support(matrix: Mat2i, f: &Grid2Field, k_max: f64, tol: f64) -> Vec<bool> {
    let n = f.n();
    let c = f.coeffs();
    let b = transpose_i(&matrix);
    let b_inv = inverse_i(&b);
    let hit = |m: &Mat2i, k: [i64; 2], j0: usize| -> bool {
        let mut cur = k;
        for _ in 0..j0 {
            cur = apply_i(m, cur);
        }
        let mut prev = f64::INFINITY;
        loop {
            let r = norm2(cur);
            if r > k_max && r > prev {
                return false;
            }
            if in_box(cur, n) && c[bin(cur[0], n) * n + bin(cur[1], n)].norm() > tol {
                return true;
            }
            prev = r;
            cur = apply_i(m, cur);
        }
    };
    (0..n * n)
        .map(|idx| {
            let k = [freq(idx / n, n), freq(idx % n, n)];
            k != [0, 0] && in_box(k, n) && hit(&b, k, 1) && hit(&b_inv, k, 0)
        })
        .collect()
}

/// `max |sum_{x in gamma} F(x)|` over the orbits: zero for coboundaries.
pub fn obstruction_check(f: &Grid2Field, orbits: &OrbitSet) -> f64 {
    orbits.orbits.par_iter().map(|o| birkhoff_sum(f, o).abs()).reduce(|| 0.0, f64::max)
}

/// `max |I f(gamma)|` over the orbits, a lower bound for `inf_u |f + Xu|_inf`
/// because orbit averages ignore coboundaries and never exceed the sup norm.
pub fn quotient_seminorm_lower(f: &Grid2Field, orbits: &OrbitSet) -> f64 {
    orbits
        .orbits
        .par_iter()
        .map(|o| xray(Observable::Map(f), o).map(f64::abs).unwrap_or(0.0))
        .reduce(|| 0.0, f64::max)
}

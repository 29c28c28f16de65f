use serde::Serialize;

use crate::error::{LabError, Result};
use crate::mat::{self, Mat2};

use super::map::{wrap, AnosovMap};

/// Conjugacy `H = id + h` with `H o A = f o H`, sampled on a finite
/// `A`-invariant point set.
#[derive(Clone, Debug, Serialize)]
pub struct ConjugacyField {
    pub points: Vec<[f64; 2]>,
    pub h: Vec<[f64; 2]>,
    /// `max ||H(Ax) - f(H(x))||` modulo `Z^2`.
    pub defect: f64,
    pub iterations: usize,
    pub h_sup: f64,
}

/// Terms kept in the geometric series; `lambda^{-80}` is far below round-off.
const SERIES_TERMS: usize = 80;
const MAX_ITER: usize = 500;

/// Lattice points of the `n x n` grid with the exact action of `A`.
pub fn lattice_orbit_data(base: &AnosovMap, n: usize) -> (Vec<[f64; 2]>, Vec<usize>) {
    let a = base.matrix();
    let ni = n as i64;
    let points = (0..n * n).map(|i| [(i / n) as f64 / n as f64, (i % n) as f64 / n as f64]).collect();
    let next = (0..n * n)
        .map(|i| {
            let (p, q) = ((i / n) as i64, (i % n) as i64);
            let r = (a[0][0] * p + a[0][1] * q).rem_euclid(ni);
            let s = (a[1][0] * p + a[1][1] * q).rem_euclid(ni);
            (r * ni + s) as usize
        })
        .collect();
    (points, next)
}

/// Solves on the `n x n` lattice.
pub fn conjugacy_solve(base: &AnosovMap, perturbed: &AnosovMap, tol: f64, n: usize) -> Result<ConjugacyField> {
    let (points, next) = lattice_orbit_data(base, n);
    conjugacy_solve_on(base, perturbed, tol, points, next)
}

/// Fixed-point iteration `h = L^{-1}(eps p(x + h))`, where `L h = h o A - A h`
/// is inverted on the unstable component by the forward series
/// `h_u = -sum mu_u^{-n-1} q_u(A^n x)` and on the stable component by the
/// backward series `h_s = sum mu_s^n q_s(A^{-n-1} x)`. `next[i]` indexes
/// `A points[i]`.
pub fn conjugacy_solve_on(
    base: &AnosovMap,
    perturbed: &AnosovMap,
    tol: f64,
    points: Vec<[f64; 2]>,
    next: Vec<usize>,
) -> Result<ConjugacyField> {
    if !base.is_linear() || base.matrix() != perturbed.matrix() {
        return Err(LabError::InvalidInput("base must be the linear part of the perturbed map".into()));
    }
    let m = points.len();
    if next.len() != m || next.iter().any(|&j| j >= m) {
        return Err(LabError::InvalidInput("successor table does not match the point set".into()));
    }
    let mut prev = vec![usize::MAX; m];
    for (i, &j) in next.iter().enumerate() {
        prev[j] = i;
    }
    if prev.contains(&usize::MAX) {
        return Err(LabError::InvalidInput("point set is not A-invariant".into()));
    }
    let (eu, es) = (base.e_u(), base.e_s());
    // Rows of the inverse frame give the (u, s) coordinates of a vector.
    let frame: Mat2 = [[eu[0], es[0]], [eu[1], es[1]]];
    let coords = mat::inverse(&frame);
    let (mu_u, mu_s) = (base.mu_u(), base.mu_s());
    let defect_of = |h: &[[f64; 2]]| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..m {
            let hx = [points[i][0] + h[i][0], points[i][1] + h[i][1]];
            let fh = perturbed.apply_lift(hx);
            let j = next[i];
            let target = [points[j][0] + h[j][0], points[j][1] + h[j][1]];
            worst = worst.max(wrap(target[0] - fh[0]).abs()).max(wrap(target[1] - fh[1]).abs());
        }
        worst
    };
    let mut h = vec![[0.0; 2]; m];
    let mut defect = defect_of(&h);
    let mut rises = 0;
    let mut iterations = 0;
    while defect > tol {
        if iterations >= MAX_ITER {
            return Err(LabError::NoConvergence { what: "conjugacy iteration".into(), residual: defect });
        }
        iterations += 1;
        let q: Vec<[f64; 2]> = (0..m)
            .map(|i| {
                let y = [points[i][0] + h[i][0], points[i][1] + h[i][1]];
                let fy = perturbed.apply_lift(y);
                let ay = mat::apply(&mat::to_f64(&base.matrix()), y);
                let d = [fy[0] - ay[0], fy[1] - ay[1]];
                mat::apply(&coords, d)
            })
            .collect();
        let mut new_h = vec![[0.0; 2]; m];
        for i in 0..m {
            let (mut hu, mut hs) = (0.0, 0.0);
            let (mut fwd, mut bwd) = (i, prev[i]);
            let (mut cu, mut cs) = (1.0 / mu_u, 1.0);
            for _ in 0..SERIES_TERMS {
                hu -= cu * q[fwd][0];
                hs += cs * q[bwd][1];
                fwd = next[fwd];
                bwd = prev[bwd];
                cu /= mu_u;
                cs *= mu_s;
            }
            new_h[i] = [hu * eu[0] + hs * es[0], hu * eu[1] + hs * es[1]];
        }
        h = new_h;
        let d = defect_of(&h);
        rises = if d > defect { rises + 1 } else { 0 };
        if rises >= 5 {
            return Err(LabError::NoConvergence { what: "conjugacy iteration (diverging)".into(), residual: d });
        }
        defect = d;
    }
    let h_sup = h.iter().fold(0.0f64, |a, v| a.max(v[0].abs()).max(v[1].abs()));
    Ok(ConjugacyField { points, h, defect, iterations, h_sup })
}

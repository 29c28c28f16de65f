use serde::Serialize;

use crate::error::{LabError, Result};
use crate::mat::{self, Mat2};

use super::flow::AnosovFlow;
use super::map::AnosovMap;

/// Invariant splitting at a point. For flows, vectors carry a third (time)
/// component in suspension coordinates `(x, t)`; `e0 = (0, 0, 1)` is the
/// generator.
#[derive(Clone, Debug, Serialize)]
pub struct SplittingFrame {
    pub x: [f64; 2],
    pub e_u: Vec<f64>,
    pub e_s: Vec<f64>,
    /// `E*_u` annihilates `E_u` (and `X`); `E*_s` annihilates `E_s` (and `X`).
    pub cov_u: Vec<f64>,
    pub cov_s: Vec<f64>,
    /// `E*_0` annihilates `E_u + E_s` (flows only).
    pub cov_0: Option<Vec<f64>>,
    /// Angle change between horizons `n_iter - 1` and `n_iter`.
    pub residual: f64,
}

#[derive(Clone, Copy)]
pub enum SystemRef<'a> {
    Map(&'a AnosovMap),
    Flow(&'a AnosovFlow),
}

pub const SPLITTING_TOL: f64 = 1e-10;

fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

fn angle_between_lines(a: [f64; 2], b: [f64; 2]) -> f64 {
    // atan2 keeps full precision for tiny angles, unlike acos of the cosine.
    (a[0] * b[1] - a[1] * b[0]).abs().atan2(mat::dot(a, b).abs())
}

fn sign_fix(v: [f64; 2]) -> [f64; 2] {
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) { [-v[0], -v[1]] } else { v }
}

/// Base splitting and per-step stretch factors along the orbit segments
/// used by the flow correction.
struct BaseSplit {
    e_u: [f64; 2],
    e_s: [f64; 2],
    residual: f64,
    backward: Vec<[f64; 2]>,
    forward: Vec<[f64; 2]>,
}

fn push_unstable(map: &AnosovMap, backward: &[[f64; 2]], start: [f64; 2], from: usize) -> [f64; 2] {
    // backward[k] = f^{-k} x; push from f^{-from} x to x.
    let mut v = start;
    for k in (1..=from).rev() {
        v = mat::normalize(mat::apply(&map.derivative(backward[k]), v));
    }
    v
}

fn pull_stable(map: &AnosovMap, forward: &[[f64; 2]], start: [f64; 2], from: usize) -> [f64; 2] {
    let mut v = start;
    for k in (0..from).rev() {
        v = mat::normalize(mat::apply(&mat::inverse(&map.derivative(forward[k])), v));
    }
    v
}

fn base_split(map: &AnosovMap, x: [f64; 2], n_iter: usize) -> Result<BaseSplit> {
    if n_iter < 1 {
        return Err(LabError::InvalidInput("n_iter must be >= 1".into()));
    }
    let mut backward = vec![x];
    let mut forward = vec![x];
    for _ in 0..n_iter {
        let prev = *backward.last().expect("nonempty");
        backward.push(map.inverse_apply(prev)?);
        let next = *forward.last().expect("nonempty");
        forward.push(map.apply(next));
    }
    if map.is_linear() {
        return Ok(BaseSplit { e_u: map.e_u(), e_s: map.e_s(), residual: 0.0, backward, forward });
    }
    let u_n = push_unstable(map, &backward, map.e_u(), n_iter);
    let u_m = push_unstable(map, &backward, map.e_u(), n_iter - 1);
    let s_n = pull_stable(map, &forward, map.e_s(), n_iter);
    let s_m = pull_stable(map, &forward, map.e_s(), n_iter - 1);
    let residual = angle_between_lines(u_n, u_m).max(angle_between_lines(s_n, s_m));
    Ok(BaseSplit { e_u: sign_fix(u_n), e_s: sign_fix(s_n), residual, backward, forward })
}

/// `E_u` by forward power iteration along the backward orbit, `E_s` by
/// backward iteration along the forward orbit.
pub fn splitting_at(system: SystemRef<'_>, x: [f64; 2], n_iter: usize) -> Result<SplittingFrame> {
    match system {
        SystemRef::Map(map) => {
            let b = base_split(map, x, n_iter)?;
            check_residual(b.residual)?;
            Ok(SplittingFrame {
                x,
                e_u: b.e_u.to_vec(),
                e_s: b.e_s.to_vec(),
                cov_u: perp(b.e_u).to_vec(),
                cov_s: perp(b.e_s).to_vec(),
                cov_0: None,
                residual: b.residual,
            })
        }
        SystemRef::Flow(flow) => flow_split(flow, x, n_iter),
    }
}

fn check_residual(r: f64) -> Result<()> {
    if r > SPLITTING_TOL {
        Err(LabError::NoConvergence { what: "splitting power iteration".into(), residual: r })
    } else {
        Ok(())
    }
}

/// Time components of the flow's strong bundles at a point of the zero
/// section. With `(w, s) -> (Df w, s - dr(w))` as the return derivative,
/// `tau_u(x) = -sum_{k>=1} dr(v_u)(x_{-k}) / prod_{i<=k} c_u(x_{-i})` and
/// `tau_s(x) = sum_{k>=0} dr(v_s)(x_k) prod_{i<k} c_s(x_i)`.
fn flow_split(flow: &AnosovFlow, x: [f64; 2], n_iter: usize) -> Result<SplittingFrame> {
    let map = flow.base();
    let b = base_split(map, x, n_iter)?;
    check_residual(b.residual)?;
    let (mut tau_u, mut tau_s) = (0.0, 0.0);
    if flow.roof_constant().is_none() {
        // Unit unstable vectors v[k] at x_{-k}, pushed forward from the deepest point.
        let mut v = vec![[0.0; 2]; n_iter + 1];
        v[n_iter] = map.e_u();
        for k in (0..n_iter).rev() {
            v[k] = mat::normalize(mat::apply(&map.derivative(b.backward[k + 1]), v[k + 1]));
        }
        let sign = if mat::dot(v[0], b.e_u) < 0.0 { -1.0 } else { 1.0 };
        let mut stretch = 1.0;
        for k in 1..=n_iter {
            let y = b.backward[k];
            stretch *= mat::norm2(mat::apply(&map.derivative(y), v[k]));
            tau_u -= sign * mat::dot(flow.roof_gradient_at(y), v[k]) / stretch;
        }
        // Unit stable vectors w[k] at x_k, pulled back from the farthest point.
        let mut w = vec![[0.0; 2]; n_iter + 1];
        w[n_iter] = map.e_s();
        for k in (0..n_iter).rev() {
            w[k] = mat::normalize(mat::apply(&mat::inverse(&map.derivative(b.forward[k])), w[k + 1]));
        }
        let sign = if mat::dot(w[0], b.e_s) < 0.0 { -1.0 } else { 1.0 };
        let mut shrink = 1.0;
        for k in 0..n_iter {
            let y = b.forward[k];
            tau_s += sign * mat::dot(flow.roof_gradient_at(y), w[k]) * shrink;
            shrink *= mat::norm2(mat::apply(&map.derivative(y), w[k]));
        }
    }
    let e_u = [b.e_u[0], b.e_u[1], tau_u];
    let e_s = [b.e_s[0], b.e_s[1], tau_s];
    // E*_0 = (alpha, 1) with alpha . v = -tau on both bundles.
    let m: Mat2 = [[b.e_u[0], b.e_u[1]], [b.e_s[0], b.e_s[1]]];
    let alpha = mat::apply(&mat::inverse(&m), [-tau_u, -tau_s]);
    let pu = perp(b.e_u);
    let ps = perp(b.e_s);
    Ok(SplittingFrame {
        x,
        e_u: e_u.to_vec(),
        e_s: e_s.to_vec(),
        cov_u: vec![pu[0], pu[1], 0.0],
        cov_s: vec![ps[0], ps[1], 0.0],
        cov_0: Some(vec![alpha[0], alpha[1], 1.0]),
        residual: b.residual,
    })
}

/// Projector onto `E_u` along `E_s` at `x`.
pub fn unstable_projector(map: &AnosovMap, x: [f64; 2], n_iter: usize) -> Result<Mat2> {
    let b = base_split(map, x, n_iter)?;
    check_residual(b.residual)?;
    let cov = perp(b.e_s);
    let scale = mat::dot(cov, b.e_u);
    Ok([
        [b.e_u[0] * cov[0] / scale, b.e_u[0] * cov[1] / scale],
        [b.e_u[1] * cov[0] / scale, b.e_u[1] * cov[1] / scale],
    ])
}

#[derive(Clone, Debug, Serialize)]
pub struct LieResidual {
    pub step: f64,
    pub residual: f64,
}

/// Discrete Lie-derivative residual of the unstable projector over the
/// time-one map, `max_x ||J^{-1} pi(f x) J - pi(x)||` with `J` the central
/// finite-difference Jacobian of step `step`. Exact invariance makes the
/// residual a pure measure of the finite-difference error.
pub fn projector_lie_residual(map: &AnosovMap, points: &[[f64; 2]], step: f64, n_iter: usize) -> Result<LieResidual> {
    let mut worst = 0.0f64;
    for &x in points {
        let mut j = [[0.0; 2]; 2];
        for c in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += step;
            xm[c] -= step;
            let (fp, fm) = (map.apply_lift(xp), map.apply_lift(xm));
            for r in 0..2 {
                j[r][c] = (fp[r] - fm[r]) / (2.0 * step);
            }
        }
        let pi_x = unstable_projector(map, x, n_iter)?;
        let pi_fx = unstable_projector(map, map.apply(x), n_iter)?;
        let pulled = mat::mul(&mat::inverse(&j), &mat::mul(&pi_fx, &j));
        worst = worst.max(mat::dist(&pulled, &pi_x));
    }
    Ok(LieResidual { step, residual: worst })
}

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::lp_calculus::ConeSymbol;
use crate::systems::{splitting_at, LyapunovReport, SystemRef};

/// Bound on the foliation threshold from Lyapunov data,
/// `max((l_u^max + l_s^max) / l_u^min, (l_u^max + l_s^max) / l_s^min)`,
/// capped at 2 for volume-preserving flows in dimension 3.
pub fn foliation_threshold(lyap: &LyapunovReport, volume_preserving_3d: bool) -> Result<f64> {
    if !(lyap.lambda_u_min > 0.0 && lyap.lambda_s_min > 0.0) {
        return Err(LabError::InvalidInput(format!(
            "nonpositive minimal exponent (u: {}, s: {})",
            lyap.lambda_u_min, lyap.lambda_s_min
        )));
    }
    let top = lyap.lambda_u_max + lyap.lambda_s_max;
    let bound = (top / lyap.lambda_u_min).max(top / lyap.lambda_s_min);
    Ok(if volume_preserving_3d { bound.min(2.0) } else { bound })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeRatioReport {
    pub min: f64,
    pub max: f64,
    /// `(T, min, max)` over the sample points.
    pub per_time: Vec<(usize, f64, f64)>,
    pub samples: usize,
}

type Lin = Vec<Vec<f64>>;

fn lin_mul(a: &Lin, b: &Lin) -> Lin {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

fn lin_apply(a: &Lin, v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn lin_apply_t(a: &Lin, v: &[f64]) -> Vec<f64> {
    (0..a.len()).map(|j| (0..a.len()).map(|i| a[i][j] * v[i]).sum()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn identity(n: usize) -> Lin {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// One-step derivative of the time-one return: `Df` on maps, and
/// `(w, sigma) -> (Df w, sigma - dr(w))` on suspension coordinates.
fn step_derivative(system: &SystemRef<'_>, x: [f64; 2]) -> Lin {
    match system {
        SystemRef::Map(m) => m.derivative(x).iter().map(|r| r.to_vec()).collect(),
        SystemRef::Flow(f) => {
            let d = f.base().derivative(x);
            let g = f.roof_gradient_at(x);
            vec![vec![d[0][0], d[0][1], 0.0], vec![d[1][0], d[1][1], 0.0], vec![-g[0], -g[1], 1.0]]
        }
    }
}

/// Unit covectors in the closed cone of half-angle `theta` around `axis`.
fn cone_samples(axis: &[f64], theta: f64) -> Vec<Vec<f64>> {
    let a: Vec<f64> = axis.iter().map(|v| v / norm(axis)).collect();
    if a.len() == 2 {
        let base = a[1].atan2(a[0]);
        return (0..=64).map(|k| base - theta + 2.0 * theta * k as f64 / 64.0).map(|t| vec![t.cos(), t.sin()]).collect();
    }
    // Orthonormal pair perpendicular to the axis.
    let pick = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d: f64 = pick.iter().zip(&a).map(|(p, q)| p * q).sum();
    let mut u: Vec<f64> = pick.iter().zip(&a).map(|(p, q)| p - d * q).collect();
    let nu = norm(&u);
    u.iter_mut().for_each(|v| *v /= nu);
    let w = vec![a[1] * u[2] - a[2] * u[1], a[2] * u[0] - a[0] * u[2], a[0] * u[1] - a[1] * u[0]];
    let mut out = vec![a.clone()];
    for r in 1..=8 {
        let alpha = theta * r as f64 / 8.0;
        for k in 0..24 {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / 24.0;
            out.push((0..3).map(|i| alpha.cos() * a[i] + alpha.sin() * (phi.cos() * u[i] + phi.sin() * w[i])).collect());
        }
    }
    out
}

fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().abs() / (norm(a) * norm(b));
    d.min(1.0).acos()
}

/// Ratio `Lambda(phi_{-T} x, T) / |d_x phi_{-T}|_{E^u}|` with
/// `Lambda(y, T) = sup_{xi in C} |xi| / |d_y phi_T^T xi|` for a fixed cone
/// `C` around `E*_s`, over sample points and `T = 1..=t_max` returns.
pub fn cone_expansion_equivalence_check(
    system: SystemRef<'_>,
    cone: &ConeSymbol,
    points: &[[f64; 2]],
    t_max: usize,
) -> Result<ConeRatioReport> {
    let dim = match system {
        SystemRef::Map(_) => 2,
        SystemRef::Flow(_) => 3,
    };
    let axis = cone.direction.clone().ok_or_else(|| LabError::InvalidInput("cone needs an axis".into()))?;
    if axis.len() != dim {
        return Err(LabError::InvalidInput(format!("cone axis has dimension {}, system needs {dim}", axis.len())));
    }
    if points.is_empty() || t_max == 0 {
        return Err(LabError::InvalidInput("need sample points and t_max >= 1".into()));
    }
    let base = match system {
        SystemRef::Map(m) => m,
        SystemRef::Flow(f) => f.base(),
    };
    let xis = cone_samples(&axis, cone.half_angle);
    let mut per_time: Vec<(usize, f64, f64)> = (1..=t_max).map(|t| (t, f64::INFINITY, 0.0)).collect();
    for &x in points {
        let frame = splitting_at(system, x, 40)?;
        if angle_between(&frame.cov_s, &axis) >= cone.half_angle {
            return Err(LabError::ConeViolation { x: x[0], y: x[1], reason: "cone does not contain E*_s".into() });
        }
        let excluded = match &frame.cov_0 {
            None => angle_between(&frame.cov_u, &axis) <= cone.half_angle,
            Some(c0) => {
                let cu = &frame.cov_u;
                let nrm = [cu[1] * c0[2] - cu[2] * c0[1], cu[2] * c0[0] - cu[0] * c0[2], cu[0] * c0[1] - cu[1] * c0[0]];
                let to_plane = std::f64::consts::FRAC_PI_2 - angle_between(&nrm, &axis);
                to_plane <= cone.half_angle
            }
        };
        if excluded {
            return Err(LabError::ConeViolation { x: x[0], y: x[1], reason: "cone meets E*_u + E*_0".into() });
        }
        // Walk back: y_T = f^{-T} x, D_T = d_{y_T} phi_T = D(y_1) ... D(y_T).
        let mut y = x;
        let mut d = identity(dim);
        for t in 1..=t_max {
            y = base.inverse_apply(y)?;
            d = lin_mul(&d, &step_derivative(&system, y));
            let lambda = xis.iter().map(|xi| norm(xi) / norm(&lin_apply_t(&d, xi))).fold(0.0f64, f64::max);
            // |d_x phi_{-T} e_u| = |D_T^{-1} e_u| = 1 / |D_T e'| for e' the unit unstable vector at y.
            let inv_contraction = {
                let fy = splitting_at(system, y, 40)?;
                let ey: Vec<f64> = fy.e_u.iter().map(|v| v / norm(&fy.e_u)).collect();
                1.0 / norm(&lin_apply(&d, &ey))
            };
            let r = lambda / inv_contraction;
            let slot = &mut per_time[t - 1];
            slot.1 = slot.1.min(r);
            slot.2 = slot.2.max(r);
        }
    }
    let min = per_time.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max = per_time.iter().map(|p| p.2).fold(0.0f64, f64::max);
    Ok(ConeRatioReport { min, max, per_time, samples: points.len() })
}

/// `|xi| / |d_y phi_T^T xi|` divided by `|d_x phi_{-T}|_{E^u}|` for a single
/// covector `xi` at `x`, with `y = phi_{-T} x`.
pub fn covector_ratio(system: SystemRef<'_>, x: [f64; 2], xi: &[f64], t: usize) -> Result<f64> {
    let base = match system {
        SystemRef::Map(m) => m,
        SystemRef::Flow(f) => f.base(),
    };
    let dim = xi.len();
    let mut y = x;
    let mut d = identity(dim);
    for _ in 0..t {
        y = base.inverse_apply(y)?;
        d = lin_mul(&d, &step_derivative(&system, y));
    }
    let fy = splitting_at(system, y, 40)?;
    let ey: Vec<f64> = fy.e_u.iter().map(|v| v / norm(&fy.e_u)).collect();
    Ok(norm(xi) / norm(&lin_apply_t(&d, xi)) * norm(&lin_apply(&d, &ey)))
}

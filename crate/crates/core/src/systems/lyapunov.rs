use serde::Serialize;

use crate::error::{LabError, Result};
use crate::mat;

use super::splitting::SystemRef;

#[derive(Clone, Debug, Serialize)]
pub struct LyapunovReport {
    pub lambda_u_min: f64,
    pub lambda_u_max: f64,
    /// Stable exponents reported as positive contraction rates.
    pub lambda_s_min: f64,
    pub lambda_s_max: f64,
    pub per_orbit: Vec<[f64; 2]>,
    pub horizon: usize,
    pub samples: usize,
    pub per_unit_time: bool,
    /// Set when half-horizon and full-horizon estimates differ by > 1e-2.
    pub short_horizon_warning: bool,
}

/// Exponents of one trajectory by 2x2 QR re-orthonormalization, started in
/// the linear eigenframe. Returns sums of `log R_11` and `-log R_22` at both
/// `T/2` and `T`, plus elapsed flow time.
fn qr_run(system: &SystemRef<'_>, x0: [f64; 2], horizon: usize) -> ([f64; 4], f64, f64) {
    let map = match system {
        SystemRef::Map(m) => *m,
        SystemRef::Flow(f) => f.base(),
    };
    let mut q1 = map.e_u();
    let mut x = x0;
    let (mut su, mut ss) = (0.0, 0.0);
    let mut half = [0.0; 2];
    let (mut time, mut time_half) = (0.0, 0.0);
    for step in 0..horizon {
        let m = map.derivative(x);
        if let SystemRef::Flow(f) = system {
            time += f.roof_at(x);
        } else {
            time += 1.0;
        }
        let a1 = mat::apply(&m, q1);
        let r11 = mat::norm2(a1);
        let n1 = [a1[0] / r11, a1[1] / r11];
        // R_22 = det(M) / R_11 keeps the triangular factor exact.
        let r22 = (mat::det(&m) / r11).abs();
        su += r11.ln();
        ss -= r22.ln();
        q1 = n1;
        x = map.apply(x);
        if step + 1 == horizon / 2 {
            half = [su, ss];
            time_half = time;
        }
    }
    ([half[0], half[1], su, ss], time_half, time)
}

pub fn lyapunov_data(system: SystemRef<'_>, orbit_sample: &[[f64; 2]], horizon: usize) -> Result<LyapunovReport> {
    if orbit_sample.is_empty() {
        return Err(LabError::InvalidInput("orbit sample is empty".into()));
    }
    if horizon < 2 {
        return Err(LabError::InvalidInput("horizon must be >= 2".into()));
    }
    let per_unit_time = matches!(system, SystemRef::Flow(_));
    let mut per_orbit = Vec::with_capacity(orbit_sample.len());
    let mut warn = horizon < 10;
    for &x in orbit_sample {
        let (sums, th, t) = qr_run(&system, x, horizon);
        let full = [sums[2] / t, sums[3] / t];
        let half = [sums[0] / th, sums[1] / th];
        if (full[0] - half[0]).abs() > 1e-2 || (full[1] - half[1]).abs() > 1e-2 {
            warn = true;
        }
        per_orbit.push(full);
    }
    let fold = |i: usize, f: fn(f64, f64) -> f64, init: f64| per_orbit.iter().map(|v| v[i]).fold(init, f);
    Ok(LyapunovReport {
        lambda_u_min: fold(0, f64::min, f64::INFINITY),
        lambda_u_max: fold(0, f64::max, f64::NEG_INFINITY),
        lambda_s_min: fold(1, f64::min, f64::INFINITY),
        lambda_s_max: fold(1, f64::max, f64::NEG_INFINITY),
        per_orbit,
        horizon,
        samples: orbit_sample.len(),
        per_unit_time,
        short_horizon_warning: warn,
    })
}

use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::lp_calculus::Grid2Field;
use crate::mat::Mat2i;

use super::livsic::livsic_solve;

#[derive(Clone, Debug)]
pub struct TwistedSolution {
    pub u: Grid2Field,
    pub theta: Grid2Field,
    /// `max |u(Ax) - c(x) u(x)|` on the lattice.
    pub residual: f64,
}

fn wrap_pi(a: f64) -> f64 {
    a - 2.0 * PI * ((a + PI) / (2.0 * PI)).floor()
}

/// Solves `u o A = c u` with `|c| = |u| = 1` through `u = e^{iw}`,
/// `w o A - w = theta`, where `theta` is the continuous branch of
/// `-i log c` with `theta(0) = arg c(0)`.
pub fn twisted_transport_solve(matrix: Mat2i, c: &Grid2Field, k_max: f64) -> Result<TwistedSolution> {
    let n = c.n();
    let modulus_err = c.values().iter().fold(0.0f64, |m, z| m.max((z.norm() - 1.0).abs()));
    if modulus_err > 1e-12 {
        return Err(LabError::InvalidInput(format!("|c| deviates from 1 by {modulus_err:.3e}")));
    }
    let c0 = c.value(0, 0);
    if (c0 - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(LabError::Obstruction(format!("phase at the fixed point is {:.6} rad, not 0", c0.arg())));
    }
    let arg = |i: usize, j: usize| c.value(i % n, j % n).arg();
    // Unwrap along the first column, then along every row.
    let mut theta = vec![0.0; n * n];
    let mut col = c0.arg();
    for i in 0..n {
        if i > 0 {
            col += wrap_pi(arg(i, 0) - arg(i - 1, 0));
        }
        let mut acc = col;
        theta[i * n] = acc;
        for j in 1..n {
            acc += wrap_pi(arg(i, j) - arg(i, j - 1));
            theta[i * n + j] = acc;
        }
        let row_wind = acc + wrap_pi(arg(i, 0) - arg(i, n - 1)) - col;
        if row_wind.abs() > PI {
            return Err(LabError::Obstruction(format!(
                "topologically obstructed: winding {} along the second cycle",
                (row_wind / (2.0 * PI)).round()
            )));
        }
    }
    let col_wind = col + wrap_pi(arg(0, 0) - arg(n - 1, 0)) - c0.arg();
    if col_wind.abs() > PI {
        return Err(LabError::Obstruction(format!(
            "topologically obstructed: winding {} along the first cycle",
            (col_wind / (2.0 * PI)).round()
        )));
    }
    let theta = Grid2Field::from_real_values(n, &theta)?;
    let w = livsic_solve(matrix, &theta, k_max)?.u;
    let u = w.map(|z| Complex64::from_polar(1.0, z.re));
    let residual = u.compose_linear(matrix).sub(&c.mul(&u)).max_abs();
    Ok(TwistedSolution { u, theta, residual })
}

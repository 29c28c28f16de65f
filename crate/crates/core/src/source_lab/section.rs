use rustfft::num_complex::Complex64;

use crate::cohomology::CocycleWeight;
use crate::error::{LabError, Result};
use crate::lp_calculus::Grid2Field;
use crate::mat::{self, inverse_i, transpose_i, Mat2i};
use crate::systems::{AnosovMap, SystemRef};

/// Linear return map of a system with its return time `tau` (1 for maps,
/// the constant roof for suspensions) and the constant covector splitting.
///
/// Integer-return propagators of a constant-roof suspension act on each
/// height slice separately, so everything here lives on the zero section.
#[derive(Clone, Debug)]
pub struct Section {
    pub matrix: Mat2i,
    pub tau: f64,
    pub lambda: f64,
    /// Unit covectors spanning `E*_s` (annihilates `E_s`) and `E*_u`.
    pub cov_s: [f64; 2],
    pub cov_u: [f64; 2],
    pub is_flow: bool,
}

fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

fn linear_map(map: &AnosovMap) -> Result<&AnosovMap> {
    if !map.is_linear() {
        return Err(LabError::InvalidInput("source and propagation experiments need a linear base map".into()));
    }
    Ok(map)
}

impl Section {
    pub fn of(system: SystemRef<'_>) -> Result<Section> {
        let (map, tau, is_flow) = match system {
            SystemRef::Map(m) => (linear_map(m)?, 1.0, false),
            SystemRef::Flow(f) => {
                let c = f
                    .roof_constant()
                    .ok_or_else(|| LabError::InvalidInput("source experiments on flows need a constant roof".into()))?;
                (linear_map(f.base())?, c, true)
            }
        };
        Ok(Section {
            matrix: map.matrix(),
            tau,
            lambda: map.lambda(),
            cov_s: mat::normalize(perp(map.e_s())),
            cov_u: mat::normalize(perp(map.e_u())),
            is_flow,
        })
    }

    /// Number of returns in time `t`, or an error when `t` is not a whole
    /// multiple of the return time.
    pub fn returns(&self, t: f64) -> Result<i64> {
        let q = t / self.tau;
        let r = q.round();
        if (q - r).abs() > 1e-9 {
            return Err(LabError::InvalidInput(format!("time {t} is not a multiple of the return time {}", self.tau)));
        }
        Ok(r as i64)
    }

    /// Symplectic lift on frequencies over `q` returns:
    /// `Phi_q(xi) = (A^{-q})^T xi`, so `E*_s` contracts forward in time.
    pub fn push_covector(&self, xi: [f64; 2], q: i64) -> [f64; 2] {
        let m = mat::to_f64(&transpose_i(&crate::mat::pow_i(&self.matrix, -q)));
        mat::apply(&m, xi)
    }

    /// Angle between the `E*_s` and `E*_u` lines.
    pub fn splitting_angle(&self) -> f64 {
        line_angle(self.cov_s, self.cov_u)
    }

    pub fn inverse(&self) -> Mat2i {
        inverse_i(&self.matrix)
    }
}

/// Angle between two lines through the origin, in `[0, pi/2]`.
pub fn line_angle(a: [f64; 2], b: [f64; 2]) -> f64 {
    let cross = (a[0] * b[1] - a[1] * b[0]).abs();
    cross.atan2(mat::dot(a, b).abs())
}

/// One-return multiplier on an `n x n` lattice: `e^{tau v}` for a potential,
/// `e^{i tau theta}` for a phase. `None` means no weight.
pub fn step_multiplier(weight: Option<&CocycleWeight>, tau: f64, n: usize) -> Result<Option<Grid2Field>> {
    let Some(w) = weight else { return Ok(None) };
    w.validate()?;
    let field = w.field().resample(n)?.real_part();
    Ok(Some(match w {
        CocycleWeight::Potential(_) => field.map(|v| Complex64::new((tau * v.re).exp(), 0.0)),
        CocycleWeight::Phase(_) => field.map(|v| Complex64::from_polar(1.0, tau * v.re)),
    }))
}

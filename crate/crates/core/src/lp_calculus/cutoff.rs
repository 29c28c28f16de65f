use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Transition profile shared by every cutoff in the crate.
///
/// The step `S` is the normalized integral of the polynomial bump
/// `t^m (1-t)^m` on `[0, 1]`, so `S` is exact in closed form, `C^{m}` at the
/// endpoints and satisfies `S(1 - t) = 1 - S(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub kernel_order: u32,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec { kernel_order: 6 }
    }
}

impl CutoffSpec {
    pub fn new(kernel_order: u32) -> Result<Self> {
        if !(1..=24).contains(&kernel_order) {
            return Err(LabError::Config(format!(
                "cutoff kernel_order must lie in 1..=24, got {kernel_order}"
            )));
        }
        Ok(CutoffSpec { kernel_order })
    }

    /// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`.
    pub fn step(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        // Regularized incomplete beta I_t(m+1, m+1) as a Bernstein sum.
        let m = self.kernel_order as usize;
        let deg = 2 * m + 1;
        let u = 1.0 - t;
        let mut binom = 1.0f64;
        let mut acc = 0.0;
        for i in 0..=deg {
            if i > 0 {
                binom = binom * (deg + 1 - i) as f64 / i as f64;
            }
            if i > m {
                acc += binom * t.powi(i as i32) * u.powi((deg - i) as i32);
            }
        }
        acc
    }

    /// Even cutoff with `psi = 1` on `[-1, 1]` and `psi = 0` outside `[-2, 2]`.
    pub fn psi(&self, r: f64) -> f64 {
        1.0 - self.step(r.abs() - 1.0)
    }

    /// Dyadic band `phi_j(r) = psi(2^{-j} r) - psi(2^{-j+1} r)`, with `phi_0 = psi`.
    pub fn phi(&self, j: u32, r: f64) -> f64 {
        if j == 0 {
            return self.psi(r);
        }
        let scale = (2.0f64).powi(-(j as i32));
        self.psi(scale * r) - self.psi(2.0 * scale * r)
    }
}

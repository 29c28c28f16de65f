use crate::error::{LabError, Result};
use crate::lp_calculus::{Grid2Field, MappingTorusField};

use super::map::AnosovMap;

/// Suspension of `base` with roof `r`: unit-speed vertical flow on
/// `{(x, t): 0 <= t < r(x)} / (x, r(x)) ~ (f(x), 0)`.
#[derive(Clone, Debug)]
pub struct AnosovFlow {
    base: AnosovMap,
    roof: Grid2Field,
    roof_min: f64,
    roof_constant: Option<f64>,
    grad: [Grid2Field; 2],
}

pub fn suspension_flow(base: &AnosovMap, roof: &Grid2Field) -> Result<AnosovFlow> {
    if roof.max_im_abs() > 1e-12 {
        return Err(LabError::InvalidInput("roof must be real".into()));
    }
    let roof = roof.real_part();
    let roof_min = roof.min_re();
    if !(roof_min > 0.0) {
        return Err(LabError::InvalidInput(format!("roof must be strictly positive, min is {roof_min}")));
    }
    let c = roof.values()[0].re;
    let roof_constant = roof.values().iter().all(|v| v.re == c).then_some(c);
    let grad = [roof.derivative(0), roof.derivative(1)];
    Ok(AnosovFlow { base: base.clone(), roof, roof_min, roof_constant, grad })
}

impl AnosovFlow {
    pub fn base(&self) -> &AnosovMap {
        &self.base
    }

    pub fn roof(&self) -> &Grid2Field {
        &self.roof
    }

    pub fn roof_min(&self) -> f64 {
        self.roof_min
    }

    pub fn roof_constant(&self) -> Option<f64> {
        self.roof_constant
    }

    /// Roof at an arbitrary point by spectral evaluation.
    pub fn roof_at(&self, x: [f64; 2]) -> f64 {
        match self.roof_constant {
            Some(c) => c,
            None => self.roof.eval_re(x),
        }
    }

    pub fn roof_gradient_at(&self, x: [f64; 2]) -> [f64; 2] {
        if self.roof_constant.is_some() {
            return [0.0, 0.0];
        }
        [self.grad[0].eval_re(x), self.grad[1].eval_re(x)]
    }

    /// Closed-orbit period over a base orbit: the Birkhoff sum of the roof.
    /// Terms are summed in sorted order so the result does not depend on
    /// which orbit point is listed first.
    pub fn period_of(&self, orbit_points: &[[f64; 2]]) -> f64 {
        let mut terms: Vec<f64> = orbit_points.iter().map(|&x| self.roof_at(x)).collect();
        terms.sort_by(f64::total_cmp);
        terms.iter().sum()
    }

    /// `e^{-tX} u = u o phi_{-t}` on mapping-torus data, exact when the roof
    /// is a constant `c` and `t n_s / c` is an integer.
    pub fn propagate(&self, u: &MappingTorusField, t: f64) -> Result<MappingTorusField> {
        let c = self
            .roof_constant
            .ok_or_else(|| LabError::InvalidInput("exact propagation needs a constant roof".into()))?;
        let steps = t * u.spec().n_s as f64 / c;
        let m = steps.round();
        if (steps - m).abs() > 1e-9 {
            return Err(LabError::InvalidInput(format!("time {t} is not a multiple of the slice step {}", c / u.spec().n_s as f64)));
        }
        if u.matrix() != self.base.matrix() {
            return Err(LabError::InvalidInput("field lives on a different mapping torus".into()));
        }
        Ok(u.shift_slices(m as i64))
    }
}

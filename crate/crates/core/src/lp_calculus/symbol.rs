use serde::{Deserialize, Serialize};

use super::cutoff::CutoffSpec;
use super::grid::Grid2Field;
use crate::error::{LabError, Result};

/// Radial part of a multiplier: rises on `[support_lo, plateau_lo]`, equals 1
/// on `[plateau_lo, plateau_hi]`, falls on `[plateau_hi, support_hi]`.
/// `support_hi = +inf` gives a tail symbol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub support_lo: f64,
    pub plateau_lo: f64,
    pub plateau_hi: f64,
    pub support_hi: f64,
}

impl RadialProfile {
    pub fn new(support_lo: f64, plateau_lo: f64, plateau_hi: f64, support_hi: f64) -> Result<Self> {
        let p = RadialProfile { support_lo, plateau_lo, plateau_hi, support_hi };
        p.validate()?;
        Ok(p)
    }

    /// Compact annulus with plateau `[plateau_lo, plateau_hi]` inside `(lo, hi)`.
    pub fn annulus(lo: f64, plateau_lo: f64, plateau_hi: f64, hi: f64) -> Result<Self> {
        Self::new(lo, plateau_lo, plateau_hi, hi)
    }

    /// Ball: 1 on `|xi| <= plateau`, 0 beyond `radius`.
    pub fn ball(plateau: f64, radius: f64) -> Result<Self> {
        Self::new(0.0, 0.0, plateau, radius)
    }

    /// Tail: 0 below `lo`, 1 above `plateau_lo`.
    pub fn tail(lo: f64, plateau_lo: f64) -> Result<Self> {
        Self::new(lo, plateau_lo, f64::INFINITY, f64::INFINITY)
    }

    pub fn everything() -> Self {
        RadialProfile { support_lo: 0.0, plateau_lo: 0.0, plateau_hi: f64::INFINITY, support_hi: f64::INFINITY }
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = 0.0 <= self.support_lo
            && self.support_lo <= self.plateau_lo
            && self.plateau_lo <= self.plateau_hi
            && self.plateau_hi <= self.support_hi;
        if !ordered || self.plateau_lo.is_nan() || !self.support_lo.is_finite() || !self.plateau_lo.is_finite() {
            return Err(LabError::Config(format!("radial profile out of order: {self:?}")));
        }
        if self.plateau_hi.is_infinite() && self.support_hi.is_finite() {
            return Err(LabError::Config("infinite plateau needs infinite support".into()));
        }
        Ok(())
    }

    pub fn is_compact(&self) -> bool {
        self.support_hi.is_finite()
    }

    pub fn eval(&self, r: f64, cutoff: &CutoffSpec) -> f64 {
        if r < self.support_lo || r > self.support_hi {
            return 0.0;
        }
        let rise = if r >= self.plateau_lo {
            1.0
        } else {
            cutoff.step((r - self.support_lo) / (self.plateau_lo - self.support_lo))
        };
        let fall = if r <= self.plateau_hi {
            1.0
        } else {
            1.0 - cutoff.step((r - self.plateau_hi) / (self.support_hi - self.plateau_hi))
        };
        rise * fall
    }
}

/// Fourier multiplier localized in a two-sided cone around a covector line
/// and in a radial profile. `direction = None` means no angular localization.
///
/// The angular factor is 1 for angles below `half_angle * (1 - smoothing)` and
/// 0 beyond `half_angle`; both factors use the shared cutoff step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSymbol {
    pub direction: Option<Vec<f64>>,
    pub half_angle: f64,
    pub smoothing: f64,
    pub radial: RadialProfile,
    pub amplitude: f64,
    #[serde(default)]
    pub cutoff: CutoffSpec,
}

impl ConeSymbol {
    pub fn isotropic(radial: RadialProfile) -> Self {
        ConeSymbol {
            direction: None,
            half_angle: std::f64::consts::FRAC_PI_2,
            smoothing: 1.0,
            radial,
            amplitude: 1.0,
            cutoff: CutoffSpec::default(),
        }
    }

    pub fn cone(direction: &[f64], half_angle: f64, smoothing: f64, radial: RadialProfile) -> Result<Self> {
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(direction.len() == 2 || direction.len() == 3) || !(norm > 0.0) {
            return Err(LabError::Config("cone direction must be a nonzero 2- or 3-vector".into()));
        }
        let sym = ConeSymbol {
            direction: Some(direction.iter().map(|v| v / norm).collect()),
            half_angle,
            smoothing,
            radial,
            amplitude: 1.0,
            cutoff: CutoffSpec::default(),
        };
        sym.validate()?;
        Ok(sym)
    }

    pub fn zero() -> Self {
        ConeSymbol { amplitude: 0.0, ..Self::isotropic(RadialProfile::everything()) }
    }

    pub fn identity() -> Self {
        Self::isotropic(RadialProfile::everything())
    }

    pub fn with_cutoff(mut self, cutoff: CutoffSpec) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.radial.validate()?;
        if !(self.half_angle > 0.0 && self.half_angle <= std::f64::consts::FRAC_PI_2) {
            return Err(LabError::Config(format!("half_angle must lie in (0, pi/2], got {}", self.half_angle)));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(LabError::Config(format!("smoothing must lie in (0, 1], got {}", self.smoothing)));
        }
        if !(0.0..=1.0).contains(&self.amplitude) {
            return Err(LabError::Config("amplitude must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Angle between `xi` and the cone axis line, in `[0, pi/2]`.
    pub fn angle_to_axis(&self, xi: &[f64]) -> Option<f64> {
        let d = self.direction.as_ref()?;
        let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return Some(0.0);
        }
        let dot: f64 = d.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>().abs() / r;
        Some(dot.min(1.0).acos())
    }

    pub fn angular_factor(&self, xi: &[f64]) -> f64 {
        match self.angle_to_axis(xi) {
            None => 1.0,
            Some(theta) => {
                let inner = self.half_angle * (1.0 - self.smoothing);
                if theta <= inner {
                    1.0
                } else if theta >= self.half_angle {
                    0.0
                } else {
                    1.0 - self.cutoff.step((theta - inner) / (self.half_angle * self.smoothing))
                }
            }
        }
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        if let Some(d) = &self.direction {
            debug_assert_eq!(d.len(), xi.len(), "symbol dimension mismatch");
        }
        let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radial = self.radial.eval(r, &self.cutoff);
        if radial == 0.0 {
            return 0.0;
        }
        self.amplitude * radial * self.angular_factor(xi)
    }

    /// `sym(h xi)`, the semiclassical rescaling.
    pub fn eval_scaled(&self, xi: &[f64], h: f64) -> f64 {
        let scaled: Vec<f64> = xi.iter().map(|v| v * h).collect();
        self.eval(&scaled)
    }

    /// True when `xi` lies in the closed region where the symbol equals 1.
    pub fn on_plateau(&self, xi: &[f64]) -> bool {
        (self.eval(xi) - self.amplitude).abs() == 0.0 && self.amplitude > 0.0
    }

    /// Support radii of the radial factor.
    pub fn support(&self) -> (f64, f64) {
        (self.radial.support_lo, self.radial.support_hi)
    }
}

/// `Op_h(sym) f`: multiplies the coefficient at `xi = 2 pi k` by `sym(h xi)`.
pub fn band_filter_apply(f: &Grid2Field, sym: &ConeSymbol, h: f64) -> Result<Grid2Field> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(LabError::InvalidInput(format!("scale h must lie in (0, 1], got {h}")));
    }
    if let Some(d) = &sym.direction {
        if d.len() != 2 {
            return Err(LabError::InvalidInput("planar field needs a 2D symbol".into()));
        }
    }
    Ok(f.apply_symbol(|xi| sym.eval_scaled(&xi, h)))
}

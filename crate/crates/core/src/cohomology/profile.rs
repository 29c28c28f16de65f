use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fit::fit_line;
use crate::lp_calculus::{CutoffSpec, Grid2Field, LPFilterBank, MappingTorusField};

/// Bands with sup norm below this fraction of the largest are inactive.
pub const ACTIVE_FRACTION: f64 = 1e-13;

#[derive(Clone, Debug, Serialize)]
pub struct ProfileReport {
    pub band_norms: Vec<f64>,
    /// Slope of `-log2 b_j` against `j` over `fit_range`; `None` when
    /// fewer than three active bands fall in the resolvable range.
    pub alpha: Option<f64>,
    pub fit_range: Option<(u32, u32)>,
    /// Resolvable bands: the lowest two and highest two are never fitted.
    pub resolvable: (u32, u32),
    pub single_band: bool,
    pub dominant_band: u32,
}

/// Data to profile: a planar field or mapping-torus data (chart-wise bands,
/// worst chart per band).
#[derive(Clone, Copy, Debug)]
pub enum ProfileInput<'a> {
    Planar(&'a Grid2Field),
    Torus(&'a MappingTorusField),
}

fn band_norms(u: ProfileInput<'_>) -> Result<Vec<f64>> {
    match u {
        ProfileInput::Planar(f) => Ok(LPFilterBank::cached(&[f.n(), f.n()], CutoffSpec::default())?.band_sup_norms(f)),
        ProfileInput::Torus(f) => {
            let [a, b] = f.chart_band_norms()?;
            Ok(a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect())
        }
    }
}

/// Band sup norms and the fitted decay exponent.
///
/// The fit runs over active bands inside `[2, J - 2]`, dropping the first
/// and last active band as they only carry partial content.
pub fn regularity_profile(u: ProfileInput<'_>) -> Result<ProfileReport> {
    let b = band_norms(u)?;
    let j_max = b.len() as u32 - 1;
    if j_max < 6 {
        return Err(LabError::InvalidInput(format!("only {} bands; need at least 3 resolvable ones", j_max + 1)));
    }
    let resolvable = (2, j_max - 2);
    let top = b.iter().cloned().fold(0.0f64, f64::max);
    let dominant_band = b.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).map(|(j, _)| j as u32).unwrap_or(0);
    let active: Vec<u32> = (0..=j_max).filter(|&j| top > 0.0 && b[j as usize] > ACTIVE_FRACTION * top).collect();
    let single_band = active.len() <= 2;
    let mut alpha = None;
    let mut fit_range = None;
    if let (Some(&first), Some(&last)) = (active.first(), active.last()) {
        let lo = resolvable.0.max(first + 1);
        let hi = resolvable.1.min(last.saturating_sub(1));
        if hi >= lo + 2 {
            let js: Vec<f64> = (lo..=hi).map(|j| j as f64).collect();
            let ys: Vec<f64> = (lo..=hi).map(|j| -b[j as usize].max(f64::MIN_POSITIVE).log2()).collect();
            alpha = fit_line(&js, &ys).map(|f| f.slope);
            fit_range = Some((lo, hi));
        }
    }
    Ok(ProfileReport { band_norms: b, alpha, fit_range, resolvable, single_band, dominant_band })
}

impl ProfileReport {
    /// `alpha(data) - alpha(self)`, when both fits exist.
    pub fn gap_from(&self, data: &ProfileReport) -> Option<f64> {
        Some(data.alpha? - self.alpha?)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("band,sup_norm\n");
        for (j, v) in self.band_norms.iter().enumerate() {
            s.push_str(&format!("{j},{v:.17e}\n"));
        }
        s
    }
}

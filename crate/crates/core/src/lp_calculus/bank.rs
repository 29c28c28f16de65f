use rustfft::num_complex::Complex64;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use super::cutoff::CutoffSpec;
use super::grid::{Grid2Field, GridSpec};
use crate::error::{LabError, Result};
use crate::fft::{fftn, freq, Direction};

/// Dyadic Littlewood-Paley bank `phi_0, ..., phi_J` sampled on a periodic
/// frequency lattice of dimension 2 or 3, with `xi = 2 pi k`.
///
/// `J` is the least integer with `2^J >= max |xi|`, so the bands telescope to
/// `psi(2^{-J} |xi|) = 1` at every lattice frequency.
#[derive(Debug)]
pub struct LPFilterBank {
    dims: Vec<usize>,
    cutoff: CutoffSpec,
    j_max: u32,
    // Sparse band tables: (row-major lattice index, weight), weights nonzero.
    bands: Vec<Vec<(u32, f64)>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BankDescription {
    pub dims: Vec<usize>,
    pub kernel_order: u32,
    pub j_max: u32,
    pub band_sizes: Vec<usize>,
}

fn xi_radius(dims: &[usize], idx: usize) -> f64 {
    let mut rem = idx;
    let mut r2 = 0.0;
    for d in (0..dims.len()).rev() {
        let n = dims[d];
        let k = freq(rem % n, n) as f64;
        rem /= n;
        r2 += (2.0 * PI * k).powi(2);
    }
    r2.sqrt()
}

impl LPFilterBank {
    pub fn new(dims: &[usize], cutoff: CutoffSpec) -> Result<Self> {
        if !(dims.len() == 2 || dims.len() == 3) || dims.iter().any(|&n| n < 4) {
            return Err(LabError::Config(format!("unsupported lattice dims {dims:?}")));
        }
        let total: usize = dims.iter().product();
        let radii: Vec<f64> = (0..total).map(|i| xi_radius(dims, i)).collect();
        let r_max = radii.iter().cloned().fold(0.0, f64::max);
        // The j = 1 band needs frequencies in its plateau |xi| = 2.
        if r_max < 2.0 {
            return Err(LabError::Config("grid too small to hold the j = 1 band".into()));
        }
        let j_max = r_max.log2().ceil() as u32;
        let mut bands = vec![Vec::new(); j_max as usize + 1];
        for (idx, &r) in radii.iter().enumerate() {
            for (j, band) in bands.iter_mut().enumerate() {
                let w = cutoff.phi(j as u32, r);
                if w != 0.0 {
                    band.push((idx as u32, w));
                }
            }
        }
        Ok(LPFilterBank { dims: dims.to_vec(), cutoff, j_max, bands })
    }

    pub fn for_grid(spec: &GridSpec, cutoff: CutoffSpec) -> Result<Self> {
        spec.validate()?;
        Self::new(&[spec.n_side, spec.n_side], cutoff)
    }

    /// Shared bank for `dims` with the given cutoff, built once per process.
    pub fn cached(dims: &[usize], cutoff: CutoffSpec) -> Result<Arc<Self>> {
        type Cache = Mutex<HashMap<(Vec<usize>, CutoffSpec), Arc<LPFilterBank>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (dims.to_vec(), cutoff);
        if let Some(bank) = cache.lock().expect("bank cache poisoned").get(&key) {
            return Ok(bank.clone());
        }
        let bank = Arc::new(Self::new(dims, cutoff)?);
        cache.lock().expect("bank cache poisoned").insert(key, bank.clone());
        Ok(bank)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    pub fn cutoff(&self) -> CutoffSpec {
        self.cutoff
    }

    pub fn band(&self, j: u32) -> &[(u32, f64)] {
        &self.bands[j as usize]
    }

    pub fn describe(&self) -> BankDescription {
        BankDescription {
            dims: self.dims.clone(),
            kernel_order: self.cutoff.kernel_order,
            j_max: self.j_max,
            band_sizes: self.bands.iter().map(Vec::len).collect(),
        }
    }

    fn len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Real-space values of `Op(phi_j) f` from normalized coefficients, or
    /// `None` when the band sees no energy.
    pub fn band_values(&self, coeffs: &[Complex64], j: u32) -> Option<Vec<Complex64>> {
        assert_eq!(coeffs.len(), self.len(), "coefficient table does not match bank");
        let band = &self.bands[j as usize];
        if band.iter().all(|&(i, _)| coeffs[i as usize] == Complex64::default()) {
            return None;
        }
        let mut buf = vec![Complex64::default(); self.len()];
        for &(i, w) in band {
            buf[i as usize] = coeffs[i as usize] * w;
        }
        fftn(&mut buf, &self.dims, Direction::Inverse);
        Some(buf)
    }

    /// `b_j = ||Op(phi_j) f||_inf` for every band; empty bands give 0.
    pub fn band_sup_norms_coeffs(&self, coeffs: &[Complex64]) -> Vec<f64> {
        (0..=self.j_max)
            .map(|j| match self.band_values(coeffs, j) {
                None => 0.0,
                Some(v) => v.iter().fold(0.0f64, |m, z| m.max(z.norm())),
            })
            .collect()
    }

    pub fn band_sup_norms(&self, f: &Grid2Field) -> Vec<f64> {
        self.check_field(f);
        self.band_sup_norms_coeffs(f.coeffs())
    }

    pub fn band_field(&self, f: &Grid2Field, j: u32) -> Grid2Field {
        self.check_field(f);
        let n = f.n();
        let values = self.band_values(f.coeffs(), j).unwrap_or_else(|| vec![Complex64::default(); n * n]);
        Grid2Field::from_values(n, values).expect("grid already validated")
    }

    /// Sum of all band-filtered fields; equals `f` up to round-off.
    pub fn reconstruct(&self, f: &Grid2Field) -> Grid2Field {
        self.check_field(f);
        let n = f.n();
        let mut acc = vec![Complex64::default(); n * n];
        for j in 0..=self.j_max {
            if let Some(v) = self.band_values(f.coeffs(), j) {
                for (a, b) in acc.iter_mut().zip(v) {
                    *a += b;
                }
            }
        }
        Grid2Field::from_values(n, acc).expect("grid already validated")
    }

    fn check_field(&self, f: &Grid2Field) {
        assert!(self.dims == [f.n(), f.n()], "field grid does not match bank dims {:?}", self.dims);
    }
}

/// `sup_j 2^{js} b_j` over supplied band norms.
pub fn hz_from_bands(bands: &[f64], s: f64) -> f64 {
    bands
        .iter()
        .enumerate()
        .fold(0.0f64, |m, (j, &b)| if b == 0.0 { m } else { m.max((s * j as f64).exp2() * b) })
}

/// Hölder-Zygmund norm `sup_j 2^{js} ||Op(phi_j) f||_inf` with the default cutoff.
pub fn hz_norm(f: &Grid2Field, s: f64) -> f64 {
    let bank = LPFilterBank::cached(&[f.n(), f.n()], CutoffSpec::default()).expect("valid grid");
    hz_from_bands(&bank.band_sup_norms(f), s)
}

pub fn build_lp_filters(spec: &GridSpec, cutoff: CutoffSpec) -> Result<LPFilterBank> {
    LPFilterBank::for_grid(spec, cutoff)
}

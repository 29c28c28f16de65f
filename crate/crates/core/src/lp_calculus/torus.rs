use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

use super::bank::{hz_from_bands, LPFilterBank};
use super::cutoff::CutoffSpec;
use super::grid::{Grid2Field, GridSpec};
use super::symbol::ConeSymbol;
use crate::error::{LabError, Result};
use crate::fft::{fftn, freq, Direction};
use crate::mat::{det_i, pow_i, Mat2i};

/// Factor within which the two-chart mapping-torus norm matches the planar or
/// one-dimensional dyadic norms of fields that factor through one variable.
/// Measured on plane waves and `cos(2 pi s)`; see the lp_calculus tests.
pub const TORUS3_EQUIV_FACTOR: f64 = 4.0;

/// Chart 1 covers `s in (0.05, 0.95)`; chart 2 covers `s in (0.55, 1.45)`.
pub const CHART_STARTS: [f64; 2] = [0.0, 0.5];

/// Scalar field on the mapping torus `T^2 x [0,1] / (x,1) ~ (Ax,0)`.
///
/// Slice `j` holds `u(., j/n_s)`. Heights outside `[0,1)` are reached through
/// the twist `u(x, s + 1) = u(Ax, s)`.
#[derive(Clone, Debug)]
pub struct MappingTorusField {
    spec: GridSpec,
    matrix: Mat2i,
    slices: Vec<Grid2Field>,
}

/// Partition-of-unity weight of chart 1 at height `s mod 1`.
pub fn chart_weight(s: f64) -> f64 {
    let c = CutoffSpec::default();
    let t = s.rem_euclid(1.0);
    c.step((t - 0.05) / 0.4) * (1.0 - c.step((t - 0.55) / 0.4))
}

impl MappingTorusField {
    pub fn new(spec: GridSpec, matrix: Mat2i, slices: Vec<Grid2Field>) -> Result<Self> {
        spec.validate()?;
        if det_i(&matrix).abs() != 1 {
            return Err(LabError::InvalidInput(format!("twist {matrix:?} is not unimodular")));
        }
        if slices.len() != spec.n_s || slices.iter().any(|g| g.n() != spec.n_side) {
            return Err(LabError::InvalidInput("slices do not match the grid spec".into()));
        }
        Ok(MappingTorusField { spec, matrix, slices })
    }

    /// Samples `f(x, s)` at `s = j / n_s`; `f` should satisfy the twist.
    pub fn from_fn(spec: GridSpec, matrix: Mat2i, f: impl Fn([f64; 2], f64) -> f64) -> Result<Self> {
        spec.validate()?;
        let slices = (0..spec.n_s)
            .map(|j| {
                let s = j as f64 / spec.n_s as f64;
                Grid2Field::from_real_fn(spec.n_side, |x| f(x, s))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(spec, matrix, slices)
    }

    /// `u(x, s) = g(x)` is twist compatible only when `g o A = g`; callers
    /// use it for fields whose twist is handled by the chart norm.
    pub fn slice_constant(spec: GridSpec, matrix: Mat2i, g: &Grid2Field) -> Result<Self> {
        Self::new(spec, matrix, vec![g.clone(); spec.n_s])
    }

    pub fn constant(spec: GridSpec, matrix: Mat2i, c: f64) -> Result<Self> {
        let g = Grid2Field::constant(spec.n_side, c)?;
        Self::slice_constant(spec, matrix, &g)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn matrix(&self) -> Mat2i {
        self.matrix
    }

    pub fn slices(&self) -> &[Grid2Field] {
        &self.slices
    }

    /// Slice at height `m / n_s` for any integer `m`, twist applied.
    pub fn slice_at(&self, m: i64) -> Grid2Field {
        let ns = self.spec.n_s as i64;
        let q = m.div_euclid(ns);
        let r = m.rem_euclid(ns) as usize;
        if q == 0 {
            self.slices[r].clone()
        } else {
            self.slices[r].compose_linear(pow_i(&self.matrix, q))
        }
    }

    /// `e^{-(m / n_s) X} u`, i.e. `u(x, s - m / n_s)`; exact on lattice data.
    pub fn shift_slices(&self, m: i64) -> MappingTorusField {
        let slices = (0..self.spec.n_s as i64).map(|j| self.slice_at(j - m)).collect();
        MappingTorusField { spec: self.spec, matrix: self.matrix, slices }
    }

    pub fn map_slices(&self, f: impl Fn(usize, &Grid2Field) -> Grid2Field) -> MappingTorusField {
        let slices = self.slices.iter().enumerate().map(|(j, g)| f(j, g)).collect();
        MappingTorusField { spec: self.spec, matrix: self.matrix, slices }
    }

    pub fn zip_with(&self, other: &MappingTorusField, f: impl Fn(&Grid2Field, &Grid2Field) -> Grid2Field) -> MappingTorusField {
        assert_eq!(self.spec, other.spec, "grid mismatch");
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| f(a, b)).collect();
        MappingTorusField { spec: self.spec, matrix: self.matrix, slices }
    }

    pub fn add(&self, other: &MappingTorusField) -> MappingTorusField {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &MappingTorusField) -> MappingTorusField {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, c: f64) -> MappingTorusField {
        self.map_slices(|_, g| g.scale(c))
    }

    pub fn max_abs(&self) -> f64 {
        self.slices.iter().fold(0.0f64, |m, g| m.max(g.max_abs()))
    }

    /// Value at a lattice point `(i, j)` and any integer height index.
    pub fn value(&self, i: usize, j: usize, m: i64) -> Complex64 {
        let ns = self.spec.n_s as i64;
        let q = m.div_euclid(ns);
        let r = m.rem_euclid(ns) as usize;
        let n = self.spec.n_side as i64;
        let a = pow_i(&self.matrix, q);
        let (ii, jj) = (i as i64, j as i64);
        let p = (a[0][0] * ii + a[0][1] * jj).rem_euclid(n) as usize;
        let q2 = (a[1][0] * ii + a[1][1] * jj).rem_euclid(n) as usize;
        self.slices[r].value(p, q2)
    }

    /// `∫_0^1 u(x, s) ds` at an off-lattice point, trapezoid rule in `s` with
    /// the twisted endpoint `u(x, 1) = u(Ax, 0)`.
    pub fn s_integral_at(&self, x: [f64; 2]) -> f64 {
        let ns = self.spec.n_s;
        let a = self.matrix;
        let ax = [
            (a[0][0] as f64 * x[0] + a[0][1] as f64 * x[1]).rem_euclid(1.0),
            (a[1][0] as f64 * x[0] + a[1][1] as f64 * x[1]).rem_euclid(1.0),
        ];
        let mut acc = 0.0;
        for (j, g) in self.slices.iter().enumerate() {
            let v = g.eval_re(x);
            acc += if j == 0 { 0.5 * v } else { v };
        }
        acc += 0.5 * self.slices[0].eval_re(ax);
        acc / ns as f64
    }

    /// Chart-extended values on the `[n, n, n_s]` patch lattice.
    ///
    /// The extension is `Theta u + (1 - Theta) <u>` with `<u>` the
    /// `Theta`-weighted mean, so constants are reproduced exactly.
    pub fn chart_values(&self, chart: usize) -> Result<Vec<Complex64>> {
        let (n, ns) = (self.spec.n_side, self.spec.n_s);
        if ns < 8 || ns % 2 != 0 {
            return Err(LabError::Config(format!(
                "chart overlap needs an even n_s >= 8, got {ns}"
            )));
        }
        let offset = if chart == 0 { 0 } else { ns / 2 };
        let weights: Vec<f64> = (0..ns)
            .map(|l| {
                let s = CHART_STARTS[chart] + l as f64 / ns as f64;
                let w = chart_weight(s);
                if chart == 0 { w } else { 1.0 - w }
            })
            .collect();
        let slices: Vec<Grid2Field> = (0..ns).map(|l| self.slice_at((offset + l) as i64)).collect();
        let wsum: f64 = weights.iter().sum::<f64>() * (n * n) as f64;
        let mut mean = Complex64::default();
        for (g, &w) in slices.iter().zip(&weights) {
            mean += g.values().iter().sum::<Complex64>() * w;
        }
        mean /= wsum;
        let mut out = vec![Complex64::default(); n * n * ns];
        for (l, (g, &w)) in slices.iter().zip(&weights).enumerate() {
            for (p, v) in g.values().iter().enumerate() {
                out[p * ns + l] = v * w + mean * (1.0 - w);
            }
        }
        Ok(out)
    }

    /// Normalized Fourier coefficients of both chart extensions.
    pub fn chart_coeffs(&self) -> Result<[Vec<Complex64>; 2]> {
        let dims = self.dims3();
        let norm = 1.0 / dims.iter().product::<usize>() as f64;
        let go = |chart: usize| -> Result<Vec<Complex64>> {
            let mut v = self.chart_values(chart)?;
            fftn(&mut v, &dims, Direction::Forward);
            v.iter_mut().for_each(|z| *z *= norm);
            Ok(v)
        };
        Ok([go(0)?, go(1)?])
    }

    pub fn dims3(&self) -> [usize; 3] {
        [self.spec.n_side, self.spec.n_side, self.spec.n_s]
    }

    pub fn bank3(&self) -> Result<std::sync::Arc<LPFilterBank>> {
        LPFilterBank::cached(&self.dims3(), CutoffSpec::default())
    }

    /// Per-chart band sup norms.
    pub fn chart_band_norms(&self) -> Result<[Vec<f64>; 2]> {
        let bank = self.bank3()?;
        let [c0, c1] = self.chart_coeffs()?;
        Ok([bank.band_sup_norms_coeffs(&c0), bank.band_sup_norms_coeffs(&c1)])
    }
}

/// Frequency `xi = 2 pi k` of a row-major index on a `dims` lattice.
pub fn xi_of_index(dims: &[usize], idx: usize) -> Vec<f64> {
    let mut out = vec![0.0; dims.len()];
    let mut rem = idx;
    for d in (0..dims.len()).rev() {
        let n = dims[d];
        out[d] = 2.0 * PI * freq(rem % n, n) as f64;
        rem /= n;
    }
    out
}

/// Multiplies coefficients by `sym(h xi)` on a lattice of any supported dimension.
pub fn apply_symbol_coeffs(coeffs: &[Complex64], dims: &[usize], sym: &ConeSymbol, h: f64) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            if c == Complex64::default() {
                return c;
            }
            let w = sym.eval_scaled(&xi_of_index(dims, idx), h);
            if w == 0.0 { Complex64::default() } else { c * w }
        })
        .collect()
}

/// Sup norm of the field with the given normalized coefficients.
pub fn sup_from_coeffs(coeffs: &[Complex64], dims: &[usize]) -> f64 {
    let mut v = coeffs.to_vec();
    fftn(&mut v, dims, Direction::Inverse);
    v.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Chartwise norm: the larger of the two chart Hölder-Zygmund norms.
pub fn hz_norm_torus3(f: &MappingTorusField, s: f64) -> Result<f64> {
    let [b0, b1] = f.chart_band_norms()?;
    Ok(hz_from_bands(&b0, s).max(hz_from_bands(&b1, s)))
}

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{LabError, Result};
use crate::fft::{bin, fftn, freq, Direction};

/// Grid resolution: `n_side` points per torus direction and `n_s` slices in
/// the suspension direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_side: usize,
    pub n_s: usize,
}

impl GridSpec {
    pub fn new(n_side: usize, n_s: usize) -> Result<Self> {
        let spec = GridSpec { n_side, n_s };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.n_side < 8 || !self.n_side.is_power_of_two() {
            errs.push(format!("n_side must be a power of two >= 8, got {}", self.n_side));
        }
        if self.n_s < 4 {
            errs.push(format!("n_s must be >= 4, got {}", self.n_s));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(LabError::Config(errs.join("; ")))
        }
    }
}

/// Periodic scalar field on the `n x n` lattice of `R^2 / Z^2`.
///
/// Values are stored row-major with the first index along `x_1`. Fourier
/// coefficients follow `f(x) = sum_k c_k e^{2 pi i k.x}` and are computed on
/// first request.
#[derive(Debug)]
pub struct Grid2Field {
    n: usize,
    values: Vec<Complex64>,
    coeffs: OnceLock<Vec<Complex64>>,
}

impl Clone for Grid2Field {
    fn clone(&self) -> Self {
        let coeffs = OnceLock::new();
        if let Some(c) = self.coeffs.get() {
            let _ = coeffs.set(c.clone());
        }
        Grid2Field { n: self.n, values: self.values.clone(), coeffs }
    }
}

fn check_side(n: usize) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(LabError::Config(format!("n_side must be a power of two >= 8, got {n}")));
    }
    Ok(())
}

impl Grid2Field {
    pub fn from_values(n: usize, values: Vec<Complex64>) -> Result<Self> {
        check_side(n)?;
        if values.len() != n * n {
            return Err(LabError::InvalidInput(format!(
                "expected {} values, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(Grid2Field { n, values, coeffs: OnceLock::new() })
    }

    pub fn from_real_values(n: usize, values: &[f64]) -> Result<Self> {
        Self::from_values(n, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_values(n, vec![Complex64::default(); n * n])
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::from_values(n, vec![Complex64::new(c, 0.0); n * n])
    }

    pub fn from_fn(n: usize, f: impl Fn([f64; 2]) -> Complex64) -> Result<Self> {
        check_side(n)?;
        let h = 1.0 / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f([i as f64 * h, j as f64 * h]));
            }
        }
        Self::from_values(n, values)
    }

    pub fn from_real_fn(n: usize, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        Self::from_fn(n, |x| Complex64::new(f(x), 0.0))
    }

    /// Field with the given Fourier coefficients (row-major FFT bin order).
    pub fn from_coeffs(n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        check_side(n)?;
        if coeffs.len() != n * n {
            return Err(LabError::InvalidInput("coefficient table has wrong size".into()));
        }
        let mut values = coeffs.clone();
        fftn(&mut values, &[n, n], Direction::Inverse);
        let field = Grid2Field { n, values, coeffs: OnceLock::new() };
        let _ = field.coeffs.set(coeffs);
        Ok(field)
    }

    /// Trigonometric polynomial `sum c e^{2 pi i k.x}`; every `k` must satisfy
    /// `|k_i| < n/2`.
    pub fn from_modes(n: usize, modes: &[([i64; 2], Complex64)]) -> Result<Self> {
        check_side(n)?;
        let half = (n / 2) as i64;
        let mut coeffs = vec![Complex64::default(); n * n];
        for &(k, c) in modes {
            if k[0].abs() >= half || k[1].abs() >= half {
                return Err(LabError::InvalidInput(format!(
                    "mode {k:?} not resolved on a {n}x{n} grid"
                )));
            }
            coeffs[bin(k[0], n) * n + bin(k[1], n)] += c;
        }
        Self::from_coeffs(n, coeffs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.values[(i % self.n) * self.n + (j % self.n)]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        self.coeffs.get_or_init(|| {
            let mut c = self.values.clone();
            fftn(&mut c, &[self.n, self.n], Direction::Forward);
            let norm = 1.0 / (self.n * self.n) as f64;
            for v in c.iter_mut() {
                *v *= norm;
            }
            c
        })
    }

    /// Coefficient of `e^{2 pi i k.x}`, aliased modulo the grid.
    pub fn coeff(&self, k: [i64; 2]) -> Complex64 {
        let n = self.n;
        self.coeffs()[bin(k[0], n) * n + bin(k[1], n)]
    }

    /// Frequency vector `xi = 2 pi k` of row-major bin `idx`.
    pub fn xi_of_index(n: usize, idx: usize) -> [f64; 2] {
        let (a, b) = (idx / n, idx % n);
        [2.0 * PI * freq(a, n) as f64, 2.0 * PI * freq(b, n) as f64]
    }

    /// Spectral evaluation off the lattice. Nyquist bins are read as cosines.
    pub fn eval(&self, x: [f64; 2]) -> Complex64 {
        let n = self.n;
        let c = self.coeffs();
        let basis = |t: f64| -> Vec<Complex64> {
            (0..n)
                .map(|a| {
                    if a == n / 2 {
                        Complex64::new((PI * n as f64 * t).cos(), 0.0)
                    } else {
                        let ang = 2.0 * PI * freq(a, n) as f64 * t;
                        Complex64::new(ang.cos(), ang.sin())
                    }
                })
                .collect()
        };
        let e1 = basis(x[0]);
        let e2 = basis(x[1]);
        let mut acc = Complex64::default();
        for a in 0..n {
            let row = &c[a * n..(a + 1) * n];
            let mut inner = Complex64::default();
            for b in 0..n {
                inner += row[b] * e2[b];
            }
            acc += e1[a] * inner;
        }
        acc
    }

    pub fn eval_re(&self, x: [f64; 2]) -> f64 {
        self.eval(x).re
    }

    /// `f o M` on the lattice for an integer matrix `M`; a permutation when
    /// `det M = +-1`.
    pub fn compose_linear(&self, m: [[i64; 2]; 2]) -> Grid2Field {
        let n = self.n as i64;
        let mut out = Vec::with_capacity(self.values.len());
        for i in 0..n {
            for j in 0..n {
                let a = (m[0][0] * i + m[0][1] * j).rem_euclid(n);
                let b = (m[1][0] * i + m[1][1] * j).rem_euclid(n);
                out.push(self.values[(a * n + b) as usize]);
            }
        }
        Grid2Field { n: self.n, values: out, coeffs: OnceLock::new() }
    }

    /// Multiplies the Fourier coefficients by `symbol(xi)` with `xi = 2 pi k`.
    pub fn apply_symbol(&self, symbol: impl Fn([f64; 2]) -> f64) -> Grid2Field {
        let n = self.n;
        let coeffs: Vec<Complex64> = self
            .coeffs()
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let m = symbol(Self::xi_of_index(n, idx));
                if m == 0.0 {
                    Complex64::default()
                } else {
                    c * m
                }
            })
            .collect();
        Grid2Field::from_coeffs(n, coeffs).expect("grid already validated")
    }

    /// Spectral partial derivative along `axis`; the Nyquist bin is dropped.
    pub fn derivative(&self, axis: usize) -> Grid2Field {
        let n = self.n;
        let coeffs: Vec<Complex64> = self
            .coeffs()
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let a = if axis == 0 { idx / n } else { idx % n };
                if a == n / 2 {
                    Complex64::default()
                } else {
                    c * Complex64::new(0.0, 2.0 * PI * freq(a, n) as f64)
                }
            })
            .collect();
        Grid2Field::from_coeffs(n, coeffs).expect("grid already validated")
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Grid2Field {
        Grid2Field { n: self.n, values: self.values.iter().map(|&v| f(v)).collect(), coeffs: OnceLock::new() }
    }

    pub fn zip_with(&self, other: &Grid2Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Grid2Field {
        assert_eq!(self.n, other.n, "grid size mismatch");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Grid2Field { n: self.n, values, coeffs: OnceLock::new() }
    }

    pub fn add(&self, other: &Grid2Field) -> Grid2Field {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Grid2Field) -> Grid2Field {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Grid2Field) -> Grid2Field {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Grid2Field {
        self.map(|v| v * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    pub fn min_re(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.re))
    }

    pub fn max_im_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.im.abs()))
    }

    /// Drops imaginary parts.
    pub fn real_part(&self) -> Grid2Field {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    /// Spectral resampling onto an `m x m` lattice. Upsampling splits a
    /// Nyquist coefficient evenly between `+-n/2` (the cosine reading used
    /// by `eval`); downsampling folds `+-m/2` onto the new Nyquist bin and
    /// drops higher modes.
    pub fn resample(&self, m: usize) -> Result<Grid2Field> {
        check_side(m)?;
        let n = self.n;
        if m == n {
            return Ok(self.clone());
        }
        let half_old = (n / 2) as i64;
        let half_new = (m / 2) as i64;
        let targets = |k: i64| -> Vec<(i64, f64)> {
            if k == -half_old && m > n {
                vec![(-half_old, 0.5), (half_old, 0.5)]
            } else if k.abs() <= half_new {
                vec![(k, 1.0)]
            } else {
                Vec::new()
            }
        };
        let c = self.coeffs();
        let mut out = vec![Complex64::default(); m * m];
        for a in 0..n {
            for b in 0..n {
                let v = c[a * n + b];
                if v == Complex64::default() {
                    continue;
                }
                for (ka, wa) in targets(freq(a, n)) {
                    for (kb, wb) in targets(freq(b, n)) {
                        out[bin(ka, m) * m + bin(kb, m)] += v * (wa * wb);
                    }
                }
            }
        }
        Grid2Field::from_coeffs(m, out)
    }

    /// Largest `|k|_inf` carrying a coefficient above `tol`.
    pub fn spectral_radius_inf(&self, tol: f64) -> i64 {
        let n = self.n;
        let mut r = 0;
        for (idx, c) in self.coeffs().iter().enumerate() {
            if c.norm() > tol {
                let (a, b) = (idx / n, idx % n);
                r = r.max(freq(a, n).abs()).max(freq(b, n).abs());
            }
        }
        r
    }
}

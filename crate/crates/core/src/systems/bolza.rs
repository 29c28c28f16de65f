use rustfft::num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::mat::{self, Mat2};

pub type CMat2 = [[Complex64; 2]; 2];

/// Bolza surface group: eight side pairings of the regular octagon with
/// interior angles `pi/4`, as real `SL(2, R)` matrices acting on the upper
/// half-plane. Generator `k + 4` is the inverse of generator `k`.
#[derive(Clone, Debug, Serialize)]
pub struct FuchsianGroup {
    pub generators: Vec<Mat2>,
    #[serde(skip)]
    pub disk_generators: Vec<CMat2>,
    /// Letters of the defining relation (product equals `+-I`).
    pub relation: Vec<usize>,
    pub relation_residual: f64,
}

/// `g_0 g_5 g_2 g_7 g_4 g_1 g_6 g_3 = I`, the cyclically reduced octagon relation.
pub const BOLZA_RELATION: [usize; 8] = [0, 5, 2, 7, 4, 1, 6, 3];

/// Systole `2 arccosh(1 + sqrt 2)`.
pub fn bolza_systole() -> f64 {
    2.0 * (1.0 + 2f64.sqrt()).acosh()
}

pub fn inverse_letter(k: usize) -> usize {
    (k + 4) % 8
}

fn cmul(a: &CMat2, b: &CMat2) -> CMat2 {
    let mut out = [[Complex64::default(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Disk generator `[[c, s e^{ik pi/4}], [s e^{-ik pi/4}, c]]` with
/// `c = 1 + sqrt 2`, `s = sqrt(2 + 2 sqrt 2)`, so `c^2 - s^2 = 1`.
pub fn disk_generator(k: usize) -> CMat2 {
    let c = 1.0 + 2f64.sqrt();
    let s = (2.0 + 2.0 * 2f64.sqrt()).sqrt();
    let e = Complex64::from_polar(1.0, k as f64 * PI / 4.0);
    [[Complex64::new(c, 0.0), e * s], [e.conj() * s, Complex64::new(c, 0.0)]]
}

/// Cayley map `w = i (1 + z) / (1 - z)` from the disk to the half-plane.
pub fn cayley() -> CMat2 {
    let i = Complex64::new(0.0, 1.0);
    [[i, i], [Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)]]
}

fn cinverse(a: &CMat2) -> CMat2 {
    let d = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

pub fn fuchsian_bolza() -> Result<FuchsianGroup> {
    let k = cayley();
    let kinv = cinverse(&k);
    let disk: Vec<CMat2> = (0..8).map(disk_generator).collect();
    let mut generators = Vec::with_capacity(8);
    for g in &disk {
        let r = cmul(&cmul(&k, g), &kinv);
        let imag = r.iter().flatten().fold(0.0f64, |m, z| m.max(z.im.abs()));
        if imag > 1e-12 {
            return Err(LabError::Validation(format!("Cayley image not real (imag {imag:e})")));
        }
        generators.push([[r[0][0].re, r[0][1].re], [r[1][0].re, r[1][1].re]]);
    }
    let product = word_matrix(&generators, &BOLZA_RELATION);
    let id = [[1.0, 0.0], [0.0, 1.0]];
    let neg = [[-1.0, 0.0], [0.0, -1.0]];
    let relation_residual = mat::dist(&product, &id).min(mat::dist(&product, &neg));
    if relation_residual > 1e-10 {
        return Err(LabError::Validation(format!("octagon relation residual {relation_residual:e}")));
    }
    Ok(FuchsianGroup { generators, disk_generators: disk, relation: BOLZA_RELATION.to_vec(), relation_residual })
}

/// Product of generators along a word (left to right).
pub fn word_matrix(generators: &[Mat2], word: &[usize]) -> Mat2 {
    word.iter().fold([[1.0, 0.0], [0.0, 1.0]], |acc, &l| mat::mul(&acc, &generators[l]))
}

impl FuchsianGroup {
    pub fn word_matrix(&self, word: &[usize]) -> Mat2 {
        word_matrix(&self.generators, word)
    }

    pub fn disk_word_matrix(&self, word: &[usize]) -> CMat2 {
        let id = [[Complex64::new(1.0, 0.0), Complex64::default()], [Complex64::default(), Complex64::new(1.0, 0.0)]];
        word.iter().fold(id, |acc, &l| cmul(&acc, &self.disk_generators[l]))
    }

    /// Inradius of the octagon: half the systole.
    pub fn inradius(&self) -> f64 {
        bolza_systole() / 2.0
    }
}

/// Möbius action on a complex point.
pub fn mobius(m: &CMat2, z: Complex64) -> Complex64 {
    (m[0][0] * z + m[0][1]) / (m[1][0] * z + m[1][1])
}

pub fn mobius_real(m: &Mat2, z: Complex64) -> Complex64 {
    (z * m[0][0] + m[0][1]) / (z * m[1][0] + m[1][1])
}

/// Half-plane to disk: `z = (w - i) / (w + i)`.
pub fn half_plane_to_disk(w: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    (w - i) / (w + i)
}

/// Hyperbolic distance in the disk.
pub fn disk_distance(a: Complex64, b: Complex64) -> f64 {
    let num = (a - b).norm_sqr();
    let den = (1.0 - a.norm_sqr()) * (1.0 - b.norm_sqr());
    (1.0 + 2.0 * num / den).acosh()
}

/// Hyperbolic distance in the half-plane.
pub fn half_plane_distance(a: Complex64, b: Complex64) -> f64 {
    (1.0 + (a - b).norm_sqr() / (2.0 * a.im * b.im)).acosh()
}

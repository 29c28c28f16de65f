use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::mat::{self, det_i, to_f64, trace_i, Mat2, Mat2i};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrigKind {
    Sin,
    Cos,
}

/// `amplitude * sin/cos(2 pi k.x)` in one component of the perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub component: usize,
    pub k: [i64; 2],
    pub amplitude: f64,
    pub kind: TrigKind,
}

/// Vector-valued trigonometric polynomial `p: T^2 -> R^2`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPerturbation {
    pub terms: Vec<TrigTerm>,
}

impl TrigPerturbation {
    /// `p(x) = (sin 2 pi x_2, 0)`.
    pub fn sin_x2() -> Self {
        TrigPerturbation { terms: vec![TrigTerm { component: 0, k: [0, 1], amplitude: 1.0, kind: TrigKind::Sin }] }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.component > 1 || !t.amplitude.is_finite() {
                return Err(LabError::Config(format!("bad perturbation term {t:?}")));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for t in &self.terms {
            let ph = 2.0 * PI * (t.k[0] as f64 * x[0] + t.k[1] as f64 * x[1]);
            out[t.component] += t.amplitude * match t.kind {
                TrigKind::Sin => ph.sin(),
                TrigKind::Cos => ph.cos(),
            };
        }
        out
    }

    /// Exact Jacobian `Dp(x)`.
    pub fn jacobian(&self, x: [f64; 2]) -> Mat2 {
        let mut out = [[0.0; 2]; 2];
        for t in &self.terms {
            let ph = 2.0 * PI * (t.k[0] as f64 * x[0] + t.k[1] as f64 * x[1]);
            let d = t.amplitude * 2.0 * PI * match t.kind {
                TrigKind::Sin => ph.cos(),
                TrigKind::Cos => -ph.sin(),
            };
            out[t.component][0] += d * t.k[0] as f64;
            out[t.component][1] += d * t.k[1] as f64;
        }
        out
    }

    /// Lipschitz constant of `Dp` in operator norm.
    pub fn jacobian_lipschitz(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude.abs() * (2.0 * PI).powi(2) * (t.k[0].pow(2) + t.k[1].pow(2)) as f64)
            .sum()
    }
}

/// Outcome of the grid cone-field certification of a perturbed map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeCertificate {
    pub half_angle_u: f64,
    pub half_angle_s: f64,
    /// Bounds on `log |Df v|` over unit `v` in the unstable cone.
    pub log_expansion_min: f64,
    pub log_expansion_max: f64,
    /// Bounds on `log |Df^{-1} v|` over unit `v` in the stable cone.
    pub log_contraction_min: f64,
    pub log_contraction_max: f64,
    pub min_det: f64,
    pub grid_n: usize,
    /// Operator-norm slack covering points between grid nodes.
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Linear,
    Perturbed,
}

/// Hyperbolic toral map `x -> Ax + eps p(x) mod Z^2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnosovMap {
    matrix: Mat2i,
    epsilon: f64,
    perturbation: Option<TrigPerturbation>,
    /// Signed unstable and stable eigenvalues of `A`.
    mu_u: f64,
    mu_s: f64,
    e_u: [f64; 2],
    e_s: [f64; 2],
    certificate: Option<ConeCertificate>,
}

pub const CONE_LADDER: [f64; 6] = [0.05, 0.1, 0.15, 0.2, 0.3, 0.5];

fn eigenvector(a: &Mat2, mu: f64) -> [f64; 2] {
    let v = if a[0][1].abs() > a[1][0].abs() { [a[0][1], mu - a[0][0]] } else { [mu - a[1][1], a[1][0]] };
    let v = mat::normalize(v);
    // Tie-break: first coordinate positive, else second.
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) { [-v[0], -v[1]] } else { v }
}

/// Linear hyperbolic automorphism with exact eigen-data.
pub fn cat_map_system(matrix: Mat2i) -> Result<AnosovMap> {
    let d = det_i(&matrix);
    if d.abs() != 1 {
        return Err(LabError::InvalidInput(format!("matrix {matrix:?} has determinant {d}, need +-1")));
    }
    let t = trace_i(&matrix);
    if t.abs() <= 2 {
        return Err(LabError::NotHyperbolic { matrix, trace: t });
    }
    let (tf, df) = (t as f64, d as f64);
    let disc = (tf * tf - 4.0 * df).sqrt();
    // Larger-modulus root without cancellation, then the other from det.
    let mu_u = (tf + tf.signum() * disc) / 2.0;
    let mu_s = df / mu_u;
    let a = to_f64(&matrix);
    Ok(AnosovMap {
        matrix,
        epsilon: 0.0,
        perturbation: None,
        mu_u,
        mu_s,
        e_u: eigenvector(&a, mu_u),
        e_s: eigenvector(&a, mu_s),
        certificate: None,
    })
}

/// Angle of `w` to the line through `axis`, in `[0, pi/2]`.
fn line_angle(w: [f64; 2], axis: [f64; 2]) -> f64 {
    (w[0] * axis[1] - w[1] * axis[0]).abs().atan2(mat::dot(w, axis).abs())
}

fn rotate(v: [f64; 2], a: f64) -> [f64; 2] {
    [v[0] * a.cos() - v[1] * a.sin(), v[0] * a.sin() + v[1] * a.cos()]
}

/// Min and max of `|Mv|` over unit `v` within `alpha` of the line `axis`.
fn arc_extremes(m: &Mat2, axis: [f64; 2], alpha: f64) -> (f64, f64) {
    let s = mat::mul(&mat::transpose(m), m);
    let q = |th: f64| {
        let v = [th.cos(), th.sin()];
        mat::dot(v, mat::apply(&s, v))
    };
    let c = axis[1].atan2(axis[0]);
    let mut vals = vec![q(c - alpha), q(c + alpha)];
    let crit = 0.5 * (2.0 * s[0][1]).atan2(s[0][0] - s[1][1]);
    for base in [crit, crit + PI / 2.0] {
        // Distance from c modulo pi.
        let d = (base - c).rem_euclid(PI);
        let d = if d > PI / 2.0 { d - PI } else { d };
        if d.abs() <= alpha {
            vals.push(q(c + d));
        }
    }
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(0.0, f64::max);
    (lo.sqrt(), hi.sqrt())
}

/// Checks `M C ⊂ int C` for the cone of half-angle `alpha` about `axis`,
/// robustly under operator-norm perturbations of size `margin`. Returns the
/// `|Mv|` range on the cone, widened by the margin.
fn cone_step(m: &Mat2, axis: [f64; 2], alpha: f64, margin: f64) -> std::result::Result<(f64, f64), String> {
    for sign in [-1.0, 1.0] {
        let w = mat::apply(m, rotate(axis, sign * alpha));
        let r = mat::norm2(w);
        if margin >= r {
            return Err("image edge degenerate".into());
        }
        let slack = (margin / r).asin();
        if line_angle(w, axis) + slack >= alpha {
            return Err(format!("cone edge image leaves the cone (half-angle {alpha})"));
        }
    }
    let (lo, hi) = arc_extremes(m, axis, alpha);
    Ok((lo - margin, hi + margin))
}

impl AnosovMap {
    pub fn matrix(&self) -> Mat2i {
        self.matrix
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn perturbation(&self) -> Option<&TrigPerturbation> {
        self.perturbation.as_ref()
    }

    pub fn kind(&self) -> MapKind {
        if self.is_linear() { MapKind::Linear } else { MapKind::Perturbed }
    }

    pub fn is_linear(&self) -> bool {
        self.epsilon == 0.0 || self.perturbation.as_ref().is_none_or(|p| p.terms.is_empty())
    }

    /// `|mu_u|`, the expansion factor of the linear part.
    pub fn lambda(&self) -> f64 {
        self.mu_u.abs()
    }

    pub fn log_lambda(&self) -> f64 {
        self.mu_u.abs().ln()
    }

    pub fn mu_u(&self) -> f64 {
        self.mu_u
    }

    pub fn mu_s(&self) -> f64 {
        self.mu_s
    }

    /// Unit unstable and stable eigenvectors of the linear part.
    pub fn e_u(&self) -> [f64; 2] {
        self.e_u
    }

    pub fn e_s(&self) -> [f64; 2] {
        self.e_s
    }

    pub fn certificate(&self) -> Option<&ConeCertificate> {
        self.certificate.as_ref()
    }

    pub fn linear_part(&self) -> AnosovMap {
        cat_map_system(self.matrix).expect("linear part validated at construction")
    }

    /// `Ax + eps p(x)` without reduction mod 1.
    pub fn apply_lift(&self, x: [f64; 2]) -> [f64; 2] {
        let a = to_f64(&self.matrix);
        let mut y = mat::apply(&a, x);
        if let (false, Some(p)) = (self.is_linear(), &self.perturbation) {
            let q = p.eval(x);
            y[0] += self.epsilon * q[0];
            y[1] += self.epsilon * q[1];
        }
        y
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let y = self.apply_lift(x);
        [y[0].rem_euclid(1.0), y[1].rem_euclid(1.0)]
    }

    pub fn derivative(&self, x: [f64; 2]) -> Mat2 {
        let mut a = to_f64(&self.matrix);
        if let (false, Some(p)) = (self.is_linear(), &self.perturbation) {
            let d = p.jacobian(x);
            for i in 0..2 {
                for j in 0..2 {
                    a[i][j] += self.epsilon * d[i][j];
                }
            }
        }
        a
    }

    /// Preimage by Newton's method from the linear preimage.
    pub fn inverse_apply(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        let ainv = to_f64(&mat::inverse_i(&self.matrix));
        let mut y = mat::apply(&ainv, x);
        if self.is_linear() {
            return Ok([y[0].rem_euclid(1.0), y[1].rem_euclid(1.0)]);
        }
        for _ in 0..60 {
            let fy = self.apply_lift(y);
            let r = [wrap(fy[0] - x[0]), wrap(fy[1] - x[1])];
            if r[0].abs().max(r[1].abs()) < 1e-15 {
                return Ok([y[0].rem_euclid(1.0), y[1].rem_euclid(1.0)]);
            }
            let step = mat::apply(&mat::inverse(&self.derivative(y)), r);
            y = [y[0] - step[0], y[1] - step[1]];
        }
        let fy = self.apply_lift(y);
        let res = wrap(fy[0] - x[0]).abs().max(wrap(fy[1] - x[1]).abs());
        if res < 1e-12 {
            Ok([y[0].rem_euclid(1.0), y[1].rem_euclid(1.0)])
        } else {
            Err(LabError::NoConvergence { what: "map inversion".into(), residual: res })
        }
    }
}

/// Representative of `v mod 1` in `[-1/2, 1/2)`.
pub fn wrap(v: f64) -> f64 {
    v - (v + 0.5).floor()
}

/// `x -> Ax + eps p(x)`, certified hyperbolic by invariant cones on an
/// `n x n` grid with a Lipschitz margin for off-grid points.
pub fn perturbed_cat_map(base: &AnosovMap, epsilon: f64, bump: TrigPerturbation, grid_n: usize) -> Result<AnosovMap> {
    if !(epsilon >= 0.0) {
        return Err(LabError::InvalidInput(format!("epsilon must be >= 0, got {epsilon}")));
    }
    bump.validate()?;
    let linear = base.linear_part();
    if epsilon == 0.0 || bump.terms.is_empty() {
        return Ok(linear);
    }
    let candidate = AnosovMap { epsilon, perturbation: Some(bump), ..linear };
    let p = candidate.perturbation.as_ref().expect("set above");
    let margin = epsilon * p.jacobian_lipschitz() * std::f64::consts::SQRT_2 / (2.0 * grid_n as f64);
    let points: Vec<[f64; 2]> = (0..grid_n * grid_n)
        .map(|i| [(i / grid_n) as f64 / grid_n as f64, (i % grid_n) as f64 / grid_n as f64])
        .collect();
    // det > 0 everywhere is needed for the inverse and for orientation.
    let mut min_det = f64::INFINITY;
    for &x in &points {
        let m = candidate.derivative(x);
        let d = mat::det(&m) * det_i(&candidate.matrix) as f64;
        let slack = margin * (2.0 * mat::op_norm(&m) + margin);
        if d - slack <= 0.0 {
            return Err(LabError::ConeViolation { x: x[0], y: x[1], reason: format!("derivative degenerates (det {d:.4})") });
        }
        min_det = min_det.min(d);
    }
    let certify = |alpha_u: f64, alpha_s: f64| -> std::result::Result<[f64; 4], ([f64; 2], String)> {
        let mut b = [f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64];
        for &x in &points {
            let m = candidate.derivative(x);
            let (lo, hi) = cone_step(&m, candidate.e_u, alpha_u, margin).map_err(|e| (x, e))?;
            let minv = mat::inverse(&m);
            let ni = mat::op_norm(&minv);
            let margin_inv = ni * ni * margin / (1.0 - ni * margin).max(1e-12);
            let (slo, shi) = cone_step(&minv, candidate.e_s, alpha_s, margin_inv).map_err(|e| (x, e))?;
            if lo <= 1.0 || slo <= 1.0 {
                return Err((x, "cone vectors are not expanded".into()));
            }
            b = [b[0].min(lo), b[1].max(hi), b[2].min(slo), b[3].max(shi)];
        }
        Ok(b)
    };
    let mut last = ([0.0, 0.0], String::new());
    for &alpha in &CONE_LADDER {
        match certify(alpha, alpha) {
            Ok(b) => {
                let cert = ConeCertificate {
                    half_angle_u: alpha,
                    half_angle_s: alpha,
                    log_expansion_min: b[0].ln(),
                    log_expansion_max: b[1].ln(),
                    log_contraction_min: b[2].ln(),
                    log_contraction_max: b[3].ln(),
                    min_det,
                    grid_n,
                    margin,
                };
                return Ok(AnosovMap { certificate: Some(cert), ..candidate });
            }
            Err(e) => last = e,
        }
    }
    Err(LabError::ConeViolation { x: last.0[0], y: last.0[1], reason: last.1 })
}

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::mat::Mat2;
use crate::systems::bolza::{disk_distance, half_plane_to_disk, mobius};
use crate::systems::FuchsianGroup;

use super::words::word_class;

/// Smooth bump `a exp(1 - 1/(1 - (d/rho)^2))` in the hyperbolic distance `d`
/// from a centre inside the octagon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpTerm {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

/// Conformal factor `sigma` for the metric `e^{2 sigma} g_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConformalFactor {
    Constant { value: f64 },
    /// Bumps supported inside the octagon, extended by the group action.
    Bumps { terms: Vec<BumpTerm> },
    /// `sum a cos(2 pi k . z)` in raw disk coordinates. Not invariant under
    /// the group; accepted only so that the equivariance check can reject it.
    Planar { modes: Vec<([i64; 2], f64)> },
}

pub const EQUIVARIANCE_TOL: f64 = 1e-9;

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Moves a disk point into the octagon centred at 0 by repeatedly applying
/// the side pairing that brings it closest to the centre. The octagon is
/// the Dirichlet domain of 0, so this terminates there.
pub fn fold_to_octagon(group: &FuchsianGroup, mut z: Complex64) -> Complex64 {
    for _ in 0..200 {
        let mut best = z;
        for g in &group.disk_generators {
            let w = mobius(g, z);
            if w.norm() < best.norm() - 1e-15 {
                best = w;
            }
        }
        if best == z {
            break;
        }
        z = best;
    }
    z
}

impl ConformalFactor {
    pub fn zero() -> Self {
        ConformalFactor::Constant { value: 0.0 }
    }

    pub fn bump(amplitude: f64, radius: f64) -> Self {
        ConformalFactor::Bumps { terms: vec![BumpTerm { center: [0.0, 0.0], radius, amplitude }] }
    }

    pub fn scaled(&self, eps: f64) -> Self {
        match self {
            ConformalFactor::Constant { value } => ConformalFactor::Constant { value: eps * value },
            ConformalFactor::Bumps { terms } => ConformalFactor::Bumps {
                terms: terms.iter().map(|t| BumpTerm { amplitude: eps * t.amplitude, ..t.clone() }).collect(),
            },
            ConformalFactor::Planar { modes } => ConformalFactor::Planar { modes: modes.iter().map(|&(k, a)| (k, eps * a)).collect() },
        }
    }

    /// Supports must sit strictly inside the octagon so the equivariant
    /// extension is smooth.
    pub fn validate(&self, group: &FuchsianGroup) -> Result<()> {
        if let ConformalFactor::Bumps { terms } = self {
            for t in terms {
                let c = Complex64::new(t.center[0], t.center[1]);
                if !(t.radius > 0.0) || c.norm() >= 1.0 {
                    return Err(LabError::InvalidInput(format!("bad bump {t:?}")));
                }
                let reach = disk_distance(Complex64::default(), c) + t.radius;
                if reach >= group.inradius() {
                    return Err(LabError::InvalidInput(format!(
                        "bump support reaches distance {reach:.4} from the centre, octagon inradius is {:.4}",
                        group.inradius()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Value at a disk point (folded first for the automorphic kinds).
    pub fn eval_disk(&self, group: &FuchsianGroup, z: Complex64) -> f64 {
        match self {
            ConformalFactor::Constant { value } => *value,
            ConformalFactor::Bumps { terms } => {
                let w = fold_to_octagon(group, z);
                terms
                    .iter()
                    .map(|t| t.amplitude * bump(disk_distance(w, Complex64::new(t.center[0], t.center[1])) / t.radius))
                    .sum()
            }
            ConformalFactor::Planar { modes } => modes
                .iter()
                .map(|&(k, a)| a * (2.0 * std::f64::consts::PI * (k[0] as f64 * z.re + k[1] as f64 * z.im)).cos())
                .sum(),
        }
    }

    pub fn eval_half_plane(&self, group: &FuchsianGroup, w: Complex64) -> f64 {
        self.eval_disk(group, half_plane_to_disk(w))
    }

    /// `max |sigma(g z) - sigma(z)|` over the generators and a fixed sample
    /// of points in the octagon.
    pub fn equivariance_residual(&self, group: &FuchsianGroup) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..16 {
            for r in [0.1, 0.35, 0.6, 0.8] {
                let th = a as f64 * std::f64::consts::PI / 8.0 + 0.1;
                let z = Complex64::from_polar(r, th);
                let s0 = self.eval_disk(group, z);
                for g in &group.disk_generators {
                    worst = worst.max((self.eval_disk(group, mobius(g, z)) - s0).abs());
                }
            }
        }
        worst
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            ConformalFactor::Constant { value } => *value >= 0.0,
            ConformalFactor::Bumps { terms } => terms.iter().all(|t| t.amplitude >= 0.0),
            ConformalFactor::Planar { .. } => false,
        }
    }
}

/// Curve-shortening discretization.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ShorteningDisc {
    pub n_points: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ShorteningDisc {
    fn default() -> Self {
        ShorteningDisc { n_points: 256, tol: 1e-10, max_iter: 60 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShorteningReport {
    pub word: Vec<usize>,
    pub length: f64,
    pub unperturbed: f64,
    pub axis_integral: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

/// Axis frame of a hyperbolic word: `P` with `P^{-1} M P = diag`, so that
/// `P` sends the imaginary axis onto the axis of `M`, and the translation
/// length `L`.
fn axis_frame(m: &Mat2) -> (Mat2, f64) {
    let tr = m[0][0] + m[1][1];
    let disc = (tr * tr - 4.0).sqrt();
    let (mu_big, mu_small) = if tr > 0.0 { ((tr + disc) / 2.0, (tr - disc) / 2.0) } else { ((tr - disc) / 2.0, (tr + disc) / 2.0) };
    let eig = |mu: f64| -> [f64; 2] {
        // (M - mu) v = 0; use the better-conditioned row.
        let r0 = [m[0][0] - mu, m[0][1]];
        let r1 = [m[1][0], m[1][1] - mu];
        let r = if r0[0].hypot(r0[1]) >= r1[0].hypot(r1[1]) { r0 } else { r1 };
        let v = [-r[1], r[0]];
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    };
    let va = eig(mu_big);
    let vr = eig(mu_small);
    // Columns: attracting fixed point to infinity, repelling one to 0.
    let mut p = [[va[0], vr[0]], [va[1], vr[1]]];
    let mut d = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    if d < 0.0 {
        p[0][1] = -p[0][1];
        p[1][1] = -p[1][1];
        d = -d;
    }
    let s = d.sqrt();
    for row in p.iter_mut() {
        for e in row.iter_mut() {
            *e /= s;
        }
    }
    (p, 2.0 * (mu_big / mu_small).abs().sqrt().ln())
}

/// Point at signed distance `r` from the imaginary axis, with foot `i e^t`.
fn fermi(t: f64, r: f64) -> Complex64 {
    Complex64::new(r.tanh(), 1.0 / r.cosh()) * t.exp()
}

struct Functional<'a> {
    group: &'a FuchsianGroup,
    sigma: &'a ConformalFactor,
    frame: Mat2,
    dt: f64,
    n: usize,
}

impl Functional<'_> {
    fn sigma_at(&self, t: f64, r: f64) -> f64 {
        let z = fermi(t, r);
        let p = &self.frame;
        let w = (z * p[0][0] + p[0][1]) / (z * p[1][0] + p[1][1]);
        self.sigma.eval_half_plane(self.group, w)
    }

    fn seg_dist(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let ch = a.cosh() * b.cosh() * self.dt.cosh() - a.sinh() * b.sinh();
        let d = ch.max(1.0).acosh();
        let sh = d.sinh();
        let da = (a.sinh() * b.cosh() * self.dt.cosh() - a.cosh() * b.sinh()) / sh;
        let db = (a.cosh() * b.sinh() * self.dt.cosh() - a.sinh() * b.cosh()) / sh;
        (d, da, db)
    }

    /// Segment energy `d(a, b) e^{sigma(mid)}` and its two partials.
    fn segment(&self, i: usize, a: f64, b: f64) -> (f64, f64, f64) {
        let tm = (i as f64 + 0.5) * self.dt;
        let rm = 0.5 * (a + b);
        let (d, da, db) = self.seg_dist(a, b);
        if let ConformalFactor::Constant { value } = self.sigma {
            let w = value.exp();
            return (d * w, da * w, db * w);
        }
        let w = self.sigma_at(tm, rm).exp();
        // Fourth-order stencil: truncation ~h^4, round-off ~eps/h.
        let h = 1e-3;
        let sr = (8.0 * (self.sigma_at(tm, rm + h) - self.sigma_at(tm, rm - h))
            - (self.sigma_at(tm, rm + 2.0 * h) - self.sigma_at(tm, rm - 2.0 * h)))
            / (12.0 * h);
        (d * w, (da + 0.5 * d * sr) * w, (db + 0.5 * d * sr) * w)
    }

    fn value_grad(&self, r: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n;
        let mut f = 0.0;
        let mut g = vec![0.0; n];
        for i in 0..n {
            let j = (i + 1) % n;
            let (e, ea, eb) = self.segment(i, r[i], r[j]);
            f += e;
            g[i] += ea;
            g[j] += eb;
        }
        (f, g)
    }

    /// Cyclic tridiagonal Hessian `(diag, off)` with `off[i] = H[i][i+1]`,
    /// by central differences of each segment's gradient.
    fn hessian(&self, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let h = 1e-5;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n];
        for i in 0..n {
            let j = (i + 1) % n;
            let (a, b) = (r[i], r[j]);
            let (_, pa, pb) = self.segment(i, a + h, b);
            let (_, ma, mb) = self.segment(i, a - h, b);
            let (_, qa, qb) = self.segment(i, a, b + h);
            let (_, na, nb) = self.segment(i, a, b - h);
            diag[i] += (pa - ma) / (2.0 * h);
            diag[j] += (qb - nb) / (2.0 * h);
            off[i] += 0.25 * ((pb - mb) + (qa - na)) / h;
        }
        (diag, off)
    }
}

/// Tridiagonal solve (Thomas) with sub `a`, diag `b`, super `c`.
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Symmetric cyclic tridiagonal solve via Sherman-Morrison.
fn cyclic_solve(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let corner = off[n - 1];
    let mut sub = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for i in 0..n - 1 {
        sup[i] = off[i];
        sub[i + 1] = off[i];
    }
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= corner * corner / gamma;
    let x = thomas(&sub, &bb, &sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = corner;
    let z = thomas(&sub, &bb, &sup, &u);
    let fact = (x[0] + corner * x[n - 1] / gamma) / (1.0 + z[0] + corner * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `∫ sigma` along the unperturbed closed geodesic, midpoint rule on
/// `n_points` segments.
pub fn axis_integral(group: &FuchsianGroup, word: &[usize], sigma: &ConformalFactor, n_points: usize) -> Result<f64> {
    let class = word_class(group, word)?;
    let (frame, len) = axis_frame(&group.word_matrix(&class.word));
    let f = Functional { group, sigma, frame, dt: len / n_points as f64, n: n_points };
    Ok((0..n_points).map(|i| f.sigma_at((i as f64 + 0.5) * f.dt, 0.0)).sum::<f64>() * f.dt)
}

/// Length of the shortest closed polyline in the class of `word` for the
/// metric `e^{2 sigma} g_0`.
///
/// Vertices sit at fixed arclength parameters `t_i = i L / N` along the
/// `g_0` axis and move along the normal geodesics (Fermi coordinates
/// `(t, r)`), so the closing condition is automatic. The energy is
/// minimized by damped Newton on the cyclic tridiagonal Hessian.
pub fn perturbed_geodesic_length(
    group: &FuchsianGroup,
    word: &[usize],
    sigma: &ConformalFactor,
    disc: &ShorteningDisc,
) -> Result<ShorteningReport> {
    if disc.n_points < 64 {
        return Err(LabError::InvalidInput(format!("n_points = {} < 64", disc.n_points)));
    }
    if !(disc.tol > 0.0) {
        return Err(LabError::InvalidInput("tolerance must be positive".into()));
    }
    sigma.validate(group)?;
    let eq = sigma.equivariance_residual(group);
    if eq > EQUIVARIANCE_TOL {
        return Err(LabError::InvalidInput(format!("conformal factor is not group-invariant (residual {eq:.3e})")));
    }
    let class = word_class(group, word)?;
    let (frame, len) = axis_frame(&group.word_matrix(&class.word));
    let n = disc.n_points;
    let f = Functional { group, sigma, frame, dt: len / n as f64, n };
    let axis_integral = (0..n).map(|i| f.sigma_at((i as f64 + 0.5) * f.dt, 0.0)).sum::<f64>() * f.dt;

    let mut r = vec![0.0; n];
    let (mut val, mut g) = f.value_grad(&r);
    let mut gn = norm(&g);
    let mut it = 0;
    while gn > disc.tol {
        if it == disc.max_iter {
            return Err(LabError::NoConvergence { what: format!("curve shortening for {:?}", class.word), residual: gn });
        }
        it += 1;
        let (diag, off) = f.hessian(&r);
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        let mut p = cyclic_solve(&diag, &off, &neg);
        let slope: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) || p.iter().any(|x| !x.is_finite()) {
            p = neg;
        }
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = r.iter().zip(&p).map(|(a, b)| a + step * b).collect();
            let (tv, tg) = f.value_grad(&trial);
            let tn = norm(&tg);
            // Near the minimum the energy change drowns in round-off, so a
            // smaller gradient also counts as progress.
            if tv <= val - 1e-4 * step * slope.abs() || (tv <= val + 1e-12 * val.abs() && tn < gn) {
                r = trial;
                val = tv;
                g = tg;
                gn = tn;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                return Err(LabError::NoConvergence { what: format!("line search for {:?}", class.word), residual: gn });
            }
        }
    }
    Ok(ShorteningReport { word: class.word, length: val, unperturbed: len, axis_integral, iterations: it, gradient_norm: gn })
}

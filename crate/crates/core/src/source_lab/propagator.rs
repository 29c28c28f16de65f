use rustfft::num_complex::Complex64;
use serde::Serialize;

use super::section::{step_multiplier, Section};
use crate::cohomology::CocycleWeight;
use crate::error::{LabError, Result};
use crate::lp_calculus::{Grid2Field, MappingTorusField};
use crate::mat::{mul_i, Mat2i, IDENTITY_I};
use crate::systems::SystemRef;

#[derive(Clone, Debug)]
pub struct Propagated<F> {
    pub field: F,
    /// True when `t` was not a whole number of slice steps and the result
    /// interpolates linearly between the two neighbouring exact shifts.
    pub interpolated: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PropagatorNorm {
    pub time: f64,
    /// `max_x |prod of one-return multipliers|` over the lattice.
    pub sup_norm: f64,
}

/// `M^q` with entries reduced mod `n`, enough for lattice composition and
/// free of overflow for any `q`.
pub(crate) fn pow_mod(m: &Mat2i, q: i64, n: usize) -> Mat2i {
    let n = n as i64;
    let base = if q < 0 { crate::mat::inverse_i(m) } else { *m };
    let reduce = |a: Mat2i| a.map(|row| row.map(|v| v.rem_euclid(n)));
    let mut e = q.unsigned_abs();
    let mut acc = IDENTITY_I;
    let mut sq = reduce(base);
    while e > 0 {
        if e & 1 == 1 {
            acc = reduce(mul_i(&acc, &sq));
        }
        sq = reduce(mul_i(&sq, &sq));
        e >>= 1;
    }
    acc
}

/// Ordered multiplier of `e^{-q tau X}` on the lattice:
/// `W_q(x) = prod_{k=1}^{q} w(A^{-k} x)` for `q >= 0`, and the reciprocal
/// product over forward iterates for `q < 0`.
pub(crate) fn ordered_product(sec: &Section, w: &Grid2Field, q: i64) -> Grid2Field {
    let n = w.n();
    let mut acc = Grid2Field::constant(n, 1.0).expect("validated grid");
    if q >= 0 {
        for k in 1..=q {
            acc = acc.mul(&w.compose_linear(pow_mod(&sec.matrix, -k, n)));
        }
    } else {
        for k in 0..(-q) {
            acc = acc.zip_with(&w.compose_linear(pow_mod(&sec.matrix, k, n)), |a, b| a / b);
        }
    }
    acc
}

/// `e^{-t X} f` on section data: `f o A^{-q}` times the ordered weight
/// product, with `t = q tau`. Exact lattice permutation for the linear base.
pub fn propagator_apply(
    system: SystemRef<'_>,
    t: f64,
    f: &Grid2Field,
    weight: Option<&CocycleWeight>,
) -> Result<Propagated<Grid2Field>> {
    let sec = Section::of(system)?;
    let q = sec.returns(t)?;
    let n = f.n();
    let moved = f.compose_linear(pow_mod(&sec.matrix, -q, n));
    let field = match step_multiplier(weight, sec.tau, n)? {
        None => moved,
        Some(w) => moved.mul(&ordered_product(&sec, &w, q)),
    };
    Ok(Propagated { field, interpolated: false })
}

/// One return of the weighted transfer, `f -> (w f) o A^{-1}`.
pub(crate) fn step_back(sec: &Section, f: &Grid2Field, w: Option<&Grid2Field>) -> Grid2Field {
    let g = match w {
        Some(w) => f.mul(w),
        None => f.clone(),
    };
    g.compose_linear(pow_mod(&sec.matrix, -1, f.n()))
}

/// Inverse of `step_back`: `g -> (g o A) / w`.
pub(crate) fn step_forward(sec: &Section, g: &Grid2Field, w: Option<&Grid2Field>) -> Grid2Field {
    let f = g.compose_linear(sec.matrix);
    match w {
        Some(w) => f.zip_with(w, |a, b| a / b),
        None => f,
    }
}

/// Discrete generator over one return, `(u - e^{-tau X} u) / tau`. It obeys
/// the same telescoping identity as the flow generator, exactly.
pub fn generator_apply(system: SystemRef<'_>, u: &Grid2Field, weight: Option<&CocycleWeight>) -> Result<Grid2Field> {
    let sec = Section::of(system)?;
    let w = step_multiplier(weight, sec.tau, u.n())?;
    Ok(u.sub(&step_back(&sec, u, w.as_ref())).scale(1.0 / sec.tau))
}

/// Sup-norm operator norm of `e^{-t X}` on lattice data: a composition
/// preserves the sup norm, so only the multiplier matters.
pub fn propagator_sup_norm(system: SystemRef<'_>, t: f64, weight: Option<&CocycleWeight>, n: usize) -> Result<PropagatorNorm> {
    let sec = Section::of(system)?;
    let q = sec.returns(t)?;
    let sup_norm = match step_multiplier(weight, sec.tau, n)? {
        None => 1.0,
        Some(w) => ordered_product(&sec, &w, q).max_abs(),
    };
    Ok(PropagatorNorm { time: t, sup_norm })
}

/// `e^{-t X} u` on mapping-torus data of a constant-roof suspension.
///
/// The weight is read as constant along each fibre of the fundamental
/// domain, so `log W(x, j) = delta sum_{i=1}^{m} v(A^{q(j-i)} x)` with
/// `delta = c / n_s` and `q(l) = floor(l / n_s)`. Times off the slice
/// lattice interpolate between neighbouring shifts when permitted.
pub fn propagator_apply_torus(
    system: SystemRef<'_>,
    t: f64,
    u: &MappingTorusField,
    weight: Option<&CocycleWeight>,
    allow_interpolation: bool,
) -> Result<Propagated<MappingTorusField>> {
    let sec = Section::of(system)?;
    if !sec.is_flow {
        return Err(LabError::InvalidInput("mapping-torus fields need a suspension flow".into()));
    }
    if u.matrix() != sec.matrix {
        return Err(LabError::InvalidInput("field lives on a different mapping torus".into()));
    }
    let ns = u.spec().n_s as i64;
    let delta = sec.tau / ns as f64;
    let steps = t / delta;
    let lo = steps.floor();
    let frac = steps - lo;
    if frac.abs() <= 1e-9 || (1.0 - frac).abs() <= 1e-9 {
        let field = exact_torus_shift(&sec, u, steps.round() as i64, weight, delta)?;
        return Ok(Propagated { field, interpolated: false });
    }
    if !allow_interpolation {
        return Err(LabError::InvalidInput(format!(
            "time {t} is not a multiple of the slice step {delta}; enable interpolation to proceed"
        )));
    }
    let a = exact_torus_shift(&sec, u, lo as i64, weight, delta)?;
    let b = exact_torus_shift(&sec, u, lo as i64 + 1, weight, delta)?;
    let field = a.zip_with(&b, |x, y| x.scale(1.0 - frac).add(&y.scale(frac)));
    Ok(Propagated { field, interpolated: true })
}

fn exact_torus_shift(
    sec: &Section,
    u: &MappingTorusField,
    m: i64,
    weight: Option<&CocycleWeight>,
    delta: f64,
) -> Result<MappingTorusField> {
    let shifted = u.shift_slices(m);
    let Some(w) = weight else { return Ok(shifted) };
    w.validate()?;
    let spec = u.spec();
    let (n, ns) = (spec.n_side, spec.n_s as i64);
    let v = w.field().resample(n)?.real_part();
    let phase = matches!(w, CocycleWeight::Phase(_));
    // Log-weight accumulated from slice j back (or forward) m steps.
    let slices: Vec<Grid2Field> = (0..ns)
        .map(|j| {
            let mut acc = Grid2Field::zeros(n).expect("validated grid");
            let (range, sign): (Vec<i64>, f64) = if m >= 0 {
                ((1..=m).map(|i| j - i).collect(), 1.0)
            } else {
                ((0..-m).map(|i| j + i).collect(), -1.0)
            };
            for l in range {
                let q = l.div_euclid(ns);
                acc = acc.add(&v.compose_linear(pow_mod(&sec.matrix, q, n)));
            }
            let scale = sign * delta;
            acc.map(|z| {
                if phase {
                    Complex64::from_polar(1.0, scale * z.re)
                } else {
                    Complex64::new((scale * z.re).exp(), 0.0)
                }
            })
        })
        .collect();
    Ok(shifted.map_slices(|j, g| g.mul(&slices[j])))
}

/// Residual of the discrete transport identity
/// `A' u = A' e^{-q tau X} u + tau sum_{i<q} A' e^{-i tau X} X_tau u`,
/// relative to the largest sup norm among the pieces. Pure algebra on
/// computed fields.
pub fn telescoping_residual(
    system: SystemRef<'_>,
    u: &Grid2Field,
    a: &crate::lp_calculus::ConeSymbol,
    h: f64,
    t: f64,
    weight: Option<&CocycleWeight>,
) -> Result<f64> {
    let sec = Section::of(system)?;
    let q = sec.returns(t)?;
    if q < 0 {
        return Err(LabError::InvalidInput("telescoping needs t >= 0".into()));
    }
    let w = step_multiplier(weight, sec.tau, u.n())?;
    let op = |f: &Grid2Field| crate::lp_calculus::band_filter_apply(f, a, h);
    let xu = u.sub(&step_back(&sec, u, w.as_ref())).scale(1.0 / sec.tau);
    let mut acc = Grid2Field::zeros(u.n())?;
    let mut term = xu;
    let mut moved = u.clone();
    let mut scale = 0.0f64;
    for _ in 0..q {
        let piece = op(&term)?.scale(sec.tau);
        scale = scale.max(piece.max_abs());
        acc = acc.add(&piece);
        term = step_back(&sec, &term, w.as_ref());
        moved = step_back(&sec, &moved, w.as_ref());
    }
    let lhs = op(u)?;
    let far = op(&moved)?;
    let scale = scale.max(lhs.max_abs()).max(far.max_abs());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs.sub(&far.add(&acc)).max_abs() / scale)
}

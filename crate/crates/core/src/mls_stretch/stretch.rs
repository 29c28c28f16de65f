use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::lp_calculus::{Grid2Field, MappingTorusField};
use crate::orbits::{enumerate_periodic_orbits, OrbitSet, PeriodicOrbit, DEFAULT_ORBIT_BUDGET};
use crate::systems::AnosovFlow;

/// Identifier of a roof function: a digest of its lattice values, so two
/// stretches can be chained only when the intermediate roofs agree exactly.
pub fn roof_id(r: &Grid2Field) -> String {
    let mut h = Sha256::new();
    h.update((r.n() as u64).to_le_bytes());
    for v in r.values() {
        h.update(v.re.to_le_bytes());
        h.update(v.im.to_le_bytes());
    }
    let d = h.finalize();
    let hex: String = d.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("roof:{hex}")
}

/// Infinitesimal stretch of a suspension flow relative to a reference one,
/// constant along each fibre.
///
/// The density is kept as an ordered product of roof ratios
/// `prod_k num_k / den_k`, evaluated pointwise at orbit points, so orbit
/// integrals against the reference roof reproduce target periods to
/// round-off. `a` holds its lattice values.
#[derive(Clone, Debug)]
pub struct StretchField {
    pub a: Grid2Field,
    pub reference: String,
    pub target: String,
    reference_roof: Grid2Field,
    factors: Vec<(Grid2Field, Grid2Field)>,
}

fn check_roof(r: &Grid2Field, name: &str) -> Result<Grid2Field> {
    if r.max_im_abs() > 1e-12 {
        return Err(LabError::InvalidInput(format!("roof {name} must be real")));
    }
    let r = r.real_part();
    let min = r.min_re();
    if !(min > 0.0) {
        return Err(LabError::InvalidInput(format!("roof {name} must be strictly positive, min is {min}")));
    }
    Ok(r)
}

/// Stretch `a = r' / r` taking the `r`-suspension to the `r'`-suspension
/// over a common base.
pub fn stretch_from_roofs(r: &Grid2Field, r_prime: &Grid2Field) -> Result<StretchField> {
    let r = check_roof(r, "r")?;
    let rp = check_roof(r_prime, "r'")?;
    if r.n() != rp.n() {
        return Err(LabError::InvalidInput(format!("roofs live on different grids ({} vs {})", r.n(), rp.n())));
    }
    Ok(StretchField {
        a: rp.zip_with(&r, |x, y| Complex64::new(x.re / y.re, 0.0)),
        reference: roof_id(&r),
        target: roof_id(&rp),
        reference_roof: r.clone(),
        factors: vec![(rp, r)],
    })
}

impl StretchField {
    pub fn reference_roof(&self) -> &Grid2Field {
        &self.reference_roof
    }

    /// Density at a base point.
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.factors.iter().map(|(num, den)| num.eval_re(x) / den.eval_re(x)).product()
    }

    /// `∫_{gamma_r} a = sum_i r(x_i) a(x_i)` over the closed orbit of the
    /// reference flow through the base orbit.
    pub fn orbit_integral(&self, orbit: &PeriodicOrbit) -> f64 {
        let mut terms: Vec<f64> = orbit.points.iter().map(|&x| self.reference_roof.eval_re(x) * self.eval(x)).collect();
        terms.sort_by(f64::total_cmp);
        terms.iter().sum()
    }

    /// `a_{r -> r''} = a_{r' -> r''} a_{r -> r'}`: `next` must start where
    /// `self` ends.
    pub fn compose(&self, next: &StretchField) -> Result<StretchField> {
        if next.reference != self.target {
            return Err(LabError::InvalidInput(format!(
                "cannot chain stretches: {} ends at {} but the next one starts at {}",
                self.reference, self.target, next.reference
            )));
        }
        let mut factors = self.factors.clone();
        factors.extend(next.factors.iter().cloned());
        Ok(StretchField {
            a: self.a.mul(&next.a),
            reference: self.reference.clone(),
            target: next.target.clone(),
            reference_roof: self.reference_roof.clone(),
            factors,
        })
    }

    /// `a - 1` on the lattice.
    pub fn deviation(&self) -> Grid2Field {
        self.a.map(|z| Complex64::new(z.re - 1.0, 0.0))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MlsRow {
    pub id: String,
    pub steps: usize,
    pub length_ref: f64,
    pub length_target: f64,
    /// `L_{r'} / L_r - 1`.
    pub ratio_minus_one: f64,
    /// `(1 / L_r) ∫_{gamma_r} (a - 1)`, the first-order prediction.
    pub stretch_average: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MlsComparison {
    pub rows: Vec<MlsRow>,
    pub max_abs_residual: f64,
    pub max_period: usize,
}

impl MlsComparison {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,steps,length_ref,length_target,ratio_minus_one,stretch_average,residual\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                r.id, r.steps, r.length_ref, r.length_target, r.ratio_minus_one, r.stretch_average, r.residual
            ));
        }
        s
    }
}

fn same_base(a: &AnosovFlow, b: &AnosovFlow) -> Result<()> {
    if a.base().matrix() != b.base().matrix() || !a.base().is_linear() || !b.base().is_linear() {
        return Err(LabError::InvalidInput("roof comparison needs a common linear base".into()));
    }
    Ok(())
}

/// Periods of both flows over every primitive orbit up to `max_period`,
/// with the stretch average as the first-order term. In the roof model the
/// stretch average equals `L_{r'} / L_r - 1` identically, so the residual
/// column measures round-off only.
pub fn mls_compare(flow_r: &AnosovFlow, flow_rp: &AnosovFlow, max_period: usize) -> Result<MlsComparison> {
    same_base(flow_r, flow_rp)?;
    let set = enumerate_periodic_orbits(flow_r.base(), max_period, DEFAULT_ORBIT_BUDGET)?;
    mls_compare_on(flow_r, flow_rp, &set)
}

pub fn mls_compare_on(flow_r: &AnosovFlow, flow_rp: &AnosovFlow, set: &OrbitSet) -> Result<MlsComparison> {
    same_base(flow_r, flow_rp)?;
    let stretch = stretch_from_roofs(flow_r.roof(), flow_rp.roof())?;
    let rows: Vec<MlsRow> = set
        .orbits
        .par_iter()
        .map(|o| {
            let length_ref = flow_r.period_of(&o.points);
            let length_target = flow_rp.period_of(&o.points);
            let ratio_minus_one = length_target / length_ref - 1.0;
            let mut dev: Vec<f64> = o.points.iter().map(|&x| flow_r.roof_at(x) * (stretch.eval(x) - 1.0)).collect();
            dev.sort_by(f64::total_cmp);
            let stretch_average = dev.iter().sum::<f64>() / length_ref;
            MlsRow {
                id: o.id(),
                steps: o.period,
                length_ref,
                length_target,
                ratio_minus_one,
                stretch_average,
                residual: ratio_minus_one - stretch_average,
            }
        })
        .collect();
    let max_abs_residual = rows.iter().fold(0.0f64, |m, r| m.max(r.residual.abs()));
    Ok(MlsComparison { rows, max_abs_residual, max_period: set.max_period })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReparamReport {
    /// `max |∫ a - ∫ a'|` over the checked orbits.
    pub max_discrepancy: f64,
    pub orbits_checked: usize,
    /// Smallest `1 + Xu` seen on the lattice and at quadrature nodes.
    pub min_jacobian: f64,
}

// Eight-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
/// Least number of quadrature subintervals per unit of orbit parameter;
/// finer traces get one subinterval per cycle of their top frequency.
const MIN_SUBDIV: usize = 16;

/// `u` along a closed orbit as a trigonometric interpolant in the orbit
/// parameter `sigma in [0, p)`, where segment `i` covers `[i, i + 1)` at
/// normalized height `sigma - i`. The twist makes the samples periodic.
struct OrbitTrace {
    period: f64,
    /// Coefficients `c_m`, `m = 0..=N/2`, of `Re sum c_m e^{2 pi i m sigma / p}`
    /// with interior terms doubled.
    coeffs: Vec<Complex64>,
}

impl OrbitTrace {
    fn new(u: &MappingTorusField, orbit: &PeriodicOrbit, planner: &mut FftPlanner<f64>) -> Self {
        let ns = u.spec().n_s;
        let n = orbit.period * ns;
        let mut data: Vec<Complex64> = orbit
            .points
            .iter()
            .flat_map(|&x| u.slices().iter().map(move |g| Complex64::new(g.eval_re(x), 0.0)))
            .collect();
        planner.plan_fft_forward(n).process(&mut data);
        let half = n / 2;
        let coeffs = (0..=half)
            .map(|m| {
                let c = data[m] / n as f64;
                if m == 0 || (n % 2 == 0 && m == half) {
                    c
                } else {
                    2.0 * c
                }
            })
            .collect();
        OrbitTrace { period: orbit.period as f64, coeffs }
    }

    /// `(U(sigma), U'(sigma))`.
    fn eval(&self, sigma: f64) -> (f64, f64) {
        let w = std::f64::consts::TAU / self.period;
        let z = Complex64::from_polar(1.0, w * sigma);
        let mut zm = Complex64::new(1.0, 0.0);
        let (mut v, mut d) = (0.0, 0.0);
        for (m, c) in self.coeffs.iter().enumerate() {
            let t = c * zm;
            v += t.re;
            d -= w * m as f64 * t.im;
            zm *= z;
        }
        (v, d)
    }
}

/// Reparameterized stretch check `a' = (1 + Xu) a o Upsilon_u` along every
/// closed orbit of the reference flow up to `max_period`.
///
/// `Upsilon_u` moves a point by flow time `u`; along an orbit `u` is the
/// trigonometric interpolant of its slice samples, and `Xu = U' / r`. The
/// orbit integral of `a'` is assembled piecewise: `a o Upsilon_u` jumps where
/// `t + U(t)` crosses a segment boundary, located by bisection on that
/// increasing function, and `1 + Xu` is integrated by Gauss-Legendre
/// quadrature between jumps. The result is compared with `∫ a`.
pub fn reparam_invariance_check(flow: &AnosovFlow, a: &StretchField, u: &MappingTorusField, max_period: usize) -> Result<ReparamReport> {
    if roof_id(&flow.roof().real_part()) != a.reference {
        return Err(LabError::InvalidInput("stretch is not based on this flow's roof".into()));
    }
    if u.matrix() != flow.base().matrix() {
        return Err(LabError::InvalidInput("test function lives on a different mapping torus".into()));
    }
    let min_lattice = lattice_jacobian_min(flow, u);
    if !(min_lattice > 0.0) {
        return Err(LabError::InvalidInput(format!("1 + Xu reaches {min_lattice:.3e} <= 0: not a reparameterization")));
    }
    let set = enumerate_periodic_orbits(flow.base(), max_period, DEFAULT_ORBIT_BUDGET)?;
    if u.max_abs() == 0.0 {
        // Upsilon_0 is the identity and a' = a.
        return Ok(ReparamReport { max_discrepancy: 0.0, orbits_checked: set.orbits.len(), min_jacobian: min_lattice });
    }
    let per_orbit = set
        .orbits
        .par_iter()
        .map_init(FftPlanner::new, |planner, o| orbit_discrepancy(flow, a, u, o, planner))
        .collect::<Result<Vec<_>>>()?;
    let (max_discrepancy, min_jacobian) =
        per_orbit.iter().fold((0.0f64, min_lattice), |(d, j), &(od, oj)| (d.max(od), j.min(oj)));
    Ok(ReparamReport { max_discrepancy, orbits_checked: set.orbits.len(), min_jacobian })
}

/// `min (1 + Xu)` on the lattice with a centred difference in the height.
fn lattice_jacobian_min(flow: &AnosovFlow, u: &MappingTorusField) -> f64 {
    let spec = u.spec();
    let (n, ns) = (spec.n_side, spec.n_s as i64);
    let roof = flow.roof().resample(n).map(|r| r.real_part());
    let Ok(roof) = roof else { return f64::NAN };
    let mut min = f64::INFINITY;
    for j in 0..ns {
        let up = u.slice_at(j + 1);
        let down = u.slice_at(j - 1);
        for (idx, (p, m)) in up.values().iter().zip(down.values()).enumerate() {
            let xu = (p.re - m.re) * ns as f64 / (2.0 * roof.values()[idx].re);
            min = min.min(1.0 + xu);
        }
    }
    min
}

fn orbit_discrepancy(
    flow: &AnosovFlow,
    a: &StretchField,
    u: &MappingTorusField,
    orbit: &PeriodicOrbit,
    planner: &mut FftPlanner<f64>,
) -> Result<(f64, f64)> {
    let p = orbit.period;
    let roofs: Vec<f64> = orbit.points.iter().map(|&x| flow.roof_at(x)).collect();
    let dens: Vec<f64> = orbit.points.iter().map(|&x| a.eval(x)).collect();
    let mut starts = Vec::with_capacity(p + 1);
    let mut acc = 0.0;
    for r in &roofs {
        starts.push(acc);
        acc += r;
    }
    let length = acc;
    starts.push(length);
    let trace = OrbitTrace::new(u, orbit, planner);
    let subdiv = MIN_SUBDIV.max(u.spec().n_s / 2) as f64;

    let time_of = |sigma: f64| -> f64 {
        let i = (sigma.floor() as usize).min(p - 1);
        starts[i] + roofs[i] * (sigma - i as f64)
    };
    let big_f = |sigma: f64| time_of(sigma) + trace.eval(sigma).0;
    let f0 = big_f(0.0);

    // Parameters where t + U(t) hits a segment start, shifted into [f0, f0 + L).
    let mut breaks: Vec<f64> = (0..=p).map(|i| i as f64).collect();
    for &tk in &starts[..p] {
        let target = tk + length * ((f0 - tk) / length).ceil();
        if target >= f0 + length {
            continue;
        }
        let (mut lo, mut hi) = (0.0f64, p as f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if big_f(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        breaks.push(0.5 * (lo + hi));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-15);

    let mut total = 0.0;
    let mut min_jac = f64::INFINITY;
    for w in breaks.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1 <= s0 {
            continue;
        }
        let mid = 0.5 * (s0 + s1);
        let i = (mid.floor() as usize).min(p - 1);
        let landed = big_f(mid).rem_euclid(length);
        let k = starts[..p].partition_point(|&t| t <= landed).saturating_sub(1);
        let pieces = ((s1 - s0) * subdiv).ceil().max(1.0) as usize;
        let h = (s1 - s0) / pieces as f64;
        let mut integral = 0.0;
        for q in 0..pieces {
            let c = s0 + (q as f64 + 0.5) * h;
            for (x, wgt) in GL_NODES.iter().zip(GL_WEIGHTS) {
                for sign in [-1.0, 1.0] {
                    let jac = roofs[i] + trace.eval(c + sign * 0.5 * h * x).1;
                    min_jac = min_jac.min(jac / roofs[i]);
                    integral += 0.5 * h * wgt * jac;
                }
            }
        }
        total += dens[k] * integral;
    }
    if !(min_jac > 0.0) {
        return Err(LabError::InvalidInput(format!(
            "1 + Xu reaches {min_jac:.3e} <= 0 on orbit {}: not a reparameterization",
            orbit.id()
        )));
    }
    let direct: f64 = roofs.iter().zip(&dens).map(|(r, d)| r * d).sum();
    Ok(((total - direct).abs(), min_jac))
}

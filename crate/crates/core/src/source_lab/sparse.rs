use serde::Serialize;

use super::propagator::ordered_product;
use super::section::{step_multiplier, Section};
use crate::cohomology::CocycleWeight;
use crate::error::{LabError, Result};
use crate::fit::{self, LineFit};
use crate::lp_calculus::{ConeSymbol, CutoffSpec, Grid2Field};
use crate::mat::{inverse_i, transpose_i, Mat2i};
use crate::systems::SystemRef;
use crate::thresholds::{orbit_rates, MetricChoice};

/// `amp cos(2 pi k.x + phase)` with an exact integer frequency.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SparseMode {
    pub k: [i128; 2],
    pub amp: f64,
    pub phase: f64,
}

/// Real trigonometric series with few modes at arbitrarily high integer
/// frequencies. Transport by the linear map is exact integer arithmetic,
/// which lets the probe see frequencies far beyond any FFT grid.
#[derive(Clone, Debug, Serialize)]
pub struct SparseField {
    pub modes: Vec<SparseMode>,
}

fn xi_norm(k: [i128; 2]) -> f64 {
    std::f64::consts::TAU * (k[0] as f64).hypot(k[1] as f64)
}

fn apply_checked(m: &Mat2i, k: [i128; 2]) -> Option<[i128; 2]> {
    let row = |r: [i64; 2]| (r[0] as i128).checked_mul(k[0])?.checked_add((r[1] as i128).checked_mul(k[1])?);
    Some([row(m[0])?, row(m[1])?])
}

impl SparseField {
    pub fn constant(c: f64) -> Self {
        SparseField { modes: vec![SparseMode { k: [0, 0], amp: c, phase: 0.0 }] }
    }

    /// `u o M^T`-style frequency transport `k -> M k` on every mode.
    pub fn transport(&self, m: &Mat2i) -> Result<SparseField> {
        let modes = self
            .modes
            .iter()
            .map(|md| {
                apply_checked(m, md.k)
                    .map(|k| SparseMode { k, ..*md })
                    .ok_or_else(|| LabError::InvalidInput("frequency transport overflows i128".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SparseField { modes })
    }

    /// Values on the lattice `(i/N, j/N)`, row-major, with per-mode weights.
    pub fn lattice_values(&self, n: usize, mode_weight: impl Fn(&SparseMode) -> f64) -> Vec<f64> {
        let table: Vec<f64> = (0..n).map(|r| (std::f64::consts::TAU * r as f64 / n as f64).cos()).collect();
        let mut out = vec![0.0; n * n];
        let ni = n as i128;
        for md in &self.modes {
            let c = md.amp * mode_weight(md);
            if c == 0.0 {
                continue;
            }
            let (k0, k1) = (md.k[0].rem_euclid(ni) as usize, md.k[1].rem_euclid(ni) as usize);
            if md.phase == 0.0 {
                for i in 0..n {
                    let base = k0 * i;
                    for j in 0..n {
                        out[i * n + j] += c * table[(base + k1 * j) % n];
                    }
                }
            } else {
                for i in 0..n {
                    for j in 0..n {
                        let r = (k0 * i + k1 * j) % n;
                        out[i * n + j] += c * (std::f64::consts::TAU * r as f64 / n as f64 + md.phase).cos();
                    }
                }
            }
        }
        out
    }

    /// `sup_j 2^{j s} ||phi_j u||` with the sup taken over the `N`-lattice.
    pub fn hz_norm(&self, s: f64, n: usize) -> f64 {
        let cutoff = CutoffSpec::default();
        let mut bands: Vec<u32> = Vec::new();
        for md in &self.modes {
            let r = xi_norm(md.k);
            let top = if r <= 1.0 { 1 } else { r.log2().ceil() as u32 + 1 };
            for j in 0..=top {
                if cutoff.phi(j, r) != 0.0 && !bands.contains(&j) {
                    bands.push(j);
                }
            }
        }
        bands
            .into_iter()
            .map(|j| {
                let vals = self.lattice_values(n, |md| cutoff.phi(j, xi_norm(md.k)));
                let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                (s * j as f64).exp2() * sup
            })
            .fold(0.0f64, f64::max)
    }
}

/// Critical field `sum_{m=0}^{depth} |xi_m|^{-rho} cos(2 pi k_m.x)` along
/// the backward covector orbit `k_m = (A^T)^m k_0` of `k_0 = (1, 0)`,
/// which accumulates on `E*_s`. Each dyadic band holds at most one mode,
/// so its `C^rho` norm stays bounded in `depth`.
pub fn critical_field(system: SystemRef<'_>, rho: f64, depth: usize) -> Result<SparseField> {
    let sec = Section::of(system)?;
    let back = transpose_i(&sec.matrix);
    let mut k: [i128; 2] = [1, 0];
    let mut modes = Vec::with_capacity(depth + 1);
    for m in 0..=depth {
        if m > 0 {
            k = apply_checked(&back, k).ok_or_else(|| LabError::InvalidInput(format!("depth {depth} overflows i128 frequencies")))?;
        }
        modes.push(SparseMode { k, amp: xi_norm(k).powf(-rho), phase: 0.0 });
    }
    Ok(SparseField { modes })
}

/// Largest depth whose frequencies fit in `i128` for the system.
pub fn max_critical_depth(system: SystemRef<'_>) -> Result<usize> {
    let sec = Section::of(system)?;
    let back = transpose_i(&sec.matrix);
    let mut k: [i128; 2] = [1, 0];
    let mut d = 0;
    while let Some(next) = apply_checked(&back, k) {
        // Leave headroom for the forward transport check in the probe.
        if next[0].unsigned_abs().max(next[1].unsigned_abs()) > (1u128 << 120) {
            break;
        }
        k = next;
        d += 1;
    }
    Ok(d)
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockDecayPoint {
    pub time: f64,
    /// `Lambda_{C_0}(T)` from the sampled cone.
    pub lambda_c0: f64,
    pub sup: f64,
    pub value: f64,
    pub modes_kept: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockDecayReport {
    pub points: Vec<BlockDecayPoint>,
    /// Fit of `ln value` against `T` over points with a positive value.
    pub fit: Option<LineFit>,
    /// `max over periodic orbits of (weight rate - rho * unstable rate)`.
    pub k_rate: f64,
    pub rho: f64,
    pub h: f64,
    pub hz_norm: f64,
}

/// `Lambda_{C_0}(T) = sup_{eta in C_0} |eta| / |(A^q)^T eta|` over 257
/// directions of the cone.
fn cone_lambda(sec: &Section, a: &ConeSymbol, q: i64) -> Result<f64> {
    let axis = a.direction.as_ref().ok_or_else(|| LabError::InvalidInput("block probe needs a conical A".into()))?;
    let base = axis[1].atan2(axis[0]);
    let m = transpose_i(&crate::mat::pow_i(&sec.matrix, q));
    let mf = crate::mat::to_f64(&m);
    Ok((0..=256)
        .map(|i| base - a.half_angle + 2.0 * a.half_angle * i as f64 / 256.0)
        .map(|t| 1.0 / crate::mat::norm2(crate::mat::apply(&mf, [t.cos(), t.sin()])))
        .fold(0.0f64, f64::max))
}

/// Profile of `||e^{-T X} P_h^T u||_inf / (h^rho ||u||_{C^rho})` over `T`.
///
/// `P_h^T` multiplies the mode at `xi` by `a(h xi) chi(2 h |xi| Lambda_T)`,
/// with `chi = 1` above 1 and `0` below `1/2`. The transported field is
/// evaluated on the `N`-lattice with the ordered weight product.
pub fn block_decay_probe(
    system: SystemRef<'_>,
    u: &SparseField,
    a: &ConeSymbol,
    rho: f64,
    t_list: &[f64],
    h: f64,
    weight: Option<&CocycleWeight>,
    lattice_n: usize,
) -> Result<BlockDecayReport> {
    let sec = Section::of(system)?;
    if !(h > 0.0 && h <= 1.0) {
        return Err(LabError::InvalidInput(format!("scale h must lie in (0, 1], got {h}")));
    }
    let w = step_multiplier(weight, sec.tau, lattice_n)?;
    let cutoff = a.cutoff;
    let chi = |r: f64| cutoff.step(2.0 * r - 1.0);
    let hz = u.hz_norm(rho, lattice_n);
    let mut points = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let q = sec.returns(t)?;
        let lambda_c0 = cone_lambda(&sec, a, q)?;
        let mult = |md: &SparseMode| {
            let r = xi_norm(md.k);
            let dir = [md.k[0] as f64, md.k[1] as f64];
            a.eval(&[h * std::f64::consts::TAU * dir[0], h * std::f64::consts::TAU * dir[1]]) * chi(2.0 * h * r * lambda_c0)
        };
        let kept: Vec<SparseMode> = u
            .modes
            .iter()
            .filter_map(|md| {
                let p = mult(md);
                (p != 0.0).then_some(SparseMode { amp: md.amp * p, ..*md })
            })
            .collect();
        // e^{-qX} sends frequency k to (A^{-q})^T k; one return at a time
        // keeps intermediate products inside i128.
        let step = transpose_i(&inverse_i(&sec.matrix));
        let mut moved = SparseField { modes: kept.clone() };
        for _ in 0..q {
            moved = moved.transport(&step)?;
        }
        let mut vals = moved.lattice_values(lattice_n, |_| 1.0);
        if let Some(w) = &w {
            let prod = ordered_product(&sec, w, q);
            for (v, p) in vals.iter_mut().zip(prod.values()) {
                *v *= p.norm();
            }
        }
        let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let value = if hz > 0.0 { sup / (h.powf(rho) * hz) } else { 0.0 };
        points.push(BlockDecayPoint { time: t, lambda_c0, sup, value, modes_kept: kept.len() });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().filter(|p| p.value > 0.0).map(|p| (p.time, p.value.ln())).unzip();
    let zero;
    let rate_weight = match weight {
        Some(w) => w,
        None => {
            zero = CocycleWeight::Potential(Grid2Field::zeros(16)?);
            &zero
        }
    };
    let k_rate = orbit_rates(system, rate_weight, 8, MetricChoice::Flat)?
        .iter()
        .map(|r| r.weight_rate - rho * r.unstable_rate)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BlockDecayReport { fit: fit::fit_line(&x, &y), points, k_rate, rho, h, hz_norm: hz })
}

use rustfft::num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::lp_calculus::{Grid2Field, MappingTorusField};

use super::livsic::{livsic_solve, LivsicSolution, RESIDUAL_TOL};

const STENCIL: usize = 10;

/// Mean of `∫_0^1 f ds` tolerated as quadrature error before it counts as
/// an obstruction.
pub const QUADRATURE_MEAN_TOL: f64 = 1e-9;

/// `∫_a^b L_i(t) dt` for the Lagrange basis on `nodes`.
fn lagrange_weights(nodes: &[f64], a: f64, b: f64) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            // Coefficients of prod_{j != i} (t - x_j) / (x_i - x_j), low degree first.
            let mut poly = vec![1.0];
            for (j, &xj) in nodes.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = xi - xj;
                let mut next = vec![0.0; poly.len() + 1];
                for (p, &c) in poly.iter().enumerate() {
                    next[p + 1] += c / d;
                    next[p] -= c * xj / d;
                }
                poly = next;
            }
            poly.iter().enumerate().map(|(p, &c)| c * (b.powi(p as i32 + 1) - a.powi(p as i32 + 1)) / (p as f64 + 1.0)).sum()
        })
        .collect()
}

/// Weights for the cell `[m, m+1]` on nodes `0..=ns` (unit spacing), using
/// the `STENCIL` nodes nearest the cell that stay inside `[0, ns]`.
fn cell_weights(ns: usize) -> Vec<(usize, Vec<f64>)> {
    let width = STENCIL.min(ns + 1);
    (0..ns)
        .map(|m| {
            let start = (m as i64 - (width as i64 / 2 - 1)).clamp(0, (ns + 1 - width) as i64) as usize;
            // Nodes relative to the cell keep the monomial expansion well conditioned.
            let nodes: Vec<f64> = (start..start + width).map(|k| k as f64 - m as f64).collect();
            (start, lagrange_weights(&nodes, 0.0, 1.0))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SuspensionSolution {
    pub u: MappingTorusField,
    pub base: LivsicSolution,
    /// `max |u(x, 1) - u(Ax, 0)|` on the lattice.
    pub twist_defect: f64,
}

/// Solves `∂_s u = f` on the mapping torus.
///
/// `u(x, s) = u_0(x) + ∫_0^s f(x, t) dt`, and the identification
/// `(x, 1) ~ (Ax, 0)` forces `u_0 o A - u_0 = ∫_0^1 f ds`. The `s`
/// integrals use degree-9 interpolatory quadrature on the slice samples,
/// never reaching across the identification.
pub fn suspension_livsic_solve(f: &MappingTorusField) -> Result<SuspensionSolution> {
    let spec = f.spec();
    let (n, ns) = (spec.n_side, spec.n_s);
    let h = 1.0 / ns as f64;
    let samples: Vec<Grid2Field> = (0..=ns as i64).map(|m| f.slice_at(m)).collect();
    let weights = cell_weights(ns);
    // cumulative[m][p] = ∫_0^{m h} f(x_p, s) ds
    let mut cumulative = vec![vec![Complex64::default(); n * n]; ns + 1];
    for (m, (start, w)) in weights.iter().enumerate() {
        let (done, rest) = cumulative.split_at_mut(m + 1);
        let prev = &done[m];
        let next = &mut rest[0];
        for p in 0..n * n {
            let cell: Complex64 = w.iter().enumerate().map(|(q, wq)| samples[start + q].values()[p] * *wq).sum();
            next[p] = prev[p] + cell * h;
        }
    }
    let mut total = Grid2Field::from_values(n, cumulative[ns].clone())?;
    let mean = total.mean();
    if mean.norm() > QUADRATURE_MEAN_TOL * f.max_abs().max(1.0) {
        return Err(LabError::Obstruction(format!("∫ f over the mapping torus is {:.3e}, not zero", mean.norm())));
    }
    total = total.map(|v| v - mean);
    let base = livsic_solve(f.matrix(), &total, n as f64)?;
    let u0 = base.u.values();
    let slices: Vec<Grid2Field> = (0..ns)
        .map(|m| Grid2Field::from_values(n, cumulative[m].iter().zip(u0).map(|(c, u)| c + u).collect()))
        .collect::<Result<_>>()?;
    let u = MappingTorusField::new(spec, f.matrix(), slices)?;
    let end = Grid2Field::from_values(n, cumulative[ns].iter().zip(u0).map(|(c, u)| c + u).collect())?;
    let twist_defect = end.sub(&u.slice_at(ns as i64)).max_abs();
    if twist_defect > RESIDUAL_TOL * f.max_abs().max(1.0) {
        return Err(LabError::Obstruction(format!("twisted boundary defect {twist_defect:.3e}")));
    }
    Ok(SuspensionSolution { u, base, twist_defect })
}

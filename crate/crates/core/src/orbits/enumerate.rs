use serde::Serialize;

use crate::error::{LabError, Result};
use crate::mat::{det_i, mul_i, pow_i, Mat2i, IDENTITY_I};
use crate::systems::AnosovMap;

/// Primitive closed orbit of a linear toral map, stored exactly as points
/// of `(1/denom) Z^2 / Z^2`.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodicOrbit {
    pub matrix: Mat2i,
    pub period: usize,
    pub denom: i64,
    /// Numerators in `[0, denom)`, listed along the orbit from the
    /// lexicographically minimal representative.
    pub numerators: Vec<[i64; 2]>,
    pub points: Vec<[f64; 2]>,
    pub primitive: bool,
}

impl PeriodicOrbit {
    pub fn id(&self) -> String {
        let p = self.numerators[0];
        format!("p{}:{}/{},{}/{}", self.period, p[0], self.denom, p[1], self.denom)
    }

    pub fn representative(&self) -> [f64; 2] {
        self.points[0]
    }

    /// The same closed orbit listed from its `shift`-th point.
    pub fn rotated(&self, shift: usize) -> PeriodicOrbit {
        let mut o = self.clone();
        o.numerators.rotate_left(shift % self.period);
        o.points.rotate_left(shift % self.period);
        o
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitSet {
    pub matrix: Mat2i,
    pub max_period: usize,
    pub orbits: Vec<PeriodicOrbit>,
    /// `|det(A^n - I)|` for `n = 1..=max_period` (index `n - 1`).
    pub point_counts: Vec<u64>,
    pub primitive_counts: Vec<usize>,
}

impl OrbitSet {
    pub fn of_period(&self, n: usize) -> impl Iterator<Item = &PeriodicOrbit> {
        self.orbits.iter().filter(move |o| o.period == n)
    }

    pub fn total_points(&self) -> usize {
        self.orbits.iter().map(|o| o.period).sum()
    }
}

pub const DEFAULT_ORBIT_BUDGET: u64 = 5_000_000;

fn apply_mod(a: &Mat2i, p: [i64; 2], d: i64) -> [i64; 2] {
    [
        (a[0][0] as i128 * p[0] as i128 + a[0][1] as i128 * p[1] as i128).rem_euclid(d as i128) as i64,
        (a[1][0] as i128 * p[0] as i128 + a[1][1] as i128 * p[1] as i128).rem_euclid(d as i128) as i64,
    ]
}

/// Hermite normal form `[[h11, 0], [h21, h22]]` of the lattice spanned by
/// the columns of `m`, with `0 <= h21 < h22`.
fn column_hnf(m: &Mat2i) -> [[i64; 2]; 2] {
    // Column operations on the first row to clear m[0][1] (extended gcd).
    let (mut c1, mut c2) = ([m[0][0], m[1][0]], [m[0][1], m[1][1]]);
    while c2[0] != 0 {
        let q = c1[0].div_euclid(c2[0]);
        c1 = [c1[0] - q * c2[0], c1[1] - q * c2[1]];
        std::mem::swap(&mut c1, &mut c2);
    }
    if c1[0] < 0 {
        c1 = [-c1[0], -c1[1]];
    }
    if c2[1] < 0 {
        c2 = [-c2[0], -c2[1]];
    }
    let h21 = c1[1].rem_euclid(c2[1]);
    [[c1[0], 0], [h21, c2[1]]]
}

/// All primitive closed orbits with period `<= max_period`, exactly.
///
/// Period-`n` points solve `(A^n - I) x = m`, so they lie on
/// `(1/d) Z^2` with `d = |det(A^n - I)|`; one point per coset of
/// `Z^2 / (A^n - I) Z^2` gives all `d` of them.
pub fn enumerate_periodic_orbits(map: &AnosovMap, max_period: usize, budget: u64) -> Result<OrbitSet> {
    if max_period < 1 {
        return Err(LabError::InvalidInput("max period must be >= 1".into()));
    }
    if !map.is_linear() {
        return Err(LabError::InvalidInput("exact enumeration needs a linear map".into()));
    }
    let a = map.matrix();
    let mut point_counts = Vec::with_capacity(max_period);
    let mut total = 0u64;
    for n in 1..=max_period {
        let an = pow_i(&a, n as i64);
        let m = [[an[0][0] - 1, an[0][1]], [an[1][0], an[1][1] - 1]];
        let d = det_i(&m).unsigned_abs();
        total += d;
        if total > budget {
            return Err(LabError::OrbitBudget { budget: budget as usize, period: n });
        }
        point_counts.push(d);
    }
    let mut orbits = Vec::new();
    let mut primitive_counts = vec![0; max_period];
    let mut an = IDENTITY_I;
    for n in 1..=max_period {
        an = mul_i(&an, &a);
        let m = [[an[0][0] - 1, an[0][1]], [an[1][0], an[1][1] - 1]];
        let det = det_i(&m);
        let d = det.abs();
        let adj = [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]];
        let h = column_hnf(&m);
        debug_assert_eq!(h[0][0] * h[1][1], d);
        for i in 0..h[0][0] {
            for j in 0..h[1][1] {
                // x = M^{-1} (i, j) = adj(M) (i, j) / det.
                let raw = [adj[0][0] * i + adj[0][1] * j, adj[1][0] * i + adj[1][1] * j];
                let p = [(raw[0] * det.signum()).rem_euclid(d), (raw[1] * det.signum()).rem_euclid(d)];
                // Keep p only if it has minimal period n and is the orbit minimum.
                let mut q = p;
                let mut cycle = vec![p];
                let mut minimal = true;
                for _ in 1..n {
                    q = apply_mod(&a, q, d);
                    if q <= p {
                        minimal = false;
                        break;
                    }
                    cycle.push(q);
                }
                if !minimal {
                    continue;
                }
                debug_assert_eq!(apply_mod(&a, q, d), p);
                let points = cycle.iter().map(|c| [c[0] as f64 / d as f64, c[1] as f64 / d as f64]).collect();
                orbits.push(PeriodicOrbit { matrix: a, period: n, denom: d, numerators: cycle, points, primitive: true });
                primitive_counts[n - 1] += 1;
            }
        }
    }
    Ok(OrbitSet { matrix: a, max_period, orbits, point_counts, primitive_counts })
}

use crate::lp_calculus::Grid2Field;
use crate::mat::Mat2i;

/// `x -> Ax` on the lattice `(1/N) Z^2`, as an index permutation
/// (row-major, `i * N + j`). Exact integer arithmetic.
pub(crate) fn lattice_permutation(a: &Mat2i, n: usize) -> Vec<usize> {
    let m = n as i64;
    (0..n * n)
        .map(|idx| {
            let (i, j) = ((idx / n) as i64, (idx % n) as i64);
            let p = (a[0][0] * i + a[0][1] * j).rem_euclid(m) as usize;
            let q = (a[1][0] * i + a[1][1] * j).rem_euclid(m) as usize;
            p * n + q
        })
        .collect()
}

pub(crate) fn compose(p: &[usize], q: &[usize]) -> Vec<usize> {
    // (p then q): x -> q[p[x]]
    p.iter().map(|&i| q[i]).collect()
}

/// Values of `f` on the lattice `(1/N) Z^2`, reusing grid values when the
/// lattices coincide.
pub(crate) fn lattice_values(f: &Grid2Field, n: usize) -> Vec<f64> {
    if f.n() == n {
        return f.values().iter().map(|z| z.re).collect();
    }
    (0..n * n).map(|idx| f.eval_re([(idx / n) as f64 / n as f64, (idx % n) as f64 / n as f64])).collect()
}

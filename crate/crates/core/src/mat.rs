//! Small fixed-size matrix helpers for integer and real 2x2 matrices.

pub type Mat2i = [[i64; 2]; 2];
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY_I: Mat2i = [[1, 0], [0, 1]];

pub fn mul_i(a: &Mat2i, b: &Mat2i) -> Mat2i {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn det_i(a: &Mat2i) -> i64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn trace_i(a: &Mat2i) -> i64 {
    a[0][0] + a[1][1]
}

pub fn transpose_i(a: &Mat2i) -> Mat2i {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Inverse of a unimodular integer matrix.
pub fn inverse_i(a: &Mat2i) -> Mat2i {
    let d = det_i(a);
    assert!(d == 1 || d == -1, "matrix {a:?} is not unimodular");
    [[a[1][1] * d, -a[0][1] * d], [-a[1][0] * d, a[0][0] * d]]
}

/// `a^p` for any integer `p`; `a` must be unimodular when `p < 0`.
pub fn pow_i(a: &Mat2i, p: i64) -> Mat2i {
    let base = if p < 0 { inverse_i(a) } else { *a };
    let mut e = p.unsigned_abs();
    let mut acc = IDENTITY_I;
    let mut sq = base;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_i(&acc, &sq);
        }
        sq = mul_i(&sq, &sq);
        e >>= 1;
    }
    acc
}

pub fn apply_i(a: &Mat2i, k: [i64; 2]) -> [i64; 2] {
    [a[0][0] * k[0] + a[0][1] * k[1], a[1][0] * k[0] + a[1][1] * k[1]]
}

pub fn to_f64(a: &Mat2i) -> Mat2 {
    [[a[0][0] as f64, a[0][1] as f64], [a[1][0] as f64, a[1][1] as f64]]
}

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn apply(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

pub fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn trace(a: &Mat2) -> f64 {
    a[0][0] + a[1][1]
}

pub fn inverse(a: &Mat2) -> Mat2 {
    let d = det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

pub fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

pub fn normalize(v: [f64; 2]) -> [f64; 2] {
    let r = norm2(v);
    [v[0] / r, v[1] / r]
}

pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Operator 2-norm of a real 2x2 matrix.
pub fn op_norm(a: &Mat2) -> f64 {
    let s = a[0][0].powi(2) + a[0][1].powi(2) + a[1][0].powi(2) + a[1][1].powi(2);
    let d = det(a).abs();
    ((s + (s * s - 4.0 * d * d).max(0.0).sqrt()) / 2.0).sqrt()
}

/// Max-abs entry difference.
pub fn dist(a: &Mat2, b: &Mat2) -> f64 {
    let mut m = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

//! Dense helpers for the tiny (n <= 3) symmetric matrices living at each grid node.

use crate::field::MAX_DIM;

pub type Mat = [[f64; MAX_DIM]; MAX_DIM];

pub const ZERO: Mat = [[0.0; MAX_DIM]; MAX_DIM];

pub fn identity(n: usize) -> Mat {
    let mut m = ZERO;
    for (i, row) in m.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    m
}

pub fn det(m: &Mat, n: usize) -> f64 {
    match n {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("dimension {n}"),
    }
}

/// Adjugate (transposed cofactor matrix); equals `det * inverse`.
pub fn adjugate(m: &Mat, n: usize) -> Mat {
    let mut a = ZERO;
    match n {
        1 => a[0][0] = 1.0,
        2 => {
            a[0][0] = m[1][1];
            a[0][1] = -m[0][1];
            a[1][0] = -m[1][0];
            a[1][1] = m[0][0];
        }
        3 => {
            a[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
            a[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
            a[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
            a[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
            a[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
            a[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
            a[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
            a[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
            a[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        }
        _ => unreachable!("dimension {n}"),
    }
    a
}

pub fn inverse(m: &Mat, n: usize) -> Mat {
    let d = det(m, n);
    let mut inv = adjugate(m, n);
    for row in inv.iter_mut().take(n) {
        for v in row.iter_mut().take(n) {
            *v /= d;
        }
    }
    inv
}

pub fn mul(a: &Mat, b: &Mat, n: usize) -> Mat {
    let mut c = ZERO;
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[i][k] * b[k][j];
            }
            c[i][j] = s;
        }
    }
    c
}

/// Product of a chain of matrices, left to right.
pub fn chain(ms: &[&Mat], n: usize) -> Mat {
    ms.iter().skip(1).fold(*ms[0], |acc, m| mul(&acc, m, n))
}

/// Extreme eigenvalues `(min, max)` of a symmetric matrix.
pub fn eig_extremes(m: &Mat, n: usize) -> (f64, f64) {
    match n {
        1 => (m[0][0], m[0][0]),
        2 => {
            let half_tr = 0.5 * (m[0][0] + m[1][1]);
            let half_diff = 0.5 * (m[0][0] - m[1][1]);
            let r = (half_diff * half_diff + m[0][1] * m[0][1]).sqrt();
            (half_tr - r, half_tr + r)
        }
        3 => {
            let a = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
            let ev = a.symmetric_eigenvalues();
            (ev.min(), ev.max())
        }
        _ => unreachable!("dimension {n}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m: Mat = [[2.0, 0.3, -0.1], [0.3, 1.5, 0.2], [-0.1, 0.2, 0.9]];
        for n in 1..=3 {
            let p = mul(&m, &inverse(&m, n), n);
            let id = identity(n);
            for i in 0..n {
                for j in 0..n {
                    assert!((p[i][j] - id[i][j]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn eigen_extremes_match_characteristic_polynomial() {
        let m: Mat = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        let (lo, hi) = eig_extremes(&m, 2);
        assert!((lo - 1.0).abs() < 1e-14 && (hi - 3.0).abs() < 1e-14);
        let (lo, hi) = eig_extremes(&m, 3);
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 5.0).abs() < 1e-12);
    }
}

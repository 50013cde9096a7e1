//! Second time derivative of the potential along the Calabi flow,
//! `d^2u/dt^2 = -dS/dt = sum_ij (u^ik S_kl u^jl)_ij`, expanded by the product
//! rule into thirteen terms in the derivatives of `u` (up to order 4) and of
//! `S` (up to order 4).

use super::{mat_from_fn, scalar_curvature, CurvatureForm, DerivTable};
use crate::error::{Error, Result};
use crate::field::{PeriodicField, MAX_DIM};
use crate::jet::{jet_of_rotated, AnalyticPotential, Jet, JetSpace, Scalar};
use crate::linalg::{self, Mat};
use crate::potential::SymplecticPotential;

type T3 = [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM];
type T4 = [T3; MAX_DIM];

/// Pointwise ingredients of the expansion.
#[derive(Clone, Debug, Default)]
pub struct StarInputs {
    pub n: usize,
    /// `u^ij`
    pub inv: Mat,
    /// `u_abc`
    pub u3: T3,
    /// `u_abcd`
    pub u4: T4,
    /// `S_kl`
    pub s2: Mat,
    /// `S_klm`
    pub s3: T3,
    /// `S_klmn`
    pub s4: T4,
}

/// Evaluates the thirteen-term expression.
///
/// With `A = (u^ij)`, `U_i = (u_abi)`, `V_ij = (u_abij)`, `W_i = (S_kli)`,
/// `X_ij = (S_klij)`, `P_i = A U_i A` and `T = A (S_kl) A`, the terms read
/// (summed over `i, j`, entry `(i, j)` of each product):
///
/// ```text
///   P_j U_i T  - A V_ij T   + P_i U_j T  - P_i W_j A + P_i S P_j
/// - P_j W_i A  + A X_ij A   - A W_i P_j  + P_j S P_i
/// - A W_j P_i  + T U_i P_j  - T V_ij A   + T U_j P_i
/// ```
pub fn star_value(inp: &StarInputs) -> f64 {
    let n = inp.n;
    let a = &inp.inv;
    let s = &inp.s2;
    let u_i: Vec<Mat> = (0..n)
        .map(|i| mat_from_fn(n, |p, q| inp.u3[p][q][i]))
        .collect();
    let w_i: Vec<Mat> = (0..n)
        .map(|i| mat_from_fn(n, |p, q| inp.s3[p][q][i]))
        .collect();
    let p_i: Vec<Mat> = u_i.iter().map(|u| linalg::chain(&[a, u, a], n)).collect();
    let t = linalg::chain(&[a, s, a], n);

    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v_ij = mat_from_fn(n, |p, q| inp.u4[p][q][i][j]);
            let x_ij = mat_from_fn(n, |p, q| inp.s4[p][q][i][j]);
            let terms = [
                linalg::chain(&[&p_i[j], &u_i[i], &t], n)[i][j],
                -linalg::chain(&[a, &v_ij, &t], n)[i][j],
                linalg::chain(&[&p_i[i], &u_i[j], &t], n)[i][j],
                -linalg::chain(&[&p_i[i], &w_i[j], a], n)[i][j],
                linalg::chain(&[&p_i[i], s, &p_i[j]], n)[i][j],
                -linalg::chain(&[&p_i[j], &w_i[i], a], n)[i][j],
                linalg::chain(&[a, &x_ij, a], n)[i][j],
                -linalg::chain(&[a, &w_i[i], &p_i[j]], n)[i][j],
                linalg::chain(&[&p_i[j], s, &p_i[i]], n)[i][j],
                -linalg::chain(&[a, &w_i[j], &p_i[i]], n)[i][j],
                linalg::chain(&[&t, &u_i[i], &p_i[j]], n)[i][j],
                -linalg::chain(&[&t, &v_ij, a], n)[i][j],
                linalg::chain(&[&t, &u_i[j], &p_i[i]], n)[i][j],
            ];
            total += terms.iter().sum::<f64>();
        }
    }
    total
}

/// `d^2u/dt^2` on the grid; `S` and its derivatives come from the direct form.
pub fn d2u_dt2_star(u: &SymplecticPotential) -> PeriodicField {
    let s = scalar_curvature(u, CurvatureForm::Direct);
    d2u_dt2_star_with(u, &s)
}

pub(crate) fn d2u_dt2_star_with(u: &SymplecticPotential, s: &PeriodicField) -> PeriodicField {
    let spec = *u.spec();
    let n = spec.dim();
    let u3 = DerivTable::new(u.psi(), 3);
    let u4 = DerivTable::new(u.psi(), 4);
    let s2 = DerivTable::new(s, 2);
    let s3 = DerivTable::new(s, 3);
    let s4 = DerivTable::new(s, 4);
    debug_assert_eq!(u4.order(), 4);
    let inv = &u.hessian_data().inv;
    let vals = (0..spec.len())
        .map(|flat| {
            let mut inp = StarInputs {
                n,
                inv: inv.at(flat),
                ..Default::default()
            };
            for a in 0..n {
                for b in 0..n {
                    inp.s2[a][b] = s2.at(&[a, b], flat);
                    for c in 0..n {
                        inp.u3[a][b][c] = u3.at(&[a, b, c], flat);
                        inp.s3[a][b][c] = s3.at(&[a, b, c], flat);
                        for d in 0..n {
                            inp.u4[a][b][c][d] = u4.at(&[a, b, c, d], flat);
                            inp.s4[a][b][c][d] = s4.at(&[a, b, c, d], flat);
                        }
                    }
                }
            }
            star_value(&inp)
        })
        .collect();
    PeriodicField::from_raw(spec, vals)
}

/// Evaluates the expansion at `x` for `u` and at `x R^-1` for `v(y) = u(y R)`.
///
/// Derivatives are obtained by truncated Taylor arithmetic on the analytic
/// potential rather than on a grid, so the comparison measures only the
/// invariance of the expression itself. With `R = I` both values coincide
/// bit for bit.
pub fn star_rotation_invariance<P: AnalyticPotential>(
    u: &P,
    rotation: &Mat,
    x: &[f64],
) -> Result<(f64, f64)> {
    let n = u.dim();
    let rtr = linalg::mul(&transpose(rotation, n), rotation, n);
    for i in 0..n {
        for j in 0..n {
            let e = if i == j { 1.0 } else { 0.0 };
            if (rtr[i][j] - e).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "matrix is not orthogonal: (R^T R)[{i}][{j}] = {}",
                    rtr[i][j]
                )));
            }
        }
    }
    let id = linalg::identity(n);
    let original = star_at_jet(u, x, &id);
    // y R = x  =>  y = x R^T
    let y: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| x[j] * rotation[i][j]).sum())
        .collect();
    let rotated = star_at_jet(u, &y, rotation);
    Ok((original, rotated))
}

fn transpose(m: &Mat, n: usize) -> Mat {
    mat_from_fn(n, |i, j| m[j][i])
}

/// The expansion for `v(y) = u(y R)` at `y0`, all derivatives from jets.
pub fn star_at_jet<P: AnalyticPotential>(u: &P, y0: &[f64], rotation: &Mat) -> f64 {
    let n = u.dim();
    let space = JetSpace::new(n, 8);
    let v = jet_of_rotated(u, &space, y0, rotation);
    let hess: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| v.partial(i).partial(j)).collect())
        .collect();
    let inv = jet_inverse(&hess, n);
    let mut s = v.lift(0.0);
    for i in 0..n {
        for j in 0..n {
            s = s - inv[i][j].partial(i).partial(j);
        }
    }
    let mut inp = StarInputs {
        n,
        inv: mat_from_fn(n, |i, j| inv[i][j].value()),
        ..Default::default()
    };
    for a in 0..n {
        for b in 0..n {
            inp.s2[a][b] = s.derivative_axes(&[a, b]);
            for c in 0..n {
                inp.u3[a][b][c] = v.derivative_axes(&[a, b, c]);
                inp.s3[a][b][c] = s.derivative_axes(&[a, b, c]);
                for d in 0..n {
                    inp.u4[a][b][c][d] = v.derivative_axes(&[a, b, c, d]);
                    inp.s4[a][b][c][d] = s.derivative_axes(&[a, b, c, d]);
                }
            }
        }
    }
    star_value(&inp)
}

/// Jet of the scalar curvature of an analytic potential around `x0`, valid to
/// degree `order`.
pub fn scalar_curvature_jet<P: AnalyticPotential>(u: &P, x0: &[f64], order: usize) -> Jet {
    let n = u.dim();
    let space = JetSpace::new(n, order + 4);
    let v = jet_of_rotated(u, &space, x0, &linalg::identity(n));
    let hess: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| v.partial(i).partial(j)).collect())
        .collect();
    let inv = jet_inverse(&hess, n);
    let mut s = v.lift(0.0);
    for i in 0..n {
        for j in 0..n {
            s = s - inv[i][j].partial(i).partial(j);
        }
    }
    s
}

pub(crate) fn jet_inverse(m: &[Vec<Jet>], n: usize) -> Vec<Vec<Jet>> {
    match n {
        1 => vec![vec![m[0][0].recip()]],
        2 => {
            let det = &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0];
            let r = det.recip();
            vec![
                vec![&m[1][1] * &r, -(&m[0][1] * &r)],
                vec![-(&m[1][0] * &r), &m[0][0] * &r],
            ]
        }
        3 => {
            let cof = |a: usize, b: usize, c: usize, d: usize| &m[a][b] * &m[c][d] - &m[a][d] * &m[c][b];
            // adjugate entries
            let adj = [
                [cof(1, 1, 2, 2), cof(0, 2, 2, 1), cof(0, 1, 1, 2)],
                [cof(1, 2, 2, 0), cof(0, 0, 2, 2), cof(0, 2, 1, 0)],
                [cof(1, 0, 2, 1), cof(0, 1, 2, 0), cof(0, 0, 1, 1)],
            ];
            let det = &(&(&m[0][0] * &adj[0][0]) + &(&m[0][1] * &adj[1][0])) + &(&m[0][2] * &adj[2][0]);
            let r = det.recip();
            adj.iter()
                .map(|row| row.iter().map(|e| e * &r).collect())
                .collect()
        }
        _ => unreachable!("dimension {n}"),
    }
}

//! Curvature and energy functionals of symplectic potentials.
//!
//! All derivatives are taken with [`PeriodicField::derivative`], so the
//! operators used here are the same discrete operators the flow uses. This
//! keeps the semi-discrete energy identities exact up to time-stepping error.

mod distance;
pub(crate) mod star;

pub use distance::{riemannian_distance, DistanceGraph, HessianComparison, RM_PRECONDITION_SLACK};
pub use star::{
    d2u_dt2_star, scalar_curvature_jet, star_at_jet, star_rotation_invariance, star_value, StarInputs,
};

use crate::error::{Error, Result};
use crate::field::{PeriodicField, MAX_DIM};
use crate::linalg::{self, Mat};
use crate::potential::SymplecticPotential;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvatureForm {
    /// `S = -sum_ij (u^ij)_ij`.
    Direct,
    /// `S = -sum_ij U^ij (1/det D^2u)_ij` with `U` the cofactor matrix.
    Cofactor,
}

/// All derivative fields of one order, indexed by sorted multi-index.
pub(crate) struct DerivTable {
    n: usize,
    order: usize,
    fields: Vec<PeriodicField>,
    /// Full index (base-`n` digits, first index most significant) to slot.
    slot_of: Vec<usize>,
}

impl DerivTable {
    pub(crate) fn new(f: &PeriodicField, order: usize) -> Self {
        let n = f.spec().dim();
        let total = n.pow(order as u32);
        let mut keys: Vec<Vec<usize>> = Vec::new();
        let mut slot_of = vec![0; total];
        for (full, slot) in slot_of.iter_mut().enumerate() {
            let mut idx = digits(full, n, order);
            idx.sort_unstable();
            *slot = match keys.iter().position(|k| *k == idx) {
                Some(p) => p,
                None => {
                    keys.push(idx);
                    keys.len() - 1
                }
            };
        }
        let fields = keys
            .iter()
            .map(|k| f.derivative(k).expect("orders up to 4 are supported"))
            .collect();
        Self {
            n,
            order,
            fields,
            slot_of,
        }
    }

    #[inline]
    pub(crate) fn at(&self, idx: &[usize], flat: usize) -> f64 {
        let full = idx.iter().fold(0, |acc, &i| acc * self.n + i);
        self.fields[self.slot_of[full]].values()[flat]
    }

    pub(crate) fn order(&self) -> usize {
        self.order
    }
}

fn digits(mut full: usize, base: usize, len: usize) -> Vec<usize> {
    let mut d = vec![0; len];
    for slot in d.iter_mut().rev() {
        *slot = full % base;
        full /= base;
    }
    d
}

/// Abreu's scalar curvature.
pub fn scalar_curvature(u: &SymplecticPotential, form: CurvatureForm) -> PeriodicField {
    let spec = *u.spec();
    let n = spec.dim();
    let hd = u.hessian_data();
    let mut s = vec![0.0; spec.len()];
    match form {
        CurvatureForm::Direct => {
            for i in 0..n {
                for j in i..n {
                    let d = hd.inv.get(i, j).derivative(&[i, j]).expect("order 2");
                    let mult = if i == j { 1.0 } else { 2.0 };
                    for (acc, v) in s.iter_mut().zip(d.values()) {
                        *acc -= mult * v;
                    }
                }
            }
        }
        CurvatureForm::Cofactor => {
            let w = hd.det.map(|d| 1.0 / d);
            for i in 0..n {
                for j in i..n {
                    let dw = w.derivative(&[i, j]).expect("order 2");
                    let mult = if i == j { 1.0 } else { 2.0 };
                    for (flat, acc) in s.iter_mut().enumerate() {
                        let cof = hd.inv.get(i, j).values()[flat] * hd.det.values()[flat];
                        *acc -= mult * cof * dw.values()[flat];
                    }
                }
            }
        }
    }
    PeriodicField::from_raw(spec, s)
}

/// `|Rm|^2` before the square root, i.e. `sum_ijkl (u^ij)_kl (u^kl)_ij`.
pub fn riemann_norm_squared(u: &SymplecticPotential) -> PeriodicField {
    let spec = *u.spec();
    let n = spec.dim();
    let inv = &u.hessian_data().inv;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let np = pairs.len();
    let slot = |i: usize, j: usize| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        pairs.iter().position(|&p| p == (a, b)).expect("pair exists")
    };
    // d2[p][q] = (u^{pair p})_{pair q}
    let d2: Vec<Vec<PeriodicField>> = pairs
        .iter()
        .map(|&(i, j)| {
            pairs
                .iter()
                .map(|&(k, l)| inv.get(i, j).derivative(&[k, l]).expect("order 2"))
                .collect()
        })
        .collect();
    let mut out = vec![0.0; spec.len()];
    for (flat, acc) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = slot(i, j);
                for k in 0..n {
                    for l in 0..n {
                        let q = slot(k, l);
                        s += d2[p][q].values()[flat] * d2[q][p].values()[flat];
                    }
                }
            }
        }
        *acc = s;
    }
    debug_assert!(np > 0);
    PeriodicField::from_raw(spec, out)
}

/// Threshold below which a negative `|Rm|^2` is reported instead of clamped.
pub const RM_ANOMALY_THRESHOLD: f64 = -1e-10;

/// Pointwise curvature norm `|Rm| = sqrt(sum_ijkl (u^ij)_kl (u^kl)_ij)`.
pub fn riemann_norm(u: &SymplecticPotential) -> Result<PeriodicField> {
    let sq = riemann_norm_squared(u);
    let worst = sq.argmin();
    let min = sq.values()[worst];
    if min < RM_ANOMALY_THRESHOLD {
        return Err(Error::FormulaAnomaly {
            point: u.spec().point(worst),
            value: min,
        });
    }
    Ok(sq.map(|v| v.max(0.0).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Energies {
    /// Calabi energy `int S^2`.
    pub ca: f64,
    /// Mabuchi energy `-int log det D^2u`.
    pub ma: f64,
    /// `int (u - c|x|^2/2)^2 = int psi^2`.
    pub l2: f64,
    pub psi_mean: f64,
}

pub fn energies(u: &SymplecticPotential) -> Energies {
    let s = scalar_curvature(u, CurvatureForm::Direct);
    energies_with(u, &s)
}

pub(crate) fn energies_with(u: &SymplecticPotential, s: &PeriodicField) -> Energies {
    let hd = u.hessian_data();
    Energies {
        ca: s.map(|v| v * v).integrate(),
        // 0 - x rather than -x: a flat metric reports +0
        ma: 0.0 - hd.det.map(f64::ln).integrate(),
        l2: u.psi().map(|v| v * v).integrate(),
        psi_mean: u.psi().integrate() / u.spec().volume(),
    }
}

/// `2 int S_ij u^ia S_ab u^bj`, the rate at which the Calabi energy decreases.
pub fn calabi_dissipation(u: &SymplecticPotential, s: &PeriodicField) -> f64 {
    let spec = *u.spec();
    let n = spec.dim();
    let s2 = DerivTable::new(s, 2);
    let inv = &u.hessian_data().inv;
    let vals: Vec<f64> = (0..spec.len())
        .map(|flat| {
            let a = inv.at(flat);
            let mut h = linalg::ZERO;
            for i in 0..n {
                for j in 0..n {
                    h[i][j] = s2.at(&[i, j], flat);
                }
            }
            let m = linalg::chain(&[&h, &a, &h, &a], n);
            (0..n).map(|i| m[i][i]).sum::<f64>()
        })
        .collect();
    2.0 * PeriodicField::from_raw(spec, vals).integrate()
}

/// Pointwise `sum_ij (u^ij - c^-1 delta_ij)(u_ij - c delta_ij)`; non-positive
/// for every positive-definite Hessian.
pub fn trace_pairing(u: &SymplecticPotential) -> PeriodicField {
    let spec = *u.spec();
    let n = spec.dim();
    let hd = u.hessian_data();
    let vals = (0..spec.len())
        .map(|flat| trace_pairing_at(&hd.hess.at(flat), &hd.inv.at(flat), n, u.c()))
        .collect();
    PeriodicField::from_raw(spec, vals)
}

pub fn trace_pairing_at(hess: &Mat, inv: &Mat, n: usize, c: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = if i == j { 1.0 } else { 0.0 };
            s += (inv[i][j] - d / c) * (hess[i][j] - c * d);
        }
    }
    s
}

/// Squared covariant norm `|d^k f|_g^2 = u^{i1 j1} ... u^{ik jk} f_{i1..ik} f_{j1..jk}`.
pub fn covariant_norm(f: &PeriodicField, u: &SymplecticPotential, k: usize) -> Result<PeriodicField> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "covariant norm order must be 1, 2 or 3, got {k}"
        )));
    }
    if f.spec() != u.spec() {
        return Err(Error::InvalidArgument("field and potential live on different grids".into()));
    }
    let spec = *u.spec();
    let n = spec.dim();
    let table = DerivTable::new(f, k);
    let size = n.pow(k as u32);
    let inv = &u.hessian_data().inv;
    let mut tensor = vec![0.0; size];
    let mut work = vec![0.0; size];
    let vals = (0..spec.len())
        .map(|flat| {
            for (full, t) in tensor.iter_mut().enumerate() {
                *t = table.at(&digits(full, n, k), flat);
            }
            let a = inv.at(flat);
            work.copy_from_slice(&tensor);
            for slot in 0..k {
                let stride = n.pow((k - 1 - slot) as u32);
                let prev = work.clone();
                for (full, w) in work.iter_mut().enumerate() {
                    let j = (full / stride) % n;
                    let base = full - j * stride;
                    *w = (0..n).map(|i| a[i][j] * prev[base + i * stride]).sum();
                }
            }
            work.iter().zip(&tensor).map(|(w, t)| w * t).sum()
        })
        .collect();
    Ok(PeriodicField::from_raw(spec, vals))
}

/// `int |Rm|^n`, the scale-invariant total energy.
pub fn total_energy(rm: &PeriodicField) -> f64 {
    let n = rm.spec().dim() as i32;
    rm.map(|v| v.powi(n)).integrate()
}

pub(crate) fn mat_from_fn<F: Fn(usize, usize) -> f64>(n: usize, f: F) -> Mat {
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    for (i, row) in m.iter_mut().enumerate().take(n) {
        for (j, v) in row.iter_mut().enumerate().take(n) {
            *v = f(i, j);
        }
    }
    m
}

#[cfg(test)]
mod tests;

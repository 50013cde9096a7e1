//! Legendre duality `u(x) + v(xi) = x . xi`, `x = grad v(xi)`, between the
//! symplectic potential and the Kähler-side potential `v = |xi|^2/2 + phi`.
//!
//! Both directions solve the same problem: given a periodic `f`, find `y` with
//! `y + grad f(y) = target`. The dual potential lives on the same grid, which
//! is legitimate because `grad v - xi` is periodic.

use crate::error::{Error, Result};
use crate::field::{GridSpec, PeriodicField, MAX_DIM};
use crate::interp::Interpolator;
use crate::linalg::{self, Mat};
use crate::potential::{HessianData, SymplecticPotential};

/// Iteration cap for the per-node Newton solves.
pub const NEWTON_MAX_ITER: usize = 50;
/// Residual target `|y + grad f(y) - target|`, relative to `max(1, scale)`.
pub const NEWTON_TOL: f64 = 1e-12;

/// `v(xi) = |xi|^2/2 + phi(xi)` with `phi` periodic.
#[derive(Clone, Debug, PartialEq)]
pub struct KahlerPotential {
    phi: PeriodicField,
}

impl KahlerPotential {
    /// Checks that `I + D^2 phi` is positive definite at every node.
    pub fn new(phi: PeriodicField) -> Result<Self> {
        HessianData::compute(1.0, &phi)?;
        Ok(Self { phi })
    }

    pub fn flat(spec: GridSpec) -> Self {
        Self {
            phi: PeriodicField::zeros(spec),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        self.phi.spec()
    }

    pub fn phi(&self) -> &PeriodicField {
        &self.phi
    }

    pub fn phi_interpolator(&self) -> Interpolator {
        Interpolator::new(&self.phi)
    }

    /// `grad v` at an arbitrary point, `grad phi` from `interp`.
    pub fn gradient_at(&self, interp: &Interpolator, xi: &[f64]) -> [f64; MAX_DIM] {
        let local = interp.value_and_gradient(xi);
        let mut g = [0.0; MAX_DIM];
        for a in 0..self.spec().dim() {
            g[a] = xi[a] + local.grad[a];
        }
        g
    }

    /// `v(xi)` at an arbitrary point.
    pub fn value_at(&self, interp: &Interpolator, xi: &[f64]) -> f64 {
        let n = self.spec().dim();
        0.5 * xi[..n].iter().map(|v| v * v).sum::<f64>() + interp.value(xi)
    }
}

/// Solves `y + grad f(y) = target` by damped Newton from `y = target`, with
/// the gradient and Hessian of the Hermite interpolant of `f`.
fn invert_gradient(interp: &Interpolator, target: &[f64], node: &[f64]) -> Result<[f64; MAX_DIM]> {
    let n = interp.spec().dim();
    let tol = NEWTON_TOL * interp.spec().scale().max(1.0);
    let residual = |y: &[f64; MAX_DIM]| {
        let local = interp.local(&y[..n]);
        let mut r = [0.0; MAX_DIM];
        for a in 0..n {
            r[a] = y[a] + local.grad[a] - target[a];
        }
        (r, local.hess)
    };
    let norm = |r: &[f64; MAX_DIM]| r[..n].iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut y = [0.0; MAX_DIM];
    y[..n].copy_from_slice(&target[..n]);
    let (mut r, mut hess) = residual(&y);
    let mut rn = norm(&r);
    for _ in 0..NEWTON_MAX_ITER {
        if rn <= tol {
            return Ok(y);
        }
        let mut jac: Mat = hess;
        for (a, row) in jac.iter_mut().enumerate().take(n) {
            row[a] += 1.0;
        }
        let jinv = linalg::inverse(&jac, n);
        let mut delta = [0.0; MAX_DIM];
        for a in 0..n {
            delta[a] = -(0..n).map(|b| jinv[a][b] * r[b]).sum::<f64>();
        }
        // Backtracking: halve until the residual does not grow.
        let mut t = 1.0;
        loop {
            let mut trial = y;
            for a in 0..n {
                trial[a] += t * delta[a];
            }
            let (tr, th) = residual(&trial);
            let tn = norm(&tr);
            if tn <= rn || t < 1e-6 {
                y = trial;
                r = tr;
                hess = th;
                rn = tn;
                break;
            }
            t *= 0.5;
        }
    }
    if rn <= tol {
        return Ok(y);
    }
    Err(Error::NewtonNonconvergence {
        node: node.to_vec(),
        residual: rn,
        iterations: NEWTON_MAX_ITER,
    })
}

/// `u(x) = x . xi - v(xi)` at every node `x`, where `grad v(xi) = x`.
/// The result has `c = 1` and `psi(x) = -|x - xi|^2/2 - phi(xi)`.
pub fn to_symplectic(v: &KahlerPotential) -> Result<SymplecticPotential> {
    let spec = *v.spec();
    let interp = v.phi_interpolator();
    let psi = dual_periodic_part(&spec, &interp)?;
    SymplecticPotential::new(1.0, psi)
}

/// Inverse direction: `v(xi) = x . xi - u(x)` with `grad u(x) = xi`.
///
/// Needs `c = 1` and no linear term, so that `grad u - x` is periodic; a
/// constant offset in `u` carries over to `phi` with the opposite sign.
pub fn to_kahler(u: &SymplecticPotential) -> Result<KahlerPotential> {
    check_unit(u)?;
    let spec = *u.spec();
    let interp = u.psi_interpolator();
    let phi = dual_periodic_part(&spec, &interp)?.map(|p| p - u.offset());
    KahlerPotential::new(phi)
}

fn check_unit(u: &SymplecticPotential) -> Result<()> {
    if u.c() != 1.0 {
        return Err(Error::Precondition(format!(
            "Legendre duality needs c = 1, got c = {}",
            u.c()
        )));
    }
    if u.linear().iter().any(|&b| b != 0.0) {
        return Err(Error::Precondition(format!(
            "Legendre duality needs a vanishing linear part, got {:?}",
            u.linear()
        )));
    }
    Ok(())
}

/// `g(x) = -|x - y|^2/2 - f(y)` with `y + grad f(y) = x`, at every node.
fn dual_periodic_part(spec: &GridSpec, interp: &Interpolator) -> Result<PeriodicField> {
    let n = spec.dim();
    let mut values = Vec::with_capacity(spec.len());
    for flat in 0..spec.len() {
        let x = spec.point_array(flat);
        let y = invert_gradient(interp, &x[..n], &x[..n])?;
        let d2: f64 = (0..n).map(|a| (x[a] - y[a]).powi(2)).sum();
        values.push(-0.5 * d2 - interp.value(&y[..n]));
    }
    PeriodicField::new(*spec, values)
}

/// Dual points `xi = grad u(x)` at every node `x`.
pub fn dual_points(u: &SymplecticPotential) -> Vec<[f64; MAX_DIM]> {
    let grads = u.node_gradients();
    (0..u.spec().len())
        .map(|flat| {
            let mut xi = [0.0; MAX_DIM];
            for (a, g) in grads.iter().enumerate() {
                xi[a] = g.values()[flat];
            }
            xi
        })
        .collect()
}

/// Third derivatives of `phi` at the dual points.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiThirdDerivatives {
    pub spec: GridSpec,
    /// `xi = grad u(x)` for every node `x`.
    pub dual_points: Vec<[f64; MAX_DIM]>,
    /// `phi_jkl(xi)` per node, symmetric in `(j, k, l)`.
    pub tensors: Vec<[[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM]>,
}

impl PhiThirdDerivatives {
    pub fn get(&self, flat: usize, j: usize, k: usize, l: usize) -> f64 {
        self.tensors[flat][j][k][l]
    }

    /// Largest absolute component over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.iter().flatten().flatten())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `phi_jkl = -u^{ja} u^{kb} u^{lc} u_abc`, evaluated at `xi = grad u(x)`.
pub fn phi_third_derivatives(u: &SymplecticPotential) -> Result<PhiThirdDerivatives> {
    check_unit(u)?;
    let spec = *u.spec();
    let n = spec.dim();
    let table = crate::geometry::DerivTable::new(u.psi(), 3);
    let inv = &u.hessian_data().inv;
    let mut tensors = Vec::with_capacity(spec.len());
    for flat in 0..spec.len() {
        let a = inv.at(flat);
        let mut t = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
        for j in 0..n {
            for k in j..n {
                for l in k..n {
                    let mut s = 0.0;
                    for p in 0..n {
                        for q in 0..n {
                            for r in 0..n {
                                s += a[j][p] * a[k][q] * a[l][r] * table.at(&[p, q, r], flat);
                            }
                        }
                    }
                    let v = -s;
                    for (x, y, z) in [(j, k, l), (j, l, k), (k, j, l), (k, l, j), (l, j, k), (l, k, j)] {
                        t[x][y][z] = v;
                    }
                }
            }
        }
        tensors.push(t);
    }
    Ok(PhiThirdDerivatives {
        spec,
        dual_points: dual_points(u),
        tensors,
    })
}

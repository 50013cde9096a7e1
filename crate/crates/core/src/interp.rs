//! Periodic tensor-product cubic Hermite interpolation.
//!
//! Node slopes (including mixed slopes for every subset of axes) come from the
//! 4th-order centered first-derivative stencil, so the interpolant matches the
//! grid values exactly and the grid slopes at every node.

use crate::field::{GridSpec, PeriodicField, MAX_DIM};

/// Snap tolerance (in cells) below which a query is treated as a node.
const NODE_SNAP: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Interpolator {
    spec: GridSpec,
    /// `slopes[mask]` holds the mixed first derivative over the axes in `mask`.
    slopes: Vec<Vec<f64>>,
}

/// Value, gradient and Hessian of the interpolant at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Local {
    pub value: f64,
    pub grad: [f64; MAX_DIM],
    pub hess: [[f64; MAX_DIM]; MAX_DIM],
}

impl Interpolator {
    pub fn new(field: &PeriodicField) -> Self {
        let spec = *field.spec();
        let dim = spec.dim();
        let mut slopes = Vec::with_capacity(1 << dim);
        for mask in 0..(1usize << dim) {
            let axes: Vec<usize> = (0..dim).filter(|a| mask & (1 << a) != 0).collect();
            let d = field
                .derivative(&axes)
                .expect("first-order mixed slopes stay within order 3");
            slopes.push(d.into_values());
        }
        Self { spec, slopes }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn value(&self, point: &[f64]) -> f64 {
        self.eval(point, 0).value
    }

    pub fn value_and_gradient(&self, point: &[f64]) -> Local {
        self.eval(point, 1)
    }

    pub fn local(&self, point: &[f64]) -> Local {
        self.eval(point, 2)
    }

    fn eval(&self, point: &[f64], max_order: usize) -> Local {
        let spec = &self.spec;
        let dim = spec.dim();
        let n = spec.points();
        let h = spec.spacing();

        // basis[axis][node bit][slope bit][derivative order]
        let mut basis = [[[[0.0f64; 3]; 2]; 2]; MAX_DIM];
        let mut cell = [0usize; MAX_DIM];
        for axis in 0..dim {
            let mut t = (point[axis] / spec.scale() + 0.5) * n as f64;
            let r = t.round();
            if (t - r).abs() < NODE_SNAP {
                t = r;
            }
            let k = t.floor();
            let s = t - k;
            cell[axis] = (k as i64).rem_euclid(n as i64) as usize;
            basis[axis] = hermite_basis(s, h);
        }

        let mut out = Local::default();
        for corner in 0..(1usize << dim) {
            let mut idx = [0isize; MAX_DIM];
            for axis in 0..dim {
                idx[axis] = (cell[axis] + ((corner >> axis) & 1)) as isize;
            }
            let flat = spec.flat_index(&idx[..dim]);
            for (mask, slope) in self.slopes.iter().enumerate() {
                let coeff = slope[flat];
                let bits = |axis: usize| ((corner >> axis) & 1, (mask >> axis) & 1);
                let factor = |axis: usize, order: usize| {
                    let (b, d) = bits(axis);
                    basis[axis][b][d][order]
                };
                let product = |orders: [usize; MAX_DIM]| {
                    (0..dim).fold(coeff, |acc, a| acc * factor(a, orders[a]))
                };
                out.value += product([0; MAX_DIM]);
                if max_order >= 1 {
                    for g in 0..dim {
                        let mut orders = [0; MAX_DIM];
                        orders[g] = 1;
                        out.grad[g] += product(orders);
                    }
                }
                if max_order >= 2 {
                    for g1 in 0..dim {
                        for g2 in g1..dim {
                            let mut orders = [0; MAX_DIM];
                            orders[g1] += 1;
                            orders[g2] += 1;
                            out.hess[g1][g2] += product(orders);
                        }
                    }
                }
            }
        }
        for g1 in 0..dim {
            for g2 in 0..g1 {
                out.hess[g1][g2] = out.hess[g2][g1];
            }
        }
        out
    }
}

/// Cubic Hermite basis on a unit cell with local coordinate `s` and spacing
/// `h`, indexed `[node][slope][derivative order]`, derivatives taken in `x`.
fn hermite_basis(s: f64, h: f64) -> [[[f64; 3]; 2]; 2] {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = [2.0 * s3 - 3.0 * s2 + 1.0, (6.0 * s2 - 6.0 * s) / h, (12.0 * s - 6.0) / (h * h)];
    let h01 = [-2.0 * s3 + 3.0 * s2, (-6.0 * s2 + 6.0 * s) / h, (-12.0 * s + 6.0) / (h * h)];
    let h10 = [(s3 - 2.0 * s2 + s) * h, 3.0 * s2 - 4.0 * s + 1.0, (6.0 * s - 4.0) / h];
    let h11 = [(s3 - s2) * h, 3.0 * s2 - 2.0 * s, (6.0 * s - 2.0) / h];
    [[h00, h10], [h01, h11]]
}

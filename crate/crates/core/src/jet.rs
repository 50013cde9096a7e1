//! Truncated multivariate Taylor series ("jets") and analytic potentials.
//!
//! A [`Jet`] stores the Taylor coefficients `f^(alpha)(x0) / alpha!` of a
//! function of `nvars` variables up to a fixed total degree. Arithmetic on
//! jets propagates all derivatives exactly up to round-off, which is what the
//! pointwise evaluation of high-order curvature expressions on analytic test
//! potentials needs: eighth derivatives of `u` are far beyond what nested
//! difference stencils can resolve in double precision.

use crate::field::MAX_DIM;
use crate::potential::CosineMode;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    monomials: Vec<[usize; MAX_DIM]>,
    /// `(i, j, k)` with `monomial[i] + monomial[j] = monomial[k]`.
    products: Vec<(usize, usize, usize)>,
    /// Per variable: `(source, target, factor)` for differentiation.
    partials: Vec<Vec<(usize, usize, f64)>>,
}

impl JetSpace {
    pub fn new(nvars: usize, order: usize) -> Arc<Self> {
        assert!((1..=MAX_DIM).contains(&nvars));
        let mut monomials = Vec::new();
        for degree in 0..=order {
            let mut push_all = |exps: [usize; MAX_DIM]| monomials.push(exps);
            match nvars {
                1 => push_all([degree, 0, 0]),
                2 => (0..=degree).rev().for_each(|a| push_all([a, degree - a, 0])),
                _ => {
                    for a in (0..=degree).rev() {
                        for b in (0..=degree - a).rev() {
                            push_all([a, b, degree - a - b]);
                        }
                    }
                }
            }
        }
        let find = |e: &[usize; MAX_DIM]| monomials.iter().position(|m| m == e);
        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                let sum = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                if sum.iter().sum::<usize>() <= order {
                    products.push((i, j, find(&sum).expect("degree within order")));
                }
            }
        }
        let partials = (0..nvars)
            .map(|v| {
                monomials
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| m[v] > 0)
                    .map(|(src, m)| {
                        let mut lower = *m;
                        lower[v] -= 1;
                        (src, find(&lower).expect("lower monomial exists"), m[v] as f64)
                    })
                    .collect()
            })
            .collect();
        Arc::new(Self {
            nvars,
            order,
            monomials,
            products,
            partials,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn index_of(&self, exps: &[usize; MAX_DIM]) -> Option<usize> {
        self.monomials.iter().position(|m| m == exps)
    }
}

#[derive(Clone, Debug)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, value: f64) -> Self {
        let mut coeffs = vec![0.0; space.monomials.len()];
        coeffs[0] = value;
        Self {
            space: Arc::clone(space),
            coeffs,
        }
    }

    /// The coordinate function `x_var` expanded at `value`.
    pub fn variable(space: &Arc<JetSpace>, var: usize, value: f64) -> Self {
        let mut j = Self::constant(space, value);
        if space.order >= 1 {
            let mut e = [0; MAX_DIM];
            e[var] = 1;
            let idx = space.index_of(&e).expect("linear monomial");
            j.coeffs[idx] = 1.0;
        }
        j
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// The partial derivative `d^alpha f (x0)` for exponent vector `alpha`.
    pub fn derivative(&self, alpha: &[usize]) -> f64 {
        let mut e = [0; MAX_DIM];
        e[..alpha.len()].copy_from_slice(alpha);
        match self.space.index_of(&e) {
            Some(i) => {
                let fact: f64 = e.iter().map(|&k| (1..=k).product::<usize>() as f64).product();
                self.coeffs[i] * fact
            }
            None => 0.0,
        }
    }

    /// Derivative for a list of axis labels, e.g. `[0, 0, 1]` for `f_xxy`.
    pub fn derivative_axes(&self, axes: &[usize]) -> f64 {
        let mut e = [0usize; MAX_DIM];
        for &a in axes {
            e[a] += 1;
        }
        self.derivative(&e[..self.space.nvars])
    }

    /// Partial derivative as a jet; the top-degree coefficients become zero,
    /// so the result is accurate to one degree less.
    pub fn partial(&self, var: usize) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(src, dst, factor) in &self.space.partials[var] {
            coeffs[dst] = factor * self.coeffs[src];
        }
        Self {
            space: Arc::clone(&self.space),
            coeffs,
        }
    }

    /// `f(a0 + h)` given `taylor[m] = f^(m)(a0) / m!` where `a0` is the value
    /// of `self`.
    fn compose(&self, taylor: &[f64]) -> Self {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut out = Self::constant(&self.space, taylor[0]);
        let mut power = Self::constant(&self.space, 1.0);
        for &t in taylor.iter().skip(1) {
            power = &power * &h;
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += t * p;
            }
        }
        out
    }

    fn taylor_from_derivatives<F: Fn(usize) -> f64>(&self, f: F) -> Vec<f64> {
        let mut fact = 1.0;
        (0..=self.space.order)
            .map(|m| {
                if m > 0 {
                    fact *= m as f64;
                }
                f(m) / fact
            })
            .collect()
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        Jet {
            space: Arc::clone(&self.space),
            coeffs,
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        Jet {
            space: Arc::clone(&self.space),
            coeffs,
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.space.products {
            coeffs[k] += self.coeffs[i] * rhs.coeffs[j];
        }
        Jet {
            space: Arc::clone(&self.space),
            coeffs,
        }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

/// Number type that analytic potentials are generic over.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Add<f64, Output = Self>
{
    /// A constant living in the same space as `self`.
    fn lift(&self, v: f64) -> Self;
    fn cos(&self) -> Self;
    fn sin(&self) -> Self;
    fn exp(&self) -> Self;
    fn recip(&self) -> Self;
}

impl Scalar for f64 {
    fn lift(&self, v: f64) -> Self {
        v
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn recip(&self) -> Self {
        1.0 / *self
    }
}

impl Scalar for Jet {
    fn lift(&self, v: f64) -> Self {
        Jet::constant(&self.space, v)
    }

    fn cos(&self) -> Self {
        let (c, s) = (self.value().cos(), self.value().sin());
        let t = self.taylor_from_derivatives(|m| match m % 4 {
            0 => c,
            1 => -s,
            2 => -c,
            _ => s,
        });
        self.compose(&t)
    }

    fn sin(&self) -> Self {
        let (c, s) = (self.value().cos(), self.value().sin());
        let t = self.taylor_from_derivatives(|m| match m % 4 {
            0 => s,
            1 => c,
            2 => -s,
            _ => -c,
        });
        self.compose(&t)
    }

    fn exp(&self) -> Self {
        let e = self.value().exp();
        let t = self.taylor_from_derivatives(|_| e);
        self.compose(&t)
    }

    fn recip(&self) -> Self {
        let a = self.value();
        // taylor[m] = (-1)^m / a^(m+1)
        let t: Vec<f64> = (0..=self.space.order)
            .map(|m| if m % 2 == 0 { 1.0 } else { -1.0 } / a.powi(m as i32 + 1))
            .collect();
        self.compose(&t)
    }
}

/// A smooth potential that can be evaluated on any [`Scalar`].
pub trait AnalyticPotential {
    fn dim(&self) -> usize;
    fn eval<T: Scalar>(&self, x: &[T]) -> T;
}

/// `u(x) = c|x|^2/2 + sum_m a_m cos(2 pi k_m.x / scale + phase_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPotential {
    pub dim: usize,
    pub c: f64,
    pub scale: f64,
    pub modes: Vec<CosineMode>,
}

impl TrigPotential {
    pub fn new(dim: usize, c: f64, scale: f64, modes: Vec<CosineMode>) -> Self {
        Self {
            dim,
            c,
            scale,
            modes,
        }
    }
}

impl AnalyticPotential for TrigPotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let mut quad = x[0].clone() * x[0].clone();
        for xi in &x[1..self.dim] {
            quad = quad + xi.clone() * xi.clone();
        }
        let mut acc = quad * (0.5 * self.c);
        let w = std::f64::consts::TAU / self.scale;
        for m in &self.modes {
            let mut arg = x[0].clone() * (m.k[0] as f64 * w);
            for (xi, &k) in x[1..self.dim].iter().zip(&m.k[1..]) {
                arg = arg + xi.clone() * (k as f64 * w);
            }
            acc = acc + (arg + m.phase).cos() * m.amplitude;
        }
        acc
    }
}

/// Jet of `u(y R)` in the variables `y` around `y0` (row-vector convention).
pub fn jet_of_rotated<P: AnalyticPotential>(
    u: &P,
    space: &Arc<JetSpace>,
    y0: &[f64],
    rotation: &[[f64; MAX_DIM]; MAX_DIM],
) -> Jet {
    let n = u.dim();
    let ys: Vec<Jet> = (0..n).map(|i| Jet::variable(space, i, y0[i])).collect();
    let xs: Vec<Jet> = (0..n)
        .map(|j| {
            (1..n).fold(ys[0].clone() * rotation[0][j], |acc, i| {
                acc + ys[i].clone() * rotation[i][j]
            })
        })
        .collect();
    u.eval(&xs)
}

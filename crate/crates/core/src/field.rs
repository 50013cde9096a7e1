//! Periodic sampled fields on the fundamental domain `scale * [-1/2, 1/2)^n`.
//!
//! Grid points are `x_k = scale * (k/N - 1/2)` per axis; the right endpoint is
//! the periodic alias of the left one and is not stored. Values are laid out
//! row-major, axis 0 slowest.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

pub const MAX_DIM: usize = 3;
pub const MAX_DERIVATIVE_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    scale: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, scale: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if points < 16 || !points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 16, got {points}"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self { dim, points, scale })
    }

    /// Grid over the unit fundamental domain `[-1/2, 1/2)^n`.
    pub fn unit(dim: usize, points: usize) -> Result<Self> {
        Self::new(dim, points, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn spacing(&self) -> f64 {
        self.scale / self.points as f64
    }

    /// Total number of grid nodes, `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.scale.powi(self.dim as i32)
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::new(self.dim, self.points, scale)
    }

    pub fn with_points(&self, points: usize) -> Result<Self> {
        Self::new(self.dim, points, self.scale)
    }

    /// Offset between consecutive nodes along `axis` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.points.pow((self.dim - 1 - axis) as u32)
    }

    pub fn coordinate(&self, k: usize) -> f64 {
        self.scale * (k as f64 / self.points as f64 - 0.5)
    }

    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rem % self.points;
            rem /= self.points;
        }
        idx
    }

    /// Flat index of a multi-index; each component is wrapped modulo N.
    pub fn flat_index(&self, idx: &[isize]) -> usize {
        let n = self.points as isize;
        idx.iter()
            .take(self.dim)
            .fold(0, |acc, &k| acc * self.points + k.rem_euclid(n) as usize)
    }

    /// Coordinates of node `flat`, written into the first `dim` slots.
    pub fn point_array(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.point_array(flat)[..self.dim].to_vec()
    }

    /// Wraps a coordinate into `[-scale/2, scale/2)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let s = self.scale;
        let w = (x + 0.5 * s).rem_euclid(s) - 0.5 * s;
        if w >= 0.5 * s {
            w - s
        } else {
            w
        }
    }

    /// Index of the grid node closest to `point` (after wrapping).
    pub fn nearest_node(&self, point: &[f64]) -> usize {
        let n = self.points as f64;
        let mut idx = [0isize; MAX_DIM];
        for axis in 0..self.dim {
            let t = (point[axis] / self.scale + 0.5) * n;
            idx[axis] = t.round() as isize;
        }
        self.flat_index(&idx[..self.dim])
    }
}

/// Differentiation scheme used by [`PeriodicField::derivative_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    /// Centered finite differences of formal order 4.
    #[default]
    FiniteDifference,
    /// Fourier collocation along each axis.
    Spectral,
}

/// Integer numerators, radius and denominator of the order-4 centered stencil
/// for the `order`-th derivative.
fn stencil(order: usize) -> (&'static [f64], isize, f64) {
    match order {
        1 => (&[1.0, -8.0, 0.0, 8.0, -1.0], 2, 12.0),
        2 => (&[-1.0, 16.0, -30.0, 16.0, -1.0], 2, 12.0),
        3 => (&[1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0], 3, 8.0),
        4 => (&[-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0], 3, 6.0),
        _ => unreachable!("stencil order checked by caller"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl PeriodicField {
    /// Wraps sampled values; rejects a length mismatch or any non-finite entry.
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                point: spec.point(i),
                value: values[i],
            });
        }
        Ok(Self { spec, values })
    }

    pub(crate) fn from_raw(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            values: vec![value; spec.len()],
        }
    }

    /// Samples `f` at every grid node. Periodicity of `f` is the caller's
    /// responsibility.
    pub fn sample<F>(spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut values = Vec::with_capacity(spec.len());
        for flat in 0..spec.len() {
            let x = spec.point_array(flat);
            let v = f(&x[..spec.dim]);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    point: x[..spec.dim].to_vec(),
                    value: v,
                });
            }
            values.push(v);
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self::from_raw(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Self {
        assert_eq!(self.spec, other.spec, "fields live on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_raw(self.spec, values)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        self.zip_map(other, |x, y| x + a * y)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Flat index of the first maximal entry.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Partial derivative for the multi-index `axes` (0-based axis labels,
    /// repetition allowed), using 4th-order centered differences.
    pub fn derivative(&self, axes: &[usize]) -> Result<Self> {
        self.derivative_with(axes, Backend::FiniteDifference)
    }

    /// Axes are canonicalized to ascending order, so mixed partials commute
    /// bit-for-bit.
    pub fn derivative_with(&self, axes: &[usize], backend: Backend) -> Result<Self> {
        if axes.len() > MAX_DERIVATIVE_ORDER {
            return Err(Error::UnsupportedOrder(axes.len()));
        }
        let mut counts = [0usize; MAX_DIM];
        for &a in axes {
            if a >= self.spec.dim {
                return Err(Error::InvalidArgument(format!(
                    "axis {a} out of range for a {}-dimensional grid",
                    self.spec.dim
                )));
            }
            counts[a] += 1;
        }
        let mut values = self.values.clone();
        for (axis, &order) in counts.iter().enumerate().take(self.spec.dim) {
            if order == 0 {
                continue;
            }
            values = match backend {
                Backend::FiniteDifference => self.apply_stencil(&values, axis, order),
                Backend::Spectral => self.apply_spectral(&values, axis, order),
            };
        }
        Ok(Self::from_raw(self.spec, values))
    }

    fn apply_stencil(&self, values: &[f64], axis: usize, order: usize) -> Vec<f64> {
        match order {
            1 => self.convolve(values, axis, order, [1.0, -8.0, 0.0, 8.0, -1.0]),
            2 => self.convolve(values, axis, order, [-1.0, 16.0, -30.0, 16.0, -1.0]),
            3 => self.convolve(values, axis, order, [1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0]),
            _ => self.convolve(values, axis, order, [-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0]),
        }
    }

    /// Periodic convolution along `axis` with a fixed-width stencil
    /// (width known at compile time so the tap loop unrolls).
    fn convolve<const W: usize>(&self, values: &[f64], axis: usize, order: usize, taps: [f64; W]) -> Vec<f64> {
        let (_, _, denom) = stencil(order);
        let n = self.spec.points;
        let r = W / 2;
        let stride = self.spec.stride(axis);
        let norm = 1.0 / (denom * self.spec.spacing().powi(order as i32));
        let mut out = vec![0.0; values.len()];
        // one periodically padded line at a time
        let mut line = vec![0.0; n + 2 * r];
        for block in 0..values.len() / (n * stride) {
            for inner in 0..stride {
                let base = block * n * stride + inner;
                for k in 0..n {
                    line[r + k] = values[base + k * stride];
                }
                for k in 0..r {
                    line[k] = line[n + k];
                    line[n + r + k] = line[r + k];
                }
                for (k, win) in line.windows(W).enumerate() {
                    let mut acc = 0.0;
                    for j in 0..W {
                        acc += taps[j] * win[j];
                    }
                    out[base + k * stride] = acc * norm;
                }
            }
        }
        out
    }

    fn apply_spectral(&self, values: &[f64], axis: usize, order: usize) -> Vec<f64> {
        let n = self.spec.points;
        let stride = self.spec.stride(axis);
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let base_wavenumber = TAU / self.spec.scale;
        let symbol: Vec<Complex64> = (0..n)
            .map(|j| {
                let k = if j < n / 2 {
                    j as f64
                } else {
                    j as f64 - n as f64
                };
                if j == n / 2 && order % 2 == 1 {
                    return Complex64::new(0.0, 0.0);
                }
                // (i k)^order with the power of i applied exactly
                let mag = (k * base_wavenumber).powi(order as i32) / n as f64;
                match order % 4 {
                    0 => Complex64::new(mag, 0.0),
                    1 => Complex64::new(0.0, mag),
                    2 => Complex64::new(-mag, 0.0),
                    _ => Complex64::new(0.0, -mag),
                }
            })
            .collect();
        let mut out = vec![0.0; values.len()];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for flat in 0..values.len() {
            if !(flat / stride).is_multiple_of(n) {
                continue;
            }
            for (k, z) in line.iter_mut().enumerate() {
                *z = Complex64::new(values[flat + k * stride], 0.0);
            }
            forward.process(&mut line);
            for (z, s) in line.iter_mut().zip(&symbol) {
                *z *= s;
            }
            inverse.process(&mut line);
            for (k, z) in line.iter().enumerate() {
                out[flat + k * stride] = z.re;
            }
        }
        out
    }

    /// Rectangle rule `h^n * sum(values)`, summed pairwise in a fixed order.
    pub fn integrate(&self) -> f64 {
        self.spec.spacing().powi(self.spec.dim as i32) * pairwise_sum(&self.values)
    }

    /// Average over the fundamental domain.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    /// Discrete Fourier coefficient `N^-n * sum values * exp(-2 pi i k . idx / N)`.
    pub fn fourier_mode(&self, k: &[i64]) -> Result<Complex64> {
        let n = self.spec.points as i64;
        if k.len() != self.spec.dim || k.iter().any(|&kj| 2 * kj.abs() >= n) {
            return Err(Error::AliasedMode {
                mode: k.to_vec(),
                points: self.spec.points,
            });
        }
        let mut re = Vec::with_capacity(self.values.len());
        let mut im = Vec::with_capacity(self.values.len());
        for (flat, &v) in self.values.iter().enumerate() {
            let idx = self.spec.multi_index(flat);
            let phase = (0..self.spec.dim)
                .map(|a| k[a] * idx[a] as i64)
                .sum::<i64>()
                .rem_euclid(n);
            let angle = -TAU * phase as f64 / n as f64;
            re.push(v * angle.cos());
            im.push(v * angle.sin());
        }
        let norm = self.values.len() as f64;
        Ok(Complex64::new(pairwise_sum(&re) / norm, pairwise_sum(&im) / norm))
    }

    /// Periodic cubic interpolation at an arbitrary point (wrapped into the
    /// domain). Builds a fresh [`crate::interp::Interpolator`]; reuse one for
    /// repeated queries.
    pub fn interpolate(&self, point: &[f64]) -> f64 {
        crate::interp::Interpolator::new(self).value(point)
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

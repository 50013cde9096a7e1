//! Symplectic potentials `u(x) = c|x|^2/2 + b.x + a + psi(x)` with periodic `psi`.
//!
//! The affine part `b.x + a` is zero for potentials coming from initial data
//! and only appears after the origin normalization done by [`SymplecticPotential::rescale`].
//! It never affects Hessians, curvature or the flow.

use crate::error::{Error, Result};
use crate::field::{GridSpec, PeriodicField, MAX_DIM};
use crate::interp::Interpolator;
use crate::linalg::{self, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Symmetric matrix-valued field stored as its upper triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct SymField {
    dim: usize,
    comps: Vec<PeriodicField>,
}

impl SymField {
    fn slot(dim: usize, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * dim - i * (i + 1) / 2 + j
    }

    pub fn from_fn<F>(dim: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> PeriodicField,
    {
        let mut comps = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                comps.push(f(i, j));
            }
        }
        Self { dim, comps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &PeriodicField {
        &self.comps[Self::slot(self.dim, i, j)]
    }

    /// The matrix at node `flat`.
    pub fn at(&self, flat: usize) -> Mat {
        let mut m = linalg::ZERO;
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = self.get(i, j).values()[flat];
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    }
}

/// Per-node Hessian `u_ij`, its inverse `u^ij`, determinant and extreme eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianData {
    pub hess: SymField,
    pub inv: SymField,
    pub det: PeriodicField,
    pub eig_min: PeriodicField,
    pub eig_max: PeriodicField,
}

impl HessianData {
    pub(crate) fn compute(c: f64, psi: &PeriodicField) -> Result<Self> {
        let spec = *psi.spec();
        let n = spec.dim();
        let hess = SymField::from_fn(n, |i, j| {
            let d = psi.derivative(&[i, j]).expect("second derivatives are supported");
            if i == j {
                d.map(|v| c + v)
            } else {
                d
            }
        });
        let len = spec.len();
        let mut inv_vals = vec![vec![0.0; len]; n * (n + 1) / 2];
        let mut det = vec![0.0; len];
        let mut eig_min = vec![0.0; len];
        let mut eig_max = vec![0.0; len];
        let mut worst: Option<(usize, f64)> = None;
        for flat in 0..len {
            let m = hess.at(flat);
            let (lo, hi) = linalg::eig_extremes(&m, n);
            if !(lo > 0.0 && hi.is_finite()) {
                let lo = if lo.is_nan() { f64::NEG_INFINITY } else { lo };
                if worst.is_none_or(|(_, w)| lo < w) {
                    worst = Some((flat, lo));
                }
                continue;
            }
            let inv = linalg::inverse(&m, n);
            let mut slot = 0;
            for i in 0..n {
                for j in i..n {
                    inv_vals[slot][flat] = inv[i][j];
                    slot += 1;
                }
            }
            det[flat] = linalg::det(&m, n);
            eig_min[flat] = lo;
            eig_max[flat] = hi;
        }
        if let Some((flat, lo)) = worst {
            return Err(Error::ConvexityLoss {
                point: spec.point(flat),
                eig_min: lo,
            });
        }
        let mut inv_iter = inv_vals.into_iter();
        let inv = SymField::from_fn(n, |_, _| {
            PeriodicField::from_raw(spec, inv_iter.next().expect("one slot per component"))
        });
        Ok(Self {
            hess,
            inv,
            det: PeriodicField::from_raw(spec, det),
            eig_min: PeriodicField::from_raw(spec, eig_min),
            eig_max: PeriodicField::from_raw(spec, eig_max),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MConditionReport {
    pub m_estimate: f64,
    /// Endpoints `(p0, p3)` of the segment attaining `m_estimate`.
    pub worst_segment: (Vec<f64>, Vec<f64>),
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupNorms {
    pub sup_u: f64,
    pub sup_grad: f64,
    pub psi_mean: f64,
}

/// One cosine mode `amplitude * cos(2 pi k.x / scale + phase)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CosineMode {
    pub k: Vec<i64>,
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Clone, Debug)]
pub struct SymplecticPotential {
    c: f64,
    psi: PeriodicField,
    linear: [f64; MAX_DIM],
    offset: f64,
    hessian: HessianData,
}

impl PartialEq for SymplecticPotential {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c
            && self.psi == other.psi
            && self.linear == other.linear
            && self.offset == other.offset
    }
}

impl SymplecticPotential {
    /// Builds `c|x|^2/2 + psi`, checking strong convexity at every node.
    pub fn new(c: f64, psi: PeriodicField) -> Result<Self> {
        Self::with_affine(c, psi, &[], 0.0)
    }

    pub fn with_affine(c: f64, psi: PeriodicField, linear: &[f64], offset: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "quadratic coefficient must be positive, got {c}"
            )));
        }
        let n = psi.spec().dim();
        if !linear.is_empty() && linear.len() != n {
            return Err(Error::InvalidArgument(format!(
                "linear part has {} components, expected {n}",
                linear.len()
            )));
        }
        if let Some(i) = psi.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                point: psi.spec().point(i),
                value: psi.values()[i],
            });
        }
        let mut lin = [0.0; MAX_DIM];
        lin[..linear.len()].copy_from_slice(linear);
        let hessian = HessianData::compute(c, &psi)?;
        Ok(Self {
            c,
            psi,
            linear: lin,
            offset,
            hessian,
        })
    }

    pub fn flat(spec: GridSpec) -> Self {
        Self::new(1.0, PeriodicField::zeros(spec)).expect("the flat potential is convex")
    }

    /// `psi = sum of cosine modes`, with wave vectors in units of the domain size.
    pub fn cosine_modes(spec: GridSpec, c: f64, modes: &[CosineMode]) -> Result<Self> {
        for m in modes {
            if m.k.len() != spec.dim() {
                return Err(Error::InvalidArgument(format!(
                    "wave vector {:?} has wrong dimension (expected {})",
                    m.k,
                    spec.dim()
                )));
            }
        }
        let s = spec.scale();
        let psi = PeriodicField::sample(spec, |x| {
            modes
                .iter()
                .map(|m| {
                    let kx: f64 = m.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum();
                    m.amplitude * (TAU * kx / s + m.phase).cos()
                })
                .sum()
        })?;
        Self::new(c, psi)
    }

    /// Seeded random band-limited periodic part: every wave vector with
    /// `0 < |k| <= max_k` (one of each `+-k` pair) gets amplitude
    /// `amplitude * r / |k|^2`, `r ~ U(-1, 1)`, and a uniform phase.
    pub fn random_bandlimited(
        spec: GridSpec,
        max_k: u32,
        amplitude: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::cosine_modes(spec, 1.0, &bandlimited_modes(spec.dim(), max_k, amplitude, seed))
    }

    /// The same quadratic and affine parts with a new periodic part.
    pub fn with_psi(&self, psi: PeriodicField) -> Result<Self> {
        Self::with_affine(self.c, psi, self.linear(), self.offset)
    }

    pub fn spec(&self) -> &GridSpec {
        self.psi.spec()
    }

    pub fn dim(&self) -> usize {
        self.psi.spec().dim()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn psi(&self) -> &PeriodicField {
        &self.psi
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear[..self.dim()]
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn hessian_data(&self) -> &HessianData {
        &self.hessian
    }

    pub fn is_flat(&self) -> bool {
        self.psi.values().iter().all(|&v| v == self.psi.values()[0])
    }

    /// Full potential `u` sampled at the nodes.
    pub fn values(&self) -> PeriodicField {
        let spec = *self.spec();
        let n = spec.dim();
        let values = (0..spec.len())
            .map(|flat| {
                let x = spec.point_array(flat);
                let quad: f64 = x[..n].iter().map(|v| v * v).sum::<f64>() * 0.5 * self.c;
                let aff: f64 = (0..n).map(|a| self.linear[a] * x[a]).sum::<f64>() + self.offset;
                quad + aff + self.psi.values()[flat]
            })
            .collect();
        PeriodicField::from_raw(spec, values)
    }

    /// Interpolant of the periodic part, for repeated off-grid gradient queries.
    pub fn psi_interpolator(&self) -> Interpolator {
        Interpolator::new(&self.psi)
    }

    /// `grad u` at an arbitrary point, with `grad psi` taken from `interp`.
    pub fn gradient_at(&self, interp: &Interpolator, point: &[f64]) -> [f64; MAX_DIM] {
        let local = interp.value_and_gradient(point);
        let mut g = [0.0; MAX_DIM];
        for a in 0..self.dim() {
            g[a] = self.c * point[a] + self.linear[a] + local.grad[a];
        }
        g
    }

    /// `grad u` at every node, `grad psi` by finite differences.
    pub fn node_gradients(&self) -> Vec<PeriodicField> {
        let spec = *self.spec();
        (0..self.dim())
            .map(|a| {
                let d = self.psi.derivative(&[a]).expect("first derivative");
                let values = d
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(flat, &g)| self.c * spec.point_array(flat)[a] + self.linear[a] + g)
                    .collect();
                PeriodicField::from_raw(spec, values)
            })
            .collect()
    }

    /// Largest value of `|grad_nu u(p1) - grad_nu u(p2)|` over the tested
    /// segments, `p1, p2` being the trisection points of `p0 p3` and `nu` its
    /// direction.
    ///
    /// Tested segments: every full-length axis-aligned segment through a grid
    /// row, the main diagonals of the domain, and `n_segments` random segments
    /// with endpoints drawn uniformly from the domain (seeded).
    pub fn m_condition_estimate(&self, n_segments: usize, seed: u64) -> MConditionReport {
        let interp = self.psi_interpolator();
        let spec = *self.spec();
        let n = spec.dim();
        let half = 0.5 * spec.scale();

        let mut best = (f64::NEG_INFINITY, [0.0; MAX_DIM], [0.0; MAX_DIM]);
        let mut samples = 0usize;
        let mut test = |p0: [f64; MAX_DIM], p3: [f64; MAX_DIM]| {
            let mut d = [0.0; MAX_DIM];
            for a in 0..n {
                d[a] = p3[a] - p0[a];
            }
            let len = d[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
            if len == 0.0 {
                return;
            }
            let mut p1 = [0.0; MAX_DIM];
            let mut p2 = [0.0; MAX_DIM];
            for a in 0..n {
                p1[a] = p0[a] + d[a] / 3.0;
                p2[a] = p0[a] + 2.0 * d[a] / 3.0;
            }
            let g1 = self.gradient_at(&interp, &p1[..n]);
            let g2 = self.gradient_at(&interp, &p2[..n]);
            let val = (0..n).map(|a| d[a] / len * (g1[a] - g2[a])).sum::<f64>().abs();
            samples += 1;
            if val > best.0 {
                best = (val, p0, p3);
            }
        };

        let rows = spec.points().pow(n as u32 - 1);
        for axis in 0..n {
            for row in 0..rows {
                let mut p0 = [0.0; MAX_DIM];
                let mut rem = row;
                for a in (0..n).filter(|&a| a != axis) {
                    p0[a] = spec.coordinate(rem % spec.points());
                    rem /= spec.points();
                }
                let mut p3 = p0;
                p0[axis] = -half;
                p3[axis] = half;
                test(p0, p3);
            }
        }
        if n > 1 {
            for mask in 0..(1usize << (n - 1)) {
                let mut p0 = [0.0; MAX_DIM];
                p0[0] = -half;
                for a in 1..n {
                    p0[a] = if mask & (1 << (a - 1)) != 0 { half } else { -half };
                }
                let mut p3 = [0.0; MAX_DIM];
                for a in 0..n {
                    p3[a] = -p0[a];
                }
                test(p0, p3);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_segments {
            let mut p0 = [0.0; MAX_DIM];
            let mut p3 = [0.0; MAX_DIM];
            for a in 0..n {
                p0[a] = rng.gen_range(-half..half);
                p3[a] = rng.gen_range(-half..half);
            }
            test(p0, p3);
        }

        MConditionReport {
            m_estimate: best.0.max(0.0),
            worst_segment: (best.1[..n].to_vec(), best.2[..n].to_vec()),
            samples,
        }
    }

    /// Blow-up rescaling `u~(y) = lam * u(p + y/lam)` followed by subtraction
    /// of the affine function making `u~(0) = 0` and `grad u~(0) = 0`.
    ///
    /// The domain grows to `lam * scale` with the same number of points per
    /// axis, the quadratic coefficient becomes `c/lam`, and the periodic part
    /// is resampled (exactly, when `p` is a grid node).
    pub fn rescale(&self, lam: f64, p: &[f64]) -> Result<Self> {
        if !(lam.is_finite() && lam > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rescaling factor must be positive, got {lam}"
            )));
        }
        let n = self.dim();
        if p.len() != n {
            return Err(Error::InvalidArgument(format!(
                "center has {} coordinates, expected {n}",
                p.len()
            )));
        }
        let spec = *self.spec();
        let new_spec = spec.with_scale(lam * spec.scale())?;
        let interp = self.psi_interpolator();
        let center = interp.value_and_gradient(p);
        let mut x = [0.0; MAX_DIM];
        let values = (0..new_spec.len())
            .map(|flat| {
                let y = new_spec.point_array(flat);
                for a in 0..n {
                    x[a] = p[a] + y[a] / lam;
                }
                lam * (interp.value(&x[..n]) - center.value)
            })
            .collect();
        let psi = PeriodicField::new(new_spec, values)?;
        let linear: Vec<f64> = center.grad[..n].iter().map(|g| -g).collect();
        Self::with_affine(self.c / lam, psi, &linear, 0.0)
    }

    /// Sup norms of `u` and `grad u` over the nodes and the mean of `psi`.
    pub fn sup_norms(&self) -> SupNorms {
        let sup_u = self.values().sup_norm();
        let grads = self.node_gradients();
        let sup_grad = (0..self.spec().len())
            .map(|flat| grads.iter().map(|g| g.values()[flat].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        SupNorms {
            sup_u,
            sup_grad,
            psi_mean: self.psi.integrate() / self.spec().volume(),
        }
    }
}

/// Mode list used by [`SymplecticPotential::random_bandlimited`].
pub fn bandlimited_modes(dim: usize, max_k: u32, amplitude: f64, seed: u64) -> Vec<CosineMode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = max_k as i64;
    let mut modes = Vec::new();
    let range: Vec<i64> = (-m..=m).collect();
    let mut k = vec![0i64; dim];
    let total = range.len().pow(dim as u32);
    for code in 0..total {
        let mut rem = code;
        for slot in k.iter_mut().rev() {
            *slot = range[rem % range.len()];
            rem /= range.len();
        }
        let norm2: i64 = k.iter().map(|v| v * v).sum();
        let first_nonzero = k.iter().copied().find(|&v| v != 0);
        if norm2 == 0 || norm2 > m * m || first_nonzero.unwrap_or(0) < 0 {
            continue;
        }
        let r: f64 = rng.gen_range(-1.0..1.0);
        let phase: f64 = rng.gen_range(0.0..TAU);
        modes.push(CosineMode {
            k: k.clone(),
            amplitude: amplitude * r / norm2 as f64,
            phase,
        });
    }
    modes
}

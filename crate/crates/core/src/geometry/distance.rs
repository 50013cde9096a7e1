//! Graph approximation of the base-metric distance `ds^2 = u_ij dx^i dx^j`
//! and the Hessian comparison along it.

use super::riemann_norm;
use crate::error::{Error, Result};
use crate::field::{GridSpec, MAX_DIM};
use crate::interp::Interpolator;
use crate::linalg::{self, Mat};
use crate::potential::SymplecticPotential;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Shortest paths over the grid graph with all `3^n - 1` king-move neighbours
/// (periodic), edge weight `sqrt(dx . u_ij(midpoint) . dx)`.
///
/// Path lengths bound the true distance from above.
pub struct DistanceGraph<'a> {
    u: &'a SymplecticPotential,
    hess_interp: Vec<Interpolator>,
    offsets: Vec<[isize; MAX_DIM]>,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> DistanceGraph<'a> {
    pub fn new(u: &'a SymplecticPotential) -> Self {
        let n = u.dim();
        let mut hess_interp = Vec::new();
        for i in 0..n {
            for j in i..n {
                let d = u.psi().derivative(&[i, j]).expect("order 2");
                hess_interp.push(Interpolator::new(&d));
            }
        }
        let mut offsets = Vec::new();
        for code in 0..3usize.pow(n as u32) {
            let mut off = [0isize; MAX_DIM];
            let mut rem = code;
            for o in off.iter_mut().take(n) {
                *o = (rem % 3) as isize - 1;
                rem /= 3;
            }
            if off.iter().any(|&v| v != 0) {
                offsets.push(off);
            }
        }
        Self {
            u,
            hess_interp,
            offsets,
        }
    }

    fn spec(&self) -> &GridSpec {
        self.u.spec()
    }

    /// Hessian of `u` at an arbitrary point (interpolated second derivatives).
    pub fn hessian_at(&self, point: &[f64]) -> Mat {
        let n = self.u.dim();
        let mut m = linalg::ZERO;
        let mut slot = 0;
        for i in 0..n {
            for j in i..n {
                let v = self.hess_interp[slot].value(point);
                let v = if i == j { v + self.u.c() } else { v };
                m[i][j] = v;
                m[j][i] = v;
                slot += 1;
            }
        }
        m
    }

    /// Metric length of the straight segment from `a` to `a + delta`,
    /// evaluated at its midpoint.
    fn segment_length(&self, a: &[f64], delta: &[f64]) -> f64 {
        let n = self.u.dim();
        let mut mid = [0.0; MAX_DIM];
        for k in 0..n {
            mid[k] = a[k] + 0.5 * delta[k];
        }
        let h = self.hessian_at(&mid[..n]);
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += delta[i] * h[i][j] * delta[j];
            }
        }
        q.max(0.0).sqrt()
    }

    /// Corners of the cell containing `p`, with the displacement from `p` to
    /// each corner (unwrapped).
    fn cell_corners(&self, p: &[f64]) -> Vec<(usize, [f64; MAX_DIM])> {
        let spec = self.spec();
        let n = spec.dim();
        let h = spec.spacing();
        let mut base = [0isize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for a in 0..n {
            let t = (p[a] / spec.scale() + 0.5) * spec.points() as f64;
            let k = t.floor();
            base[a] = k as isize;
            frac[a] = t - k;
        }
        (0..(1usize << n))
            .map(|corner| {
                let mut idx = [0isize; MAX_DIM];
                let mut delta = [0.0; MAX_DIM];
                for a in 0..n {
                    let bit = ((corner >> a) & 1) as f64;
                    idx[a] = base[a] + bit as isize;
                    delta[a] = (bit - frac[a]) * h;
                }
                (spec.flat_index(&idx[..n]), delta)
            })
            .collect()
    }

    /// Upper bound on the distance between `x` and `y` on the torus.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.u.dim();
        if x[..n] == y[..n] {
            return 0.0;
        }
        let spec = *self.spec();
        let h = spec.spacing();
        let mut dist = vec![f64::INFINITY; spec.len()];
        let mut heap = BinaryHeap::new();
        for (node, delta) in self.cell_corners(x) {
            let d = self.segment_length(x, &delta[..n]);
            if d < dist[node] {
                dist[node] = d;
                heap.push(Entry { dist: d, node });
            }
        }
        // Direct segment when both points share a cell.
        let mut best = f64::INFINITY;
        let targets = self.cell_corners(y);
        let same_cell = self
            .cell_corners(x)
            .iter()
            .zip(&targets)
            .all(|(a, b)| a.0 == b.0);
        if same_cell {
            let delta: Vec<f64> = (0..n).map(|a| y[a] - x[a]).collect();
            best = self.segment_length(x, &delta);
        }
        let exit: Vec<(usize, f64)> = targets
            .iter()
            .map(|(node, delta)| {
                let back: Vec<f64> = delta[..n].iter().map(|d| -d).collect();
                let corner: Vec<f64> = (0..n).map(|a| y[a] + delta[a]).collect();
                (*node, self.segment_length(&corner, &back))
            })
            .collect();

        while let Some(Entry { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            if d >= best {
                break;
            }
            for &(t, w) in &exit {
                if t == node {
                    best = best.min(d + w);
                }
            }
            let idx = spec.multi_index(node);
            let x0 = spec.point_array(node);
            for off in &self.offsets {
                let mut nb = [0isize; MAX_DIM];
                let mut delta = [0.0; MAX_DIM];
                for a in 0..n {
                    nb[a] = idx[a] as isize + off[a];
                    delta[a] = off[a] as f64 * h;
                }
                let next = spec.flat_index(&nb[..n]);
                let nd = d + self.segment_length(&x0[..n], &delta[..n]);
                if nd < dist[next] {
                    dist[next] = nd;
                    heap.push(Entry { dist: nd, node: next });
                }
            }
        }
        best
    }
}

/// Convenience wrapper building a fresh [`DistanceGraph`].
pub fn riemannian_distance(u: &SymplecticPotential, x: &[f64], y: &[f64]) -> f64 {
    DistanceGraph::new(u).distance(x, y)
}

/// Checks `u_ij(y) >= exp(-2d) u_ij(x)` for potentials with `max |Rm| <= 1`.
pub struct HessianComparison<'a> {
    graph: DistanceGraph<'a>,
    max_rm: f64,
}

/// Slack on the `max |Rm| <= 1` precondition, absorbing round-off from the
/// normalization by rescaling.
pub const RM_PRECONDITION_SLACK: f64 = 1e-9;

impl<'a> HessianComparison<'a> {
    pub fn new(u: &'a SymplecticPotential) -> Result<Self> {
        let max_rm = riemann_norm(u)?.max();
        if max_rm > 1.0 + RM_PRECONDITION_SLACK {
            return Err(Error::Precondition(format!(
                "max |Rm| = {max_rm} exceeds 1; rescale the potential first"
            )));
        }
        Ok(Self {
            graph: DistanceGraph::new(u),
            max_rm,
        })
    }

    pub fn max_rm(&self) -> f64 {
        self.max_rm
    }

    /// Smallest eigenvalue of `u_ij(y) - exp(-2d) u_ij(x)`.
    pub fn margin(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.graph.u.dim();
        let d = self.graph.distance(x, y);
        let hx = self.graph.hessian_at(x);
        let hy = self.graph.hessian_at(y);
        let f = (-2.0 * d).exp();
        let mut m = linalg::ZERO;
        for i in 0..n {
            for j in 0..n {
                m[i][j] = hy[i][j] - f * hx[i][j];
            }
        }
        linalg::eig_extremes(&m, n).0
    }
}

//! Uniform Cartesian grids and the fields that live on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible node count per axis; a third derivative needs four
/// points to be exact on cubics.
pub const MIN_NODES: usize = 4;

/// Uniform node-centred grid; node `i` on axis `a` sits at `lo[a] + i·h[a]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    lo: [f64; 3],
    hi: [f64; 3],
    n: [usize; 3],
}

impl Grid3 {
    pub fn new(lo: [f64; 3], hi: [f64; 3], n: [usize; 3]) -> Result<Self> {
        for a in 0..3 {
            if n[a] < MIN_NODES {
                return Err(Error::Domain(format!(
                    "axis {a} has {} nodes, need at least {MIN_NODES}",
                    n[a]
                )));
            }
            if !(hi[a] > lo[a]) || !lo[a].is_finite() || !hi[a].is_finite() {
                return Err(Error::Domain(format!("axis {a} has empty extent [{}, {}]", lo[a], hi[a])));
            }
        }
        Ok(Self { lo, hi, n })
    }

    /// `n³` nodes on the cube `[lo, hi]³`.
    pub fn cube(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new([lo; 3], [hi; 3], [n; 3])
    }

    pub fn lo(&self) -> [f64; 3] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 3] {
        self.hi
    }

    pub fn dims(&self) -> [usize; 3] {
        self.n
    }

    pub fn spacing(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.h(a))
    }

    pub fn h(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.n[axis] - 1) as f64
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.n[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.h(axis)
        }
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.coord(0, i), self.coord(1, j), self.coord(2, k)]
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index, x fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.n[0];
        let j = (idx / self.n[0]) % self.n[1];
        let k = idx / (self.n[0] * self.n[1]);
        [i, j, k]
    }

    /// Memory stride of one step along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.n[0],
            _ => self.n[0] * self.n[1],
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.h(0) * self.h(1) * self.h(2)
    }

    pub fn is_boundary(&self, [i, j, k]: [usize; 3]) -> bool {
        i == 0 || j == 0 || k == 0 || i + 1 == self.n[0] || j + 1 == self.n[1] || k + 1 == self.n[2]
    }

    /// Iterates `(linear index, coordinates)` in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, [f64; 3])> + '_ {
        (0..self.len()).map(move |idx| {
            let [i, j, k] = self.unindex(idx);
            (idx, self.point(i, j, k))
        })
    }

    /// Nearest node index per axis to a physical point (clamped to the grid).
    pub fn nearest(&self, p: [f64; 3]) -> [usize; 3] {
        [0, 1, 2].map(|a| {
            let r = ((p[a] - self.lo[a]) / self.h(a)).round();
            r.clamp(0.0, (self.n[a] - 1) as f64) as usize
        })
    }

    pub fn same_shape(&self, other: &Grid3) -> bool {
        self.n == other.n
            && (0..3).all(|a| {
                let tol = 1e-12 * (self.hi[a] - self.lo[a]).abs().max(1.0);
                (self.lo[a] - other.lo[a]).abs() <= tol && (self.hi[a] - other.hi[a]).abs() <= tol
            })
    }
}

/// A three-component field sampled at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorGrid {
    grid: Grid3,
    comps: [Vec<f64>; 3],
}

impl VectorGrid {
    pub fn zeros(grid: Grid3) -> Self {
        let n = grid.len();
        Self {
            grid,
            comps: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_components(grid: Grid3, comps: [Vec<f64>; 3]) -> Result<Self> {
        for (c, v) in comps.iter().enumerate() {
            if v.len() != grid.len() {
                return Err(Error::Shape(format!(
                    "component {c} has {} values, grid has {} nodes",
                    v.len(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for (idx, p) in grid.nodes() {
            let v = f(p);
            for c in 0..3 {
                out.comps[c][idx] = v[c];
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn comps(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn into_comps(self) -> [Vec<f64>; 3] {
        self.comps
    }

    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    pub fn check_same_grid(&self, other: &VectorGrid) -> Result<()> {
        if self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(Error::Shape("vector fields live on different grids".into()))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, alpha: f64) {
        for c in &mut self.comps {
            c.iter_mut().for_each(|v| *v *= alpha);
        }
    }

    /// `self += alpha · other`
    pub fn axpy(&mut self, alpha: f64, other: &VectorGrid) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += alpha * y);
        }
    }

    /// Euclidean dot product of the raw node values.
    pub fn dot(&self, other: &VectorGrid) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| crate::linalg::dot(a, b))
            .sum()
    }

    /// Discrete `L²` product with uniform weight `h₁h₂h₃`.
    pub fn inner(&self, other: &VectorGrid) -> f64 {
        self.grid.cell_volume() * self.dot(other)
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Copies the nodes of `sub` out of this field, where `sub`'s nodes are
    /// this grid's nodes shifted by `offset` per axis.
    pub fn restrict(&self, sub: &Grid3, offset: [usize; 3]) -> Result<VectorGrid> {
        let d = sub.dims();
        let full = self.grid.dims();
        if (0..3).any(|a| offset[a] + d[a] > full[a]) {
            return Err(Error::Shape("restriction window leaves the grid".into()));
        }
        let mut out = VectorGrid::zeros(*sub);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let src = self.grid.index(i + offset[0], j + offset[1], k + offset[2]);
                    let dst = sub.index(i, j, k);
                    for c in 0..3 {
                        out.comps[c][dst] = self.comps[c][src];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Writes `sub` into this field at the given node offset.
    pub fn embed(&mut self, sub: &VectorGrid, offset: [usize; 3]) -> Result<()> {
        let d = sub.grid.dims();
        let full = self.grid.dims();
        if (0..3).any(|a| offset[a] + d[a] > full[a]) {
            return Err(Error::Shape("embedding window leaves the grid".into()));
        }
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let dst = self.grid.index(i + offset[0], j + offset[1], k + offset[2]);
                    let src = sub.grid.index(i, j, k);
                    for c in 0..3 {
                        self.comps[c][dst] = sub.comps[c][src];
                    }
                }
            }
        }
        Ok(())
    }
}

/// Scalar permeability `μ` and permittivity `ε` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumFields {
    grid: Grid3,
    mu: Vec<f64>,
    eps: Vec<f64>,
    inv_mu: Vec<f64>,
}

impl MediumFields {
    pub fn new(grid: Grid3, mu: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        if mu.len() != grid.len() || eps.len() != grid.len() {
            return Err(Error::Shape("medium arrays do not match the grid".into()));
        }
        if let Some(i) = mu.iter().position(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::Medium(format!("mu = {} at node {i} is not positive", mu[i])));
        }
        if let Some(i) = eps.iter().position(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Medium(format!("eps = {} at node {i} is not positive", eps[i])));
        }
        let inv_mu = mu.iter().map(|m| 1.0 / m).collect();
        Ok(Self {
            grid,
            mu,
            eps,
            inv_mu,
        })
    }

    pub fn vacuum(grid: Grid3) -> Self {
        let n = grid.len();
        Self::new(grid, vec![1.0; n], vec![1.0; n]).expect("unit medium is valid")
    }

    /// Samples `mu(x)` and `eps(x)` at the nodes.
    pub fn from_fn(grid: Grid3, mu: impl Fn([f64; 3]) -> f64, eps: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let m = grid.nodes().map(|(_, p)| mu(p)).collect();
        let e = grid.nodes().map(|(_, p)| eps(p)).collect();
        Self::new(grid, m, e)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn inv_mu(&self) -> &[f64] {
        &self.inv_mu
    }

    /// Largest wave speed `1/√(με)` over the nodes.
    pub fn max_speed(&self) -> f64 {
        self.mu
            .iter()
            .zip(&self.eps)
            .map(|(m, e)| 1.0 / (m * e).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn check_grid(&self, grid: &Grid3) -> Result<()> {
        if self.grid.same_shape(grid) {
            Ok(())
        } else {
            Err(Error::Shape("medium is defined on a different grid".into()))
        }
    }

    pub fn restrict(&self, sub: &Grid3, offset: [usize; 3]) -> Result<MediumFields> {
        let d = sub.dims();
        let mut mu = Vec::with_capacity(sub.len());
        let mut eps = Vec::with_capacity(sub.len());
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let src = self.grid.index(i + offset[0], j + offset[1], k + offset[2]);
                    mu.push(self.mu[src]);
                    eps.push(self.eps[src]);
                }
            }
        }
        MediumFields::new(*sub, mu, eps)
    }
}

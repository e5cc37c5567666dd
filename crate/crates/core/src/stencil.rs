//! One-dimensional finite-difference operators applied along a grid axis.
//!
//! Every derivative stencil is second-order accurate: centred where the
//! centred window fits, otherwise a one-sided window hugging the face.

use crate::grid::Grid3;
use crate::linalg::DenseMatrix;

/// Fornberg's recursion: weights `c[d][j]` such that
/// `f^{(d)}(z) ≈ Σⱼ c[d][j] f(xⱼ)` for `d ≤ max_order`.
pub fn fornberg_weights(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// A banded `n × n` operator stored row by row as `(first column, weights)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisOperator {
    n: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

impl AxisOperator {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            rows: (0..n).map(|i| (i, vec![1.0])).collect(),
        }
    }

    /// Derivative of order `order` on `n` nodes of spacing `h`.
    pub fn derivative(order: usize, n: usize, h: f64) -> Self {
        if order == 0 {
            return Self::identity(n);
        }
        let radius = if order <= 2 { 1 } else { 2 };
        let width = (order + 2).min(n);
        let scale = h.powi(-(order as i32));
        let rows = (0..n)
            .map(|i| {
                let start = if i >= radius && i + radius < n {
                    i - radius
                } else if i < radius {
                    0
                } else {
                    n - width
                };
                let len = if i >= radius && i + radius < n {
                    2 * radius + 1
                } else {
                    width
                };
                let pts: Vec<f64> = (start..start + len).map(|j| j as f64 - i as f64).collect();
                let w = fornberg_weights(0.0, &pts, order);
                (start, w[order].iter().map(|v| v * scale).collect())
            })
            .collect();
        Self { n, rows }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        let (s, w) = &self.rows[i];
        (*s, w)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for (i, (s, w)) in self.rows.iter().enumerate() {
            for (j, v) in w.iter().enumerate() {
                m[(i, s + j)] += v;
            }
        }
        m
    }

    /// Compresses a dense matrix row by row, keeping each row's nonzero span.
    pub fn from_dense(m: &DenseMatrix) -> Self {
        let n = m.rows();
        let rows = (0..n)
            .map(|i| {
                let r = m.row(i);
                match (r.iter().position(|&v| v != 0.0), r.iter().rposition(|&v| v != 0.0)) {
                    (Some(a), Some(b)) => (a, r[a..=b].to_vec()),
                    _ => (i, vec![0.0]),
                }
            })
            .collect();
        Self { n, rows }
    }

    pub fn transpose(&self) -> Self {
        Self::from_dense(&self.to_dense().transpose())
    }

    /// `selfᵀ · self`
    pub fn gram(&self) -> Self {
        let mut g = DenseMatrix::zeros(self.n, self.n);
        for (s, w) in &self.rows {
            for (a, wa) in w.iter().enumerate() {
                for (b, wb) in w.iter().enumerate() {
                    g[(s + a, s + b)] += wa * wb;
                }
            }
        }
        Self::from_dense(&g)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut a = self.to_dense();
        let b = other.to_dense();
        for i in 0..self.n {
            for j in 0..self.n {
                a[(i, j)] += b[(i, j)];
            }
        }
        Self::from_dense(&a)
    }

    /// `dst = (this operator along axis) src` for one scalar grid array.
    pub fn apply_axis(&self, grid: &Grid3, axis: usize, src: &[f64], dst: &mut [f64]) {
        debug_assert_eq!(grid.dims()[axis], self.n);
        let stride = grid.stride(axis);
        for_each_line(grid, axis, |base| {
            for (i, (s, w)) in self.rows.iter().enumerate() {
                let mut acc = 0.0;
                let mut p = base + s * stride;
                for &c in w {
                    acc += c * src[p];
                    p += stride;
                }
                dst[base + i * stride] = acc;
            }
        });
    }

    /// `dst += alpha · (this operator along axis) src`
    pub fn apply_axis_add(&self, grid: &Grid3, axis: usize, alpha: f64, src: &[f64], dst: &mut [f64]) {
        let stride = grid.stride(axis);
        for_each_line(grid, axis, |base| {
            for (i, (s, w)) in self.rows.iter().enumerate() {
                let mut acc = 0.0;
                let mut p = base + s * stride;
                for &c in w {
                    acc += c * src[p];
                    p += stride;
                }
                dst[base + i * stride] += alpha * acc;
            }
        });
    }

    /// `dst += alpha · (transposed operator along axis) src`
    pub fn apply_axis_transpose_add(
        &self,
        grid: &Grid3,
        axis: usize,
        alpha: f64,
        src: &[f64],
        dst: &mut [f64],
    ) {
        let stride = grid.stride(axis);
        for_each_line(grid, axis, |base| {
            for (i, (s, w)) in self.rows.iter().enumerate() {
                let v = alpha * src[base + i * stride];
                if v == 0.0 {
                    continue;
                }
                let mut p = base + s * stride;
                for &c in w {
                    dst[p] += c * v;
                    p += stride;
                }
            }
        });
    }
}

/// Calls `f(base)` with the linear index of the first node of every grid
/// line parallel to `axis`.
fn for_each_line(grid: &Grid3, axis: usize, mut f: impl FnMut(usize)) {
    let d = grid.dims();
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for jb in 0..d[b] {
        for ja in 0..d[a] {
            let mut idx = [0usize; 3];
            idx[a] = ja;
            idx[b] = jb;
            f(grid.index(idx[0], idx[1], idx[2]));
        }
    }
}

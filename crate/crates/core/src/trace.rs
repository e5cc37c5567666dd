//! Per-face boundary arrays.
//!
//! Each of the six faces stores one value triple per face node. Edge and
//! corner nodes belong to several faces and are stored once per face. Node
//! order within a face runs over the two tangential axes (lower axis
//! fastest); components are innermost.

use crate::error::{Error, Result};
use crate::grid::Grid3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceId {
    XLo,
    XHi,
    YLo,
    YHi,
    ZLo,
    ZHi,
}

impl FaceId {
    pub const ALL: [FaceId; 6] = [
        FaceId::XLo,
        FaceId::XHi,
        FaceId::YLo,
        FaceId::YHi,
        FaceId::ZLo,
        FaceId::ZHi,
    ];

    pub fn axis(self) -> usize {
        match self {
            FaceId::XLo | FaceId::XHi => 0,
            FaceId::YLo | FaceId::YHi => 1,
            FaceId::ZLo | FaceId::ZHi => 2,
        }
    }

    pub fn is_hi(self) -> bool {
        matches!(self, FaceId::XHi | FaceId::YHi | FaceId::ZHi)
    }

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[self.axis()] = if self.is_hi() { 1.0 } else { -1.0 };
        n
    }

    /// Sign of the outward normal along its axis.
    pub fn sign(self) -> f64 {
        if self.is_hi() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn tangential_axes(self) -> (usize, usize) {
        match self.axis() {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FaceId::XLo => "x-",
            FaceId::XHi => "x+",
            FaceId::YLo => "y-",
            FaceId::YHi => "y+",
            FaceId::ZLo => "z-",
            FaceId::ZHi => "z+",
        }
    }

    /// Number of nodes on this face.
    pub fn node_count(self, grid: &Grid3) -> usize {
        let (a, b) = self.tangential_axes();
        grid.dims()[a] * grid.dims()[b]
    }

    /// Surface element `h_a h_b` attached to each node of the face.
    pub fn area_weight(self, grid: &Grid3) -> f64 {
        let (a, b) = self.tangential_axes();
        grid.h(a) * grid.h(b)
    }

    /// Volume index of every face node, in face order.
    pub fn volume_indices(self, grid: &Grid3) -> Vec<usize> {
        let d = grid.dims();
        let (a, b) = self.tangential_axes();
        let fixed = if self.is_hi() { d[self.axis()] - 1 } else { 0 };
        let mut out = Vec::with_capacity(d[a] * d[b]);
        for jb in 0..d[b] {
            for ja in 0..d[a] {
                let mut idx = [0usize; 3];
                idx[self.axis()] = fixed;
                idx[a] = ja;
                idx[b] = jb;
                out.push(grid.index(idx[0], idx[1], idx[2]));
            }
        }
        out
    }
}

/// Number of per-face node entries, i.e. the sum of face sizes.
pub fn boundary_entry_count(grid: &Grid3) -> usize {
    FaceId::ALL.iter().map(|f| f.node_count(grid)).sum()
}

/// Value triples on all six faces of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    grid: Grid3,
    faces: [Vec<f64>; 6],
}

impl BoundaryTrace {
    pub fn zeros(grid: Grid3) -> Self {
        let faces = FaceId::ALL.map(|f| vec![0.0; 3 * f.node_count(&grid)]);
        Self { grid, faces }
    }

    /// Builds a trace from concatenated face data in `FaceId::ALL` order.
    pub fn from_flat(grid: Grid3, flat: &[f64]) -> Result<Self> {
        let total = 3 * boundary_entry_count(&grid);
        if flat.len() != total {
            return Err(Error::Shape(format!(
                "boundary trace needs {total} values, got {}",
                flat.len()
            )));
        }
        let mut out = Self::zeros(grid);
        let mut off = 0;
        for f in &mut out.faces {
            let n = f.len();
            f.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(out)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn face(&self, f: FaceId) -> &[f64] {
        &self.faces[f as usize]
    }

    pub fn face_mut(&mut self, f: FaceId) -> &mut [f64] {
        &mut self.faces[f as usize]
    }

    /// Value triple of face node `i`.
    pub fn node(&self, f: FaceId, i: usize) -> [f64; 3] {
        let s = &self.faces[f as usize][3 * i..3 * i + 3];
        [s[0], s[1], s[2]]
    }

    pub fn len(&self) -> usize {
        self.faces.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All values, faces concatenated in `FaceId::ALL` order.
    pub fn flat(&self) -> Vec<f64> {
        self.faces.iter().flat_map(|f| f.iter().copied()).collect()
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.faces.iter().flat_map(|f| f.iter())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.faces.iter_mut().flat_map(|f| f.iter_mut())
    }

    pub fn check_same_grid(&self, other: &BoundaryTrace) -> Result<()> {
        if self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(Error::Shape("boundary traces live on different grids".into()))
        }
    }

    /// Euclidean dot product of the raw values.
    pub fn dot(&self, other: &BoundaryTrace) -> f64 {
        self.faces
            .iter()
            .zip(&other.faces)
            .map(|(a, b)| crate::linalg::dot(a, b))
            .sum()
    }

    /// Surface `L²` product: each face weighted by its node area.
    pub fn inner(&self, other: &BoundaryTrace) -> f64 {
        FaceId::ALL
            .iter()
            .map(|&f| f.area_weight(&self.grid) * crate::linalg::dot(self.face(f), other.face(f)))
            .sum()
    }

    pub fn axpy(&mut self, alpha: f64, other: &BoundaryTrace) {
        for (a, b) in self.faces.iter_mut().zip(&other.faces) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += alpha * y);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values_mut().for_each(|v| *v *= alpha);
    }

    /// Multiplies each face by its area weight.
    pub fn area_weighted(&self) -> BoundaryTrace {
        let mut out = self.clone();
        for f in FaceId::ALL {
            let w = f.area_weight(&self.grid);
            out.face_mut(f).iter_mut().for_each(|v| *v *= w);
        }
        out
    }
}

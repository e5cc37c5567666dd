//! Discrete spatial operators on collocated grids and their exact transposes.
//!
//! Transposes come in two flavours. The `*_transpose` methods on
//! [`FieldOps`] are Euclidean (plain sums over stored values), which is
//! what the normal equations need. [`transpose_apply`] returns the adjoint
//! under the weighted products: `h₁h₂h₃` per volume node and `h_a h_b` per
//! face node.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{Grid3, MediumFields, VectorGrid};
use crate::stencil::AxisOperator;
use crate::trace::{BoundaryTrace, FaceId};

/// Multi-index `α = (αx, αy, αz)` of a mixed partial derivative.
pub type MultiIndex = [usize; 3];

/// All multi-indices with `|α| ≤ 3`, lexicographic in `(αx, αy, αz)`.
pub fn h3_multi_indices() -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(20);
    for a in 0..=3 {
        for b in 0..=3 - a {
            for c in 0..=3 - a - b {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Cached per-axis derivative stencils for one grid.
#[derive(Debug, Clone)]
pub struct FieldOps {
    grid: Grid3,
    /// `deriv[axis][order]` for orders 0..=3
    deriv: [Vec<AxisOperator>; 3],
}

impl FieldOps {
    pub fn new(grid: &Grid3) -> Self {
        let deriv = [0, 1, 2].map(|a| {
            (0..=3)
                .map(|k| AxisOperator::derivative(k, grid.dims()[a], grid.h(a)))
                .collect()
        });
        Self { grid: *grid, deriv }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn axis_derivative(&self, axis: usize, order: usize) -> &AxisOperator {
        &self.deriv[axis][order]
    }

    fn d1(&self, axis: usize) -> &AxisOperator {
        &self.deriv[axis][1]
    }

    /// Central differences inside, one-sided second-order on the faces.
    pub fn curl(&self, v: &VectorGrid) -> VectorGrid {
        let g = &self.grid;
        let mut out = VectorGrid::zeros(*g);
        let [v1, v2, v3] = v.comps();
        // (Dy v3 - Dz v2, Dz v1 - Dx v3, Dx v2 - Dy v1)
        self.d1(1).apply_axis_add(g, 1, 1.0, v3, out.comp_mut(0));
        self.d1(2).apply_axis_add(g, 2, -1.0, v2, out.comp_mut(0));
        self.d1(2).apply_axis_add(g, 2, 1.0, v1, out.comp_mut(1));
        self.d1(0).apply_axis_add(g, 0, -1.0, v3, out.comp_mut(1));
        self.d1(0).apply_axis_add(g, 0, 1.0, v2, out.comp_mut(2));
        self.d1(1).apply_axis_add(g, 1, -1.0, v1, out.comp_mut(2));
        out
    }

    /// Euclidean transpose of [`FieldOps::curl`].
    pub fn curl_transpose(&self, w: &VectorGrid) -> VectorGrid {
        let g = &self.grid;
        let mut out = VectorGrid::zeros(*g);
        let [w1, w2, w3] = w.comps();
        // (Dzᵀ w2 - Dyᵀ w3, Dxᵀ w3 - Dzᵀ w1, Dyᵀ w1 - Dxᵀ w2)
        self.d1(2).apply_axis_transpose_add(g, 2, 1.0, w2, out.comp_mut(0));
        self.d1(1).apply_axis_transpose_add(g, 1, -1.0, w3, out.comp_mut(0));
        self.d1(0).apply_axis_transpose_add(g, 0, 1.0, w3, out.comp_mut(1));
        self.d1(2).apply_axis_transpose_add(g, 2, -1.0, w1, out.comp_mut(1));
        self.d1(1).apply_axis_transpose_add(g, 1, 1.0, w1, out.comp_mut(2));
        self.d1(0).apply_axis_transpose_add(g, 0, -1.0, w2, out.comp_mut(2));
        out
    }

    /// `∇ × (μ⁻¹ ∇ × v)`.
    pub fn curl_curl(&self, v: &VectorGrid, medium: &MediumFields) -> VectorGrid {
        let mut c = self.curl(v);
        scale_pointwise(&mut c, medium.inv_mu());
        self.curl(&c)
    }

    pub fn curl_curl_transpose(&self, w: &VectorGrid, medium: &MediumFields) -> VectorGrid {
        let mut c = self.curl_transpose(w);
        scale_pointwise(&mut c, medium.inv_mu());
        self.curl_transpose(&c)
    }

    /// Componentwise `Dᵅ v`.
    pub fn derivative(&self, v: &VectorGrid, alpha: MultiIndex) -> VectorGrid {
        let g = &self.grid;
        let mut out = v.clone();
        let mut tmp = vec![0.0; g.len()];
        for c in 0..3 {
            for axis in 0..3 {
                if alpha[axis] == 0 {
                    continue;
                }
                self.deriv[axis][alpha[axis]].apply_axis(g, axis, out.comp(c), &mut tmp);
                out.comp_mut(c).copy_from_slice(&tmp);
            }
        }
        out
    }

    pub fn derivative_transpose(&self, w: &VectorGrid, alpha: MultiIndex) -> VectorGrid {
        let g = &self.grid;
        let mut out = w.clone();
        for c in 0..3 {
            for axis in 0..3 {
                if alpha[axis] == 0 {
                    continue;
                }
                let mut tmp = vec![0.0; g.len()];
                self.deriv[axis][alpha[axis]].apply_axis_transpose_add(g, axis, 1.0, out.comp(c), &mut tmp);
                out.comp_mut(c).copy_from_slice(&tmp);
            }
        }
        out
    }

    pub fn dirichlet_trace(&self, v: &VectorGrid) -> BoundaryTrace {
        let mut out = BoundaryTrace::zeros(self.grid);
        for f in FaceId::ALL {
            let idx = f.volume_indices(&self.grid);
            let dst = out.face_mut(f);
            for (i, &p) in idx.iter().enumerate() {
                for c in 0..3 {
                    dst[3 * i + c] = v.comp(c)[p];
                }
            }
        }
        out
    }

    /// Scatter-add of face values back into the volume.
    pub fn dirichlet_transpose(&self, w: &BoundaryTrace) -> VectorGrid {
        let mut out = VectorGrid::zeros(self.grid);
        for f in FaceId::ALL {
            let idx = f.volume_indices(&self.grid);
            let src = w.face(f);
            for (i, &p) in idx.iter().enumerate() {
                for c in 0..3 {
                    out.comp_mut(c)[p] += src[3 * i + c];
                }
            }
        }
        out
    }

    /// Stencil of the outward normal derivative at the face nodes:
    /// returns `(first node along the axis, signed weights)`.
    fn normal_stencil(&self, f: FaceId) -> (usize, Vec<f64>) {
        let d = self.d1(f.axis());
        let n = self.grid.dims()[f.axis()];
        let (start, w) = d.row(if f.is_hi() { n - 1 } else { 0 });
        (start, w.iter().map(|x| f.sign() * x).collect())
    }

    /// `∂_ν v` componentwise with the three-point one-sided stencil.
    pub fn neumann_trace(&self, v: &VectorGrid) -> BoundaryTrace {
        let mut out = BoundaryTrace::zeros(self.grid);
        for f in FaceId::ALL {
            let axis = f.axis();
            let stride = self.grid.stride(axis);
            let fixed = if f.is_hi() { self.grid.dims()[axis] - 1 } else { 0 };
            let (start, w) = self.normal_stencil(f);
            let idx = f.volume_indices(&self.grid);
            let dst = out.face_mut(f);
            for (i, &p) in idx.iter().enumerate() {
                let line0 = p - fixed * stride;
                for c in 0..3 {
                    let src = v.comp(c);
                    dst[3 * i + c] = w
                        .iter()
                        .enumerate()
                        .map(|(j, wj)| wj * src[line0 + (start + j) * stride])
                        .sum();
                }
            }
        }
        out
    }

    pub fn neumann_transpose(&self, w: &BoundaryTrace) -> VectorGrid {
        let mut out = VectorGrid::zeros(self.grid);
        for f in FaceId::ALL {
            let axis = f.axis();
            let stride = self.grid.stride(axis);
            let fixed = if f.is_hi() { self.grid.dims()[axis] - 1 } else { 0 };
            let (start, wt) = self.normal_stencil(f);
            let idx = f.volume_indices(&self.grid);
            let src = w.face(f);
            for (i, &p) in idx.iter().enumerate() {
                let line0 = p - fixed * stride;
                for c in 0..3 {
                    let val = src[3 * i + c];
                    let dst = out.comp_mut(c);
                    for (j, wj) in wt.iter().enumerate() {
                        dst[line0 + (start + j) * stride] += wj * val;
                    }
                }
            }
        }
        out
    }

    /// `(∇ × v) × ν` on each face.
    pub fn tangential_curl_trace(&self, v: &VectorGrid) -> BoundaryTrace {
        let mut t = self.dirichlet_trace(&self.curl(v));
        for f in FaceId::ALL {
            let nu = f.normal();
            for chunk in t.face_mut(f).chunks_exact_mut(3) {
                let a = [chunk[0], chunk[1], chunk[2]];
                chunk.copy_from_slice(&cross(a, nu));
            }
        }
        t
    }

    pub fn tangential_curl_transpose(&self, w: &BoundaryTrace) -> VectorGrid {
        // transpose of a ↦ a × ν is w ↦ ν × w
        let mut t = w.clone();
        for f in FaceId::ALL {
            let nu = f.normal();
            for chunk in t.face_mut(f).chunks_exact_mut(3) {
                let a = [chunk[0], chunk[1], chunk[2]];
                chunk.copy_from_slice(&cross(nu, a));
            }
        }
        self.curl_transpose(&self.dirichlet_transpose(&t))
    }

    /// `Σ_{|α| ≤ 3} ⟨Dᵅu, Dᵅv⟩`, summed over components, evaluated term by term.
    pub fn h3_inner(&self, u: &VectorGrid, v: &VectorGrid) -> f64 {
        h3_multi_indices()
            .into_iter()
            .map(|alpha| self.derivative(u, alpha).inner(&self.derivative(v, alpha)))
            .sum()
    }
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn scale_pointwise(v: &mut VectorGrid, s: &[f64]) {
    for c in 0..3 {
        v.comp_mut(c).iter_mut().zip(s).for_each(|(x, w)| *x *= w);
    }
}

/// `Σ_{|α|≤3} DᵅᵀDᵅ` applied to scalar arrays through its Kronecker
/// structure, using per-axis Gram matrices `Mₖ = DₖᵀDₖ`.
#[derive(Debug, Clone)]
pub struct H3Operator {
    grid: Grid3,
    /// `gram[axis][k]`, k = 1..=3 stored at index k (index 0 unused)
    gram: [Vec<AxisOperator>; 3],
    /// `z_partial[j] = Σ_{c ≤ j} M_c` along z
    z_partial: Vec<AxisOperator>,
}

impl H3Operator {
    pub fn new(ops: &FieldOps) -> Self {
        let grid = *ops.grid();
        let gram = [0, 1, 2].map(|a| {
            (0..=3)
                .map(|k| ops.axis_derivative(a, k).gram())
                .collect::<Vec<_>>()
        });
        let mut z_partial = Vec::with_capacity(4);
        let mut acc = AxisOperator::identity(grid.dims()[2]);
        z_partial.push(acc.clone());
        for c in 1..=3 {
            acc = acc.add(&gram[2][c]);
            z_partial.push(acc.clone());
        }
        Self {
            grid,
            gram,
            z_partial,
        }
    }

    /// `dst += alpha · L src` for one scalar array.
    pub fn apply_add(&self, alpha: f64, src: &[f64], dst: &mut [f64]) {
        let g = &self.grid;
        let n = g.len();
        let mut x_buf = vec![0.0; n];
        let mut y_buf = vec![0.0; n];
        for a in 0..=3 {
            let xs: &[f64] = if a == 0 {
                src
            } else {
                self.gram[0][a].apply_axis(g, 0, src, &mut x_buf);
                &x_buf
            };
            for b in 0..=3 - a {
                let ys: &[f64] = if b == 0 {
                    xs
                } else {
                    self.gram[1][b].apply_axis(g, 1, xs, &mut y_buf);
                    &y_buf
                };
                self.z_partial[3 - a - b].apply_axis_add(g, 2, alpha, ys, dst);
            }
        }
    }

    /// Diagonal of `L` on one scalar array (the same for every component).
    pub fn diagonal(&self) -> Vec<f64> {
        let g = &self.grid;
        let [nx, ny, nz] = g.dims();
        let entry = |axis: usize, k: usize, i: usize| -> f64 {
            if k == 0 {
                return 1.0;
            }
            let (start, w) = self.gram[axis][k].row(i);
            i.checked_sub(start).and_then(|j| w.get(j)).copied().unwrap_or(0.0)
        };
        let alphas = h3_multi_indices();
        let mut out = vec![0.0; g.len()];
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    out[g.index(i, j, k)] = alphas
                        .iter()
                        .map(|a| entry(0, a[0], i) * entry(1, a[1], j) * entry(2, a[2], k))
                        .sum();
                }
            }
        }
        out
    }

    /// `L v` componentwise (Euclidean; multiply by the cell volume for the
    /// weighted form).
    pub fn apply(&self, v: &VectorGrid) -> VectorGrid {
        let mut out = VectorGrid::zeros(self.grid);
        for c in 0..3 {
            self.apply_add(1.0, v.comp(c), out.comp_mut(c));
        }
        out
    }
}

/// Registered linear grid operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridOperator {
    Curl,
    CurlCurl,
    DirichletTrace,
    NeumannTrace,
    TangentialCurlTrace,
    Derivative(MultiIndex),
}

impl GridOperator {
    /// Every registered operator, each multi-index derivative included.
    pub fn registered() -> Vec<GridOperator> {
        let mut out = vec![
            GridOperator::Curl,
            GridOperator::CurlCurl,
            GridOperator::DirichletTrace,
            GridOperator::NeumannTrace,
            GridOperator::TangentialCurlTrace,
        ];
        out.extend(h3_multi_indices().into_iter().map(GridOperator::Derivative));
        out
    }

    /// Whether the operator maps to a boundary trace.
    pub fn is_trace(self) -> bool {
        matches!(
            self,
            GridOperator::DirichletTrace | GridOperator::NeumannTrace | GridOperator::TangentialCurlTrace
        )
    }
}

impl FromStr for GridOperator {
    type Err = Error;

    /// Names: `curl`, `curl_curl`, `dirichlet_trace`, `neumann_trace`,
    /// `tangential_curl_trace`, `d<ax><ay><az>` (e.g. `d120`).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "curl" => Ok(Self::Curl),
            "curl_curl" => Ok(Self::CurlCurl),
            "dirichlet_trace" => Ok(Self::DirichletTrace),
            "neumann_trace" => Ok(Self::NeumannTrace),
            "tangential_curl_trace" => Ok(Self::TangentialCurlTrace),
            _ => {
                let digits: Vec<usize> = s
                    .strip_prefix('d')
                    .filter(|rest| rest.len() == 3)
                    .map(|rest| rest.chars().filter_map(|c| c.to_digit(10)).map(|d| d as usize).collect())
                    .unwrap_or_default();
                if digits.len() == 3 && digits.iter().sum::<usize>() <= 3 {
                    Ok(Self::Derivative([digits[0], digits[1], digits[2]]))
                } else {
                    Err(Error::Config(format!("unregistered grid operator `{s}`")))
                }
            }
        }
    }
}

/// Either a volume field or a boundary trace.
#[derive(Debug, Clone, PartialEq)]
pub enum GridValue {
    Volume(VectorGrid),
    Boundary(BoundaryTrace),
}

impl GridValue {
    /// Weighted inner product; both sides must be of the same kind.
    pub fn inner(&self, other: &GridValue) -> Result<f64> {
        match (self, other) {
            (GridValue::Volume(a), GridValue::Volume(b)) => Ok(a.inner(b)),
            (GridValue::Boundary(a), GridValue::Boundary(b)) => Ok(a.inner(b)),
            _ => Err(Error::Shape("inner product of a volume field with a trace".into())),
        }
    }
}

/// Applies a registered operator to a volume field.
pub fn apply(op: GridOperator, v: &VectorGrid, medium: &MediumFields) -> Result<GridValue> {
    medium.check_grid(v.grid())?;
    let ops = FieldOps::new(v.grid());
    Ok(match op {
        GridOperator::Curl => GridValue::Volume(ops.curl(v)),
        GridOperator::CurlCurl => GridValue::Volume(ops.curl_curl(v, medium)),
        GridOperator::DirichletTrace => GridValue::Boundary(ops.dirichlet_trace(v)),
        GridOperator::NeumannTrace => GridValue::Boundary(ops.neumann_trace(v)),
        GridOperator::TangentialCurlTrace => GridValue::Boundary(ops.tangential_curl_trace(v)),
        GridOperator::Derivative(alpha) => GridValue::Volume(ops.derivative(v, alpha)),
    })
}

/// Adjoint of a registered operator under the weighted volume and surface
/// products: `⟨op(u), w⟩ = ⟨u, transpose_apply(op, w)⟩`.
pub fn transpose_apply(op: GridOperator, w: &GridValue, medium: &MediumFields) -> Result<VectorGrid> {
    let grid = match w {
        GridValue::Volume(v) => *v.grid(),
        GridValue::Boundary(t) => *t.grid(),
    };
    medium.check_grid(&grid)?;
    let ops = FieldOps::new(&grid);
    let inv_vol = 1.0 / grid.cell_volume();
    match (op, w) {
        (GridOperator::Curl, GridValue::Volume(v)) => Ok(ops.curl_transpose(v)),
        (GridOperator::CurlCurl, GridValue::Volume(v)) => Ok(ops.curl_curl_transpose(v, medium)),
        (GridOperator::Derivative(alpha), GridValue::Volume(v)) => Ok(ops.derivative_transpose(v, alpha)),
        (GridOperator::DirichletTrace, GridValue::Boundary(t)) => {
            let mut out = ops.dirichlet_transpose(&t.area_weighted());
            out.scale(inv_vol);
            Ok(out)
        }
        (GridOperator::NeumannTrace, GridValue::Boundary(t)) => {
            let mut out = ops.neumann_transpose(&t.area_weighted());
            out.scale(inv_vol);
            Ok(out)
        }
        (GridOperator::TangentialCurlTrace, GridValue::Boundary(t)) => {
            let mut out = ops.tangential_curl_transpose(&t.area_weighted());
            out.scale(inv_vol);
            Ok(out)
        }
        _ => Err(Error::Shape(format!("{op:?} cannot act on this kind of value"))),
    }
}

/// Free-function forms of the common operators.
pub fn curl(v: &VectorGrid) -> VectorGrid {
    FieldOps::new(v.grid()).curl(v)
}

pub fn curl_curl(v: &VectorGrid, medium: &MediumFields) -> Result<VectorGrid> {
    medium.check_grid(v.grid())?;
    Ok(FieldOps::new(v.grid()).curl_curl(v, medium))
}

pub fn dirichlet_trace(v: &VectorGrid) -> BoundaryTrace {
    FieldOps::new(v.grid()).dirichlet_trace(v)
}

pub fn neumann_trace(v: &VectorGrid) -> BoundaryTrace {
    FieldOps::new(v.grid()).neumann_trace(v)
}

pub fn h3_inner(u: &VectorGrid, v: &VectorGrid) -> Result<f64> {
    u.check_same_grid(v)?;
    Ok(FieldOps::new(u.grid()).h3_inner(u, v))
}

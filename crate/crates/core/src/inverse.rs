//! Quasi-reversibility inversion of the projected mode system.
//!
//! With `V = (v₀, …, v_N)` the functional is
//!
//! ```text
//! J(V) = Σₘ h³‖∇×(μ⁻¹∇×vₘ) + ε Σₙ sₘₙ vₙ‖² + Σₘ ‖vₘ|∂Ω − fₘ‖²_∂ + ‖Bvₘ − gₘ‖²_∂
//!        + ε_reg Σₘ ‖vₘ‖²_H³
//! ```
//!
//! where `B` is the normal derivative or the tangential curl trace and
//! `‖·‖_∂` is the area-weighted face norm. Writing `J = Vᵀ𝒩V − 2bᵀV + c`
//! in the Euclidean inner product of the stacked nodal values, the minimizer
//! solves `𝒩V = b`, which is done matrix-free by conjugate gradients.

use std::time::{Duration, Instant};

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::basis::{psi_triplet, stiffness, BasisSet, StiffnessMatrix};
use crate::data::{ModeData, TraceVariant};
use crate::error::{Error, Result};
use crate::grid::{Grid3, MediumFields, VectorGrid};
use crate::ops::{FieldOps, H3Operator};
use crate::trace::{BoundaryTrace, FaceId};

/// Spatial coefficient fields `v₀ … v_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeStack {
    modes: Vec<VectorGrid>,
}

impl ModeStack {
    pub fn zeros(grid: Grid3, num_modes: usize) -> Self {
        Self {
            modes: vec![VectorGrid::zeros(grid); num_modes],
        }
    }

    pub fn from_modes(modes: Vec<VectorGrid>) -> Result<Self> {
        let first = modes.first().ok_or_else(|| Error::Shape("empty mode stack".into()))?;
        for m in &modes {
            first.check_same_grid(m)?;
        }
        Ok(Self { modes })
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn grid(&self) -> &Grid3 {
        self.modes[0].grid()
    }

    pub fn mode(&self, n: usize) -> &VectorGrid {
        &self.modes[n]
    }

    pub fn mode_mut(&mut self, n: usize) -> &mut VectorGrid {
        &mut self.modes[n]
    }

    pub fn modes(&self) -> &[VectorGrid] {
        &self.modes
    }

    pub fn is_finite(&self) -> bool {
        self.modes.iter().all(VectorGrid::is_finite)
    }

    pub fn len(&self) -> usize {
        self.modes.len() * 3 * self.grid().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values ordered mode, component, node.
    pub fn to_flat(&self) -> Vec<f64> {
        self.modes
            .iter()
            .flat_map(|m| m.comps().iter().flat_map(|c| c.iter().copied()))
            .collect()
    }

    pub fn from_flat(grid: Grid3, num_modes: usize, flat: &[f64]) -> Result<Self> {
        let n = grid.len();
        if flat.len() != num_modes * 3 * n {
            return Err(Error::Shape(format!(
                "mode stack needs {} values, got {}",
                num_modes * 3 * n,
                flat.len()
            )));
        }
        let modes = flat
            .chunks_exact(3 * n)
            .map(|c| VectorGrid::from_components(grid, [c[..n].to_vec(), c[n..2 * n].to_vec(), c[2 * n..].to_vec()]))
            .collect::<Result<_>>()?;
        Ok(Self { modes })
    }
}

/// The vector operations conjugate gradients needs.
pub trait KrylovVector: Clone {
    fn dot(&self, other: &Self) -> f64;
    fn axpy(&mut self, alpha: f64, other: &Self);
    fn scale(&mut self, alpha: f64);
    /// Entrywise product.
    fn hadamard(&self, other: &Self) -> Self;
}

impl KrylovVector for ModeStack {
    fn dot(&self, other: &Self) -> f64 {
        self.modes.iter().zip(&other.modes).map(|(a, b)| a.dot(b)).sum()
    }

    fn axpy(&mut self, alpha: f64, other: &Self) {
        self.modes.iter_mut().zip(&other.modes).for_each(|(a, b)| a.axpy(alpha, b));
    }

    fn scale(&mut self, alpha: f64) {
        self.modes.iter_mut().for_each(|m| m.scale(alpha));
    }

    fn hadamard(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.modes.iter_mut().zip(&other.modes) {
            for c in 0..3 {
                a.comp_mut(c).iter_mut().zip(b.comp(c)).for_each(|(x, y)| *x *= y);
            }
        }
        out
    }
}

impl KrylovVector for Vec<f64> {
    fn dot(&self, other: &Self) -> f64 {
        crate::linalg::dot(self, other)
    }

    fn axpy(&mut self, alpha: f64, other: &Self) {
        self.iter_mut().zip(other).for_each(|(a, b)| *a += alpha * b);
    }

    fn scale(&mut self, alpha: f64) {
        self.iter_mut().for_each(|a| *a *= alpha);
    }

    fn hadamard(&self, other: &Self) -> Self {
        self.iter().zip(other).map(|(a, b)| a * b).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    #[default]
    Identity,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QRConfig {
    /// Highest basis index `N`.
    pub order: usize,
    pub epsilon_reg: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub preconditioner: Preconditioner,
    pub trace_variant: TraceVariant,
}

impl Default for QRConfig {
    fn default() -> Self {
        Self {
            order: 15,
            epsilon_reg: 1e-6,
            cg_tol: 1e-8,
            cg_max_iter: 5000,
            preconditioner: Preconditioner::Identity,
            trace_variant: TraceVariant::NormalDerivative,
        }
    }
}

impl QRConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_reg > 0.0 && self.epsilon_reg.is_finite()) {
            return Err(Error::Config(format!("epsilon_reg must be > 0, got {}", self.epsilon_reg)));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(Error::Config(format!("cg_tol must lie in (0, 1), got {}", self.cg_tol)));
        }
        Ok(())
    }
}

/// Weighted residual blocks: interior `√h³·Rₘ`, and the two trace misfits
/// scaled by the square root of each face's node area.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBundle {
    pub interior: Vec<VectorGrid>,
    pub dirichlet: Vec<BoundaryTrace>,
    pub second: Vec<BoundaryTrace>,
}

impl ResidualBundle {
    pub fn norm_sq(&self) -> f64 {
        self.interior.iter().map(|v| v.dot(v)).sum::<f64>()
            + self.dirichlet.iter().chain(&self.second).map(|t| t.dot(t)).sum::<f64>()
    }
}

fn face_scaled(t: &BoundaryTrace, power: f64) -> BoundaryTrace {
    let mut out = t.clone();
    for f in FaceId::ALL {
        let w = f.area_weight(t.grid()).powf(power);
        out.face_mut(f).iter_mut().for_each(|v| *v *= w);
    }
    out
}

/// Conjugate-gradient outcome. `wall_time` is kept out of the serialized
/// form so reports of identical runs are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub preconditioner: Preconditioner,
    /// `‖rₖ‖/‖b‖` for k = 0..=iterations.
    pub relative_residuals: Vec<f64>,
    /// `J(Vₖ)`; it falls monotonically because `J(Vₖ) − J(V*)` is the
    /// squared energy-norm error.
    pub functional_history: Vec<f64>,
    pub final_functional: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Discrete normal equations for one medium, basis and configuration.
pub struct QrSystem<'a> {
    ops: FieldOps,
    h3: H3Operator,
    medium: &'a MediumFields,
    stiffness: StiffnessMatrix,
    config: QRConfig,
    vol: f64,
}

impl<'a> QrSystem<'a> {
    pub fn new(medium: &'a MediumFields, basis: &BasisSet, config: QRConfig) -> Result<Self> {
        config.validate()?;
        if config.order != basis.order() {
            return Err(Error::Config(format!(
                "configured order {} differs from the basis order {}",
                config.order,
                basis.order()
            )));
        }
        let grid = *medium.grid();
        let ops = FieldOps::new(&grid);
        let h3 = H3Operator::new(&ops);
        Ok(Self {
            ops,
            h3,
            medium,
            stiffness: stiffness(basis),
            config,
            vol: grid.cell_volume(),
        })
    }

    pub fn grid(&self) -> &Grid3 {
        self.ops.grid()
    }

    pub fn num_modes(&self) -> usize {
        self.stiffness.dim()
    }

    pub fn config(&self) -> &QRConfig {
        &self.config
    }

    fn check_stack(&self, v: &ModeStack) -> Result<()> {
        if v.num_modes() != self.num_modes() || !v.grid().same_shape(self.grid()) {
            return Err(Error::Shape(format!(
                "mode stack has {} modes on {:?}, system expects {} on {:?}",
                v.num_modes(),
                v.grid().dims(),
                self.num_modes(),
                self.grid().dims()
            )));
        }
        Ok(())
    }

    fn check_modes(&self, modes: &ModeData) -> Result<()> {
        if modes.variant() != self.config.trace_variant {
            return Err(Error::Config(format!(
                "data carry {:?} traces but the solver is configured for {:?}",
                modes.variant(),
                self.config.trace_variant
            )));
        }
        if modes.num_modes() != self.num_modes() || !modes.grid().same_shape(self.grid()) {
            return Err(Error::Shape("mode data do not match the system".into()));
        }
        Ok(())
    }

    fn second_trace(&self, v: &VectorGrid) -> BoundaryTrace {
        match self.config.trace_variant {
            TraceVariant::NormalDerivative => self.ops.neumann_trace(v),
            TraceVariant::TangentialCurl => self.ops.tangential_curl_trace(v),
        }
    }

    fn second_transpose(&self, t: &BoundaryTrace) -> VectorGrid {
        match self.config.trace_variant {
            TraceVariant::NormalDerivative => self.ops.neumann_transpose(t),
            TraceVariant::TangentialCurl => self.ops.tangential_curl_transpose(t),
        }
    }

    /// `ε ⊙ Σₙ coeff(m, n) xₙ` for every m.
    fn mix(&self, x: &[VectorGrid], coeff: impl Fn(usize, usize) -> f64) -> Vec<VectorGrid> {
        let n = self.num_modes();
        let eps = self.medium.eps();
        (0..n)
            .map(|m| {
                let mut acc = VectorGrid::zeros(*self.grid());
                for (k, xk) in x.iter().enumerate() {
                    let s = coeff(m, k);
                    if s != 0.0 {
                        acc.axpy(s, xk);
                    }
                }
                for c in 0..3 {
                    acc.comp_mut(c).iter_mut().zip(eps).for_each(|(a, e)| *a *= e);
                }
                acc
            })
            .collect()
    }

    /// The linear part `A V` of the bundle.
    pub fn linear_part(&self, v: &ModeStack) -> ResidualBundle {
        let sv = self.vol.sqrt();
        let mut interior = self.mix(v.modes(), |m, n| self.stiffness.get(m, n));
        for (r, vm) in interior.iter_mut().zip(v.modes()) {
            r.axpy(1.0, &self.ops.curl_curl(vm, self.medium));
            r.scale(sv);
        }
        ResidualBundle {
            interior,
            dirichlet: v.modes().iter().map(|m| face_scaled(&self.ops.dirichlet_trace(m), 0.5)).collect(),
            second: v.modes().iter().map(|m| face_scaled(&self.second_trace(m), 0.5)).collect(),
        }
    }

    /// `Aᵀ` applied to a bundle.
    pub fn linear_adjoint(&self, w: &ResidualBundle) -> ModeStack {
        let sv = self.vol.sqrt();
        let mut out = self.mix(&w.interior, |n, m| self.stiffness.get(m, n));
        for (n, o) in out.iter_mut().enumerate() {
            o.axpy(1.0, &self.ops.curl_curl_transpose(&w.interior[n], self.medium));
            o.scale(sv);
            o.axpy(1.0, &self.ops.dirichlet_transpose(&face_scaled(&w.dirichlet[n], 0.5)));
            o.axpy(1.0, &self.second_transpose(&face_scaled(&w.second[n], 0.5)));
        }
        ModeStack { modes: out }
    }

    fn data_bundle(&self, modes: &ModeData) -> ResidualBundle {
        let n = self.num_modes();
        ResidualBundle {
            interior: vec![VectorGrid::zeros(*self.grid()); n],
            dirichlet: (0..n).map(|m| face_scaled(modes.dirichlet(m), 0.5)).collect(),
            second: (0..n).map(|m| face_scaled(modes.second(m), 0.5)).collect(),
        }
    }

    pub fn residual_bundle(&self, v: &ModeStack, modes: &ModeData) -> Result<ResidualBundle> {
        self.check_stack(v)?;
        self.check_modes(modes)?;
        let mut r = self.linear_part(v);
        let d = self.data_bundle(modes);
        for (a, b) in r.dirichlet.iter_mut().zip(&d.dirichlet) {
            a.axpy(-1.0, b);
        }
        for (a, b) in r.second.iter_mut().zip(&d.second) {
            a.axpy(-1.0, b);
        }
        Ok(r)
    }

    /// `Σₘ ‖vₘ‖²_H³`
    pub fn h3_energy(&self, v: &ModeStack) -> f64 {
        self.vol * v.modes().iter().map(|m| m.dot(&self.h3.apply(m))).sum::<f64>()
    }

    pub fn functional(&self, v: &ModeStack, modes: &ModeData) -> Result<f64> {
        Ok(self.residual_bundle(v, modes)?.norm_sq() + self.config.epsilon_reg * self.h3_energy(v))
    }

    /// `J(0)`: the squared weighted norm of the data.
    pub fn data_norm_sq(&self, modes: &ModeData) -> Result<f64> {
        self.check_modes(modes)?;
        Ok(self.data_bundle(modes).norm_sq())
    }

    /// `𝒩V = Aᵀ(AV) + ε_reg h³ L V`
    pub fn normal_apply(&self, v: &ModeStack) -> ModeStack {
        let mut out = self.linear_adjoint(&self.linear_part(v));
        let alpha = self.config.epsilon_reg * self.vol;
        for (o, m) in out.modes.iter_mut().zip(v.modes()) {
            for c in 0..3 {
                self.h3.apply_add(alpha, m.comp(c), o.comp_mut(c));
            }
        }
        out
    }

    /// `b = Aᵀ(data)`: only the trace blocks carry data.
    pub fn rhs(&self, modes: &ModeData) -> Result<ModeStack> {
        self.check_modes(modes)?;
        Ok(self.linear_adjoint(&self.data_bundle(modes)))
    }

    /// `∇J(V) = 2(𝒩V − b)`
    pub fn gradient(&self, v: &ModeStack, modes: &ModeData) -> Result<ModeStack> {
        self.check_stack(v)?;
        let mut g = self.normal_apply(v);
        g.axpy(-1.0, &self.rhs(modes)?);
        g.scale(2.0);
        Ok(g)
    }

    /// Exact diagonal of `𝒩`.
    ///
    /// Columns of the curl-curl and trace operators are probed with unit
    /// impulses spaced wider than their stencil footprint, so each output
    /// entry is attributed to exactly one impulse. The mode coupling and the
    /// H³ term are added in closed form.
    pub fn jacobi_diagonal(&self) -> ModeStack {
        const RADIUS: usize = 4;
        const STRIDE: usize = 2 * RADIUS + 1;
        let g = *self.grid();
        let d = g.dims();
        let n = g.len();
        // column norms of CC, diagonal of CC, and the weighted trace column norms
        let mut cc_norm = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut cc_diag = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut trace_norm = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let owner = |q: [usize; 3], off: [usize; 3]| -> Option<usize> {
            let mut p = [0usize; 3];
            for a in 0..3 {
                let r = (q[a] as i64 - off[a] as i64).rem_euclid(STRIDE as i64) as usize;
                p[a] = if r <= RADIUS { q[a] - r } else { q[a] + (STRIDE - r) };
                if p[a] >= d[a] {
                    return None;
                }
            }
            Some(g.index(p[0], p[1], p[2]))
        };
        for oz in 0..STRIDE.min(d[2]) {
            for oy in 0..STRIDE.min(d[1]) {
                for ox in 0..STRIDE.min(d[0]) {
                    let off = [ox, oy, oz];
                    for c in 0..3 {
                        let mut e = VectorGrid::zeros(g);
                        for k in (oz..d[2]).step_by(STRIDE) {
                            for j in (oy..d[1]).step_by(STRIDE) {
                                for i in (ox..d[0]).step_by(STRIDE) {
                                    e.comp_mut(c)[g.index(i, j, k)] = 1.0;
                                }
                            }
                        }
                        let w = self.ops.curl_curl(&e, self.medium);
                        for q in 0..n {
                            let val: f64 = (0..3).map(|cc| w.comp(cc)[q].powi(2)).sum();
                            if val != 0.0 {
                                if let Some(p) = owner(g.unindex(q), off) {
                                    cc_norm[c][p] += val;
                                }
                            }
                            if e.comp(c)[q] == 1.0 {
                                cc_diag[c][q] = w.comp(c)[q];
                            }
                        }
                        for t in [self.ops.dirichlet_trace(&e), self.second_trace(&e)] {
                            for f in FaceId::ALL {
                                let area = f.area_weight(&g);
                                for (i, q) in f.volume_indices(&g).into_iter().enumerate() {
                                    let val: f64 = t.node(f, i).iter().map(|x| x * x).sum();
                                    if val != 0.0 {
                                        if let Some(p) = owner(g.unindex(q), off) {
                                            trace_norm[c][p] += area * val;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        let l_diag = self.h3.diagonal();
        let eps = self.medium.eps();
        let nm = self.num_modes();
        let modes = (0..nm)
            .map(|m| {
                let s_mm = self.stiffness.get(m, m);
                let s_col: f64 = (0..nm).map(|k| self.stiffness.get(k, m).powi(2)).sum();
                let comps = [0, 1, 2].map(|c| {
                    (0..n)
                        .map(|q| {
                            let e = eps[q];
                            self.vol * (cc_norm[c][q] + 2.0 * e * s_mm * cc_diag[c][q] + e * e * s_col)
                                + trace_norm[c][q]
                                + self.config.epsilon_reg * self.vol * l_diag[q]
                        })
                        .collect::<Vec<_>>()
                });
                VectorGrid::from_components(g, comps).expect("diagonal has the grid's shape")
            })
            .collect();
        ModeStack { modes }
    }
}

/// Conjugate gradients from a zero start. `offset` is the constant `c` of
/// `J = xᵀAx − 2bᵀx + c`, used only to report functional values;
/// `observe(k, xₖ)` sees every iterate.
pub fn conjugate_gradient<V: KrylovVector>(
    apply: impl Fn(&V) -> V,
    b: &V,
    inv_diag: Option<&V>,
    tol: f64,
    max_iter: usize,
    offset: f64,
    mut observe: impl FnMut(usize, &V),
) -> (V, SolveReport) {
    let start = Instant::now();
    let mut x = b.clone();
    x.scale(0.0);
    let precondition = |r: &V| match inv_diag {
        Some(d) => r.hadamard(d),
        None => r.clone(),
    };
    let b_norm = b.dot(b).sqrt();
    let mut report = SolveReport {
        iterations: 0,
        converged: true,
        preconditioner: if inv_diag.is_some() {
            Preconditioner::Jacobi
        } else {
            Preconditioner::Identity
        },
        relative_residuals: vec![if b_norm > 0.0 { 1.0 } else { 0.0 }],
        functional_history: vec![offset],
        final_functional: offset,
        wall_time: Duration::ZERO,
    };
    observe(0, &x);
    if b_norm == 0.0 {
        report.wall_time = start.elapsed();
        return (x, report);
    }
    let mut r = b.clone();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut j = offset;
    report.converged = false;
    for k in 1..=max_iter {
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            debug!("conjugate gradients stopped: non-positive curvature {pap:e}");
            break;
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        // J(x + αp) − J(x) = −α rᵀz for the exact line minimizer
        j -= alpha * rz;
        let rel = r.dot(&r).sqrt() / b_norm;
        report.iterations = k;
        report.relative_residuals.push(rel);
        report.functional_history.push(j);
        observe(k, &x);
        if rel <= tol {
            report.converged = true;
            break;
        }
        z = precondition(&r);
        let rz_next = r.dot(&z);
        let beta = rz_next / rz;
        rz = rz_next;
        p.scale(beta);
        p.axpy(1.0, &z);
    }
    report.final_functional = j;
    report.wall_time = start.elapsed();
    (x, report)
}

/// Solves `𝒩V = b` with the configured preconditioner.
pub fn cg_solve(system: &QrSystem, b: &ModeStack, offset: f64) -> (ModeStack, SolveReport) {
    let inv = match system.config.preconditioner {
        Preconditioner::Identity => None,
        Preconditioner::Jacobi => {
            let mut d = system.jacobi_diagonal();
            d.modes
                .iter_mut()
                .for_each(|m| (0..3).for_each(|c| m.comp_mut(c).iter_mut().for_each(|x| *x = 1.0 / *x)));
            Some(d)
        }
    };
    let cfg = system.config;
    let (x, report) = conjugate_gradient(
        |v| system.normal_apply(v),
        b,
        inv.as_ref(),
        cfg.cg_tol,
        cfg.cg_max_iter,
        offset,
        |_, _| {},
    );
    if report.converged {
        info!(
            "conjugate gradients converged in {} iterations ({:.1?})",
            report.iterations, report.wall_time
        );
    } else {
        info!(
            "conjugate gradients stopped after {} iterations at relative residual {:.3e} ({:.1?})",
            report.iterations,
            report.relative_residuals.last().copied().unwrap_or(f64::NAN),
            report.wall_time
        );
    }
    (x, report)
}

/// `E_comp(x) = Σₙ vₙ(x) Ψₙ(0)`
pub fn reconstruct_initial(v: &ModeStack, basis: &BasisSet) -> Result<VectorGrid> {
    if v.num_modes() != basis.num_modes() {
        return Err(Error::Shape(format!(
            "{} modes for a basis of {}",
            v.num_modes(),
            basis.num_modes()
        )));
    }
    let mut out = VectorGrid::zeros(*v.grid());
    for (n, m) in v.modes().iter().enumerate() {
        out.axpy(psi_triplet(n, 0.0, basis.final_time())?.0, m);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Inversion {
    pub field: VectorGrid,
    pub stack: ModeStack,
    pub report: SolveReport,
}

pub fn residual_bundle(
    v: &ModeStack,
    modes: &ModeData,
    medium: &MediumFields,
    basis: &BasisSet,
    config: &QRConfig,
) -> Result<ResidualBundle> {
    QrSystem::new(medium, basis, *config)?.residual_bundle(v, modes)
}

pub fn normal_apply(v: &ModeStack, medium: &MediumFields, basis: &BasisSet, config: &QRConfig) -> Result<ModeStack> {
    let system = QrSystem::new(medium, basis, *config)?;
    system.check_stack(v)?;
    Ok(system.normal_apply(v))
}

pub fn rhs_assemble(modes: &ModeData, medium: &MediumFields, basis: &BasisSet, config: &QRConfig) -> Result<ModeStack> {
    QrSystem::new(medium, basis, *config)?.rhs(modes)
}

/// rhs → conjugate gradients → `E_comp`.
pub fn invert(modes: &ModeData, medium: &MediumFields, basis: &BasisSet, config: &QRConfig) -> Result<Inversion> {
    let system = QrSystem::new(medium, basis, *config)?;
    let b = system.rhs(modes)?;
    let (stack, report) = cg_solve(&system, &b, system.data_norm_sq(modes)?);
    if !stack.is_finite() {
        return Err(Error::Domain("inversion produced non-finite values".into()));
    }
    let field = reconstruct_initial(&stack, basis)?;
    Ok(Inversion { field, stack, report })
}

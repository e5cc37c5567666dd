//! Explicit leapfrog solver for `ε ∂ₜₜE = −∇ × (μ⁻¹ ∇ × E)` on a padded box
//! `G ⊃ Ω`, recording the boundary traces of `E` on `∂Ω`.
//!
//! `G` shares Ω's spacing and contains Ω's nodes, so restricting to Ω is a
//! plain copy. `E` is held at zero on `∂G`.

use log::warn;

use crate::basis::TimeGrid;
use crate::data::{BoundaryRecord, TraceVariant};
use crate::error::{Error, Result};
use crate::grid::{Grid3, MediumFields, VectorGrid};
use crate::ops::FieldOps;
use crate::trace::{BoundaryTrace, FaceId};

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardConfig {
    omega: Grid3,
    padding: usize,
    time_grid: TimeGrid,
    substeps: usize,
    variant: TraceVariant,
}

impl ForwardConfig {
    /// Pads Ω by whole nodes until the box reaches `half_width` on every
    /// side (rounding outward).
    pub fn new(omega: Grid3, half_width: f64, time_grid: TimeGrid, substeps: usize) -> Result<Self> {
        let reach = (0..3)
            .map(|a| {
                let h = omega.h(a);
                let lo = (omega.lo()[a] + half_width) / h;
                let hi = (half_width - omega.hi()[a]) / h;
                (lo.max(hi) - 1e-9).ceil()
            })
            .fold(0.0f64, f64::max);
        if !(reach >= 1.0 && reach.is_finite()) {
            return Err(Error::Config(format!(
                "padded half width {half_width} does not enclose the domain"
            )));
        }
        Self::with_padding(omega, reach as usize, time_grid, substeps)
    }

    pub fn with_padding(omega: Grid3, padding: usize, time_grid: TimeGrid, substeps: usize) -> Result<Self> {
        if padding == 0 {
            return Err(Error::Config("padding must be at least one node".into()));
        }
        if substeps == 0 {
            return Err(Error::Config("substeps per observation must be >= 1".into()));
        }
        Ok(Self {
            omega,
            padding,
            time_grid,
            substeps,
            variant: TraceVariant::NormalDerivative,
        })
    }

    pub fn with_variant(mut self, variant: TraceVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn omega(&self) -> &Grid3 {
        &self.omega
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn variant(&self) -> TraceVariant {
        self.variant
    }

    pub fn dt_sim(&self) -> f64 {
        self.time_grid.dt() / self.substeps as f64
    }

    pub fn offset(&self) -> [usize; 3] {
        [self.padding; 3]
    }

    pub fn padded_grid(&self) -> Grid3 {
        let p = self.padding as f64;
        let (lo, hi) = (self.omega.lo(), self.omega.hi());
        let lo = [0, 1, 2].map(|a| lo[a] - p * self.omega.h(a));
        let hi = [0, 1, 2].map(|a| hi[a] + p * self.omega.h(a));
        let n = self.omega.dims().map(|d| d + 2 * self.padding);
        Grid3::new(lo, hi, n).expect("padding a valid grid stays valid")
    }

    /// Distance from `∂Ω` to `∂G`.
    pub fn margin(&self) -> f64 {
        (0..3)
            .map(|a| self.padding as f64 * self.omega.h(a))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `h / (c_max √3)`, `c_max = max 1/√(με)`.
pub fn cfl_max_dt(h: f64, medium: &MediumFields) -> f64 {
    h / (medium.max_speed() * 3f64.sqrt())
}

/// Message when waves leaving Ω may reach `∂G` before the final time.
pub fn reach_warning(config: &ForwardConfig, medium: &MediumFields) -> Option<String> {
    let travel = medium.max_speed() * config.time_grid.final_time();
    (travel > config.margin()).then(|| {
        format!(
            "signals travel {travel:.3} within T but the padding margin is only {:.3}; \
             reflections from the outer boundary may reach the measurement surface",
            config.margin()
        )
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub prev: VectorGrid,
    pub curr: VectorGrid,
    pub step: usize,
}

/// One leapfrog integrator bound to a medium and step.
pub struct Leapfrog<'a> {
    ops: FieldOps,
    medium: &'a MediumFields,
    dt: f64,
    boundary: Vec<usize>,
}

impl<'a> Leapfrog<'a> {
    pub fn new(medium: &'a MediumFields, dt: f64) -> Result<Self> {
        let grid = *medium.grid();
        let h = grid.spacing().into_iter().fold(f64::INFINITY, f64::min);
        let bound = cfl_max_dt(h, medium);
        if !(dt > 0.0 && dt <= bound) {
            return Err(Error::Config(format!(
                "time step {dt} violates the stability bound {bound:.6}"
            )));
        }
        let mut boundary: Vec<usize> = FaceId::ALL.iter().flat_map(|f| f.volume_indices(&grid)).collect();
        boundary.sort_unstable();
        boundary.dedup();
        Ok(Self {
            ops: FieldOps::new(&grid),
            medium,
            dt,
            boundary,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `ε⁻¹ ∇ × (μ⁻¹ ∇ × e)`
    fn stiffness(&self, e: &VectorGrid) -> VectorGrid {
        let mut k = self.ops.curl_curl(e, self.medium);
        let eps = self.medium.eps();
        for c in 0..3 {
            k.comp_mut(c).iter_mut().zip(eps).for_each(|(v, e)| *v /= e);
        }
        k
    }

    fn hold_boundary(&self, next: &mut VectorGrid, curr: &VectorGrid) {
        for c in 0..3 {
            let (dst, src) = (next.comp_mut(c), curr.comp(c));
            for &i in &self.boundary {
                dst[i] = src[i];
            }
        }
    }

    pub fn bootstrap(&self, e0: &VectorGrid) -> Result<WaveState> {
        self.medium.check_grid(e0.grid())?;
        let k = self.stiffness(e0);
        let mut e1 = e0.clone();
        e1.axpy(-0.5 * self.dt * self.dt, &k);
        self.hold_boundary(&mut e1, e0);
        if !e1.is_finite() {
            return Err(Error::Unstable { step: 1 });
        }
        Ok(WaveState {
            prev: e0.clone(),
            curr: e1,
            step: 1,
        })
    }

    pub fn step(&self, state: WaveState) -> Result<WaveState> {
        let WaveState { prev, curr, step } = state;
        let k = self.stiffness(&curr);
        let mut next = prev;
        let dt2 = self.dt * self.dt;
        for c in 0..3 {
            let (n, e, kk) = (next.comp_mut(c), curr.comp(c), k.comp(c));
            for i in 0..n.len() {
                n[i] = 2.0 * e[i] - n[i] - dt2 * kk[i];
            }
        }
        self.hold_boundary(&mut next, &curr);
        if !next.is_finite() {
            return Err(Error::Unstable { step: step + 1 });
        }
        Ok(WaveState {
            prev: curr,
            curr: next,
            step: step + 1,
        })
    }

    /// Quantity conserved by the scheme while the field stays clear of `∂G`:
    /// `h³ Σ ε|(Eᵏ⁺¹ − Eᵏ)/dt|² + μ⁻¹ ∇×Eᵏ⁺¹ · ∇×Eᵏ`.
    pub fn energy(&self, state: &WaveState) -> f64 {
        let grid = self.medium.grid();
        let vol = grid.cell_volume();
        let eps = self.medium.eps();
        let mut kinetic = 0.0;
        for c in 0..3 {
            let (a, b) = (state.curr.comp(c), state.prev.comp(c));
            for i in 0..a.len() {
                let v = (a[i] - b[i]) / self.dt;
                kinetic += eps[i] * v * v;
            }
        }
        let (ca, cb) = (self.ops.curl(&state.curr), self.ops.curl(&state.prev));
        let inv_mu = self.medium.inv_mu();
        let mut potential = 0.0;
        for c in 0..3 {
            let (a, b) = (ca.comp(c), cb.comp(c));
            for i in 0..a.len() {
                potential += inv_mu[i] * a[i] * b[i];
            }
        }
        vol * (kinetic + potential)
    }
}

pub fn bootstrap(e0: &VectorGrid, medium: &MediumFields, dt: f64) -> Result<WaveState> {
    Leapfrog::new(medium, dt)?.bootstrap(e0)
}

pub fn step(state: WaveState, medium: &MediumFields, dt: f64) -> Result<WaveState> {
    Leapfrog::new(medium, dt)?.step(state)
}

/// Boundary traces of a padded-grid field restricted to Ω.
struct Recorder {
    ops: FieldOps,
    offset: [usize; 3],
    variant: TraceVariant,
}

impl Recorder {
    fn traces(&self, e: &VectorGrid) -> Result<(BoundaryTrace, BoundaryTrace)> {
        let local = e.restrict(self.ops.grid(), self.offset)?;
        let second = match self.variant {
            TraceVariant::NormalDerivative => self.ops.neumann_trace(&local),
            TraceVariant::TangentialCurl => self.ops.tangential_curl_trace(&local),
        };
        Ok((self.ops.dirichlet_trace(&local), second))
    }
}

/// Accepts `e0` on Ω's grid or on the padded grid; `medium` lives on the
/// padded grid.
fn padded_initial(e0: &VectorGrid, config: &ForwardConfig, medium: &MediumFields) -> Result<VectorGrid> {
    let padded = config.padded_grid();
    medium.check_grid(&padded)?;
    if e0.grid().same_shape(&padded) {
        return Ok(e0.clone());
    }
    if !e0.grid().same_shape(config.omega()) {
        return Err(Error::Shape("initial field lives on neither the domain nor the padded grid".into()));
    }
    let mut full = VectorGrid::zeros(padded);
    full.embed(e0, config.offset())?;
    Ok(full)
}

/// Runs the scheme and calls `observe(j, state)` at every observation time
/// `t_j` (the `j = 0` state has `prev == curr == E⁰`).
pub fn simulate_with(
    e0: &VectorGrid,
    config: &ForwardConfig,
    medium: &MediumFields,
    mut observe: impl FnMut(usize, &WaveState) -> Result<()>,
) -> Result<()> {
    let start = padded_initial(e0, config, medium)?;
    let scheme = Leapfrog::new(medium, config.dt_sim())?;
    if let Some(msg) = reach_warning(config, medium) {
        warn!("{msg}");
    }
    observe(
        0,
        &WaveState {
            prev: start.clone(),
            curr: start.clone(),
            step: 0,
        },
    )?;
    let samples = config.time_grid.num_samples();
    if samples < 2 {
        return Ok(());
    }
    let mut state = scheme.bootstrap(&start)?;
    for j in 1..samples {
        while state.step < j * config.substeps {
            state = scheme.step(state)?;
        }
        observe(j, &state)?;
    }
    Ok(())
}

pub fn simulate(e0: &VectorGrid, config: &ForwardConfig, medium: &MediumFields) -> Result<BoundaryRecord> {
    let recorder = Recorder {
        ops: FieldOps::new(config.omega()),
        offset: config.offset(),
        variant: config.variant,
    };
    let mut f = Vec::with_capacity(config.time_grid.num_samples());
    let mut g = Vec::with_capacity(config.time_grid.num_samples());
    simulate_with(e0, config, medium, |_, state| {
        let (a, b) = recorder.traces(&state.curr)?;
        f.push(a);
        g.push(b);
        Ok(())
    })?;
    BoundaryRecord::new(*config.omega(), config.time_grid, config.variant, f, g)
}

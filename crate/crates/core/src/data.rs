//! Boundary measurement records, noise injection, projection onto the time
//! basis, and the `MXTDR1` record file format.
//!
//! # File layout
//!
//! ```text
//! MXTDR1\n
//! {json header}\n
//! F block, then G block: IEEE-754 binary64, little endian
//! ```
//!
//! Each block is ordered time-major, then face-major (x−, x+, y−, y+, z−,
//! z+), then node-major within a face (lower tangential axis fastest), then
//! component-minor. Noise draws consume samples in exactly this order.

use std::fs;
use std::path::Path;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSet, ProjectionRule, Projector, TimeGrid};
use crate::error::{Error, Result};
use crate::grid::Grid3;
use crate::trace::{boundary_entry_count, BoundaryTrace};

pub const MAGIC: &[u8; 7] = b"MXTDR1\n";
const ORDERING: &str = "F,G;time-major;face-major(x-,x+,y-,y+,z-,z+);node-major;component-minor";

/// Which second boundary quantity a record carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceVariant {
    /// `G = ∂_ν E`
    #[default]
    NormalDerivative,
    /// `G = (∇ × E) × ν`
    TangentialCurl,
}

/// Dirichlet samples `F` and second-trace samples `G` on `∂Ω` at every
/// observation time.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRecord {
    grid: Grid3,
    time_grid: TimeGrid,
    variant: TraceVariant,
    dirichlet: Vec<BoundaryTrace>,
    second: Vec<BoundaryTrace>,
}

impl BoundaryRecord {
    pub fn new(
        grid: Grid3,
        time_grid: TimeGrid,
        variant: TraceVariant,
        dirichlet: Vec<BoundaryTrace>,
        second: Vec<BoundaryTrace>,
    ) -> Result<Self> {
        let ns = time_grid.num_samples();
        if dirichlet.len() != ns || second.len() != ns {
            return Err(Error::Shape(format!(
                "record holds {}/{} time slices, time grid has {ns}",
                dirichlet.len(),
                second.len()
            )));
        }
        for t in dirichlet.iter().chain(&second) {
            if !t.grid().same_shape(&grid) {
                return Err(Error::Shape("trace grid differs from record grid".into()));
            }
            if t.values().any(|v| !v.is_finite()) {
                return Err(Error::Domain("record contains non-finite samples".into()));
            }
        }
        Ok(Self {
            grid,
            time_grid,
            variant,
            dirichlet,
            second,
        })
    }

    pub fn zeros(grid: Grid3, time_grid: TimeGrid, variant: TraceVariant) -> Self {
        let ns = time_grid.num_samples();
        Self {
            grid,
            time_grid,
            variant,
            dirichlet: vec![BoundaryTrace::zeros(grid); ns],
            second: vec![BoundaryTrace::zeros(grid); ns],
        }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn variant(&self) -> TraceVariant {
        self.variant
    }

    /// `F(·, t_k)`
    pub fn dirichlet(&self, k: usize) -> &BoundaryTrace {
        &self.dirichlet[k]
    }

    /// `G(·, t_k)`
    pub fn second(&self, k: usize) -> &BoundaryTrace {
        &self.second[k]
    }

    /// Scalar samples per block (`num_samples × entries × 3`).
    pub fn block_len(&self) -> usize {
        self.time_grid.num_samples() * 3 * boundary_entry_count(&self.grid)
    }

    fn samples_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.dirichlet
            .iter_mut()
            .chain(self.second.iter_mut())
            .flat_map(|t| t.values_mut())
    }

    pub fn samples(&self) -> impl Iterator<Item = &f64> {
        self.dirichlet.iter().chain(&self.second).flat_map(|t| t.values())
    }

    /// `Σ_k w_k e^{−2t_k} (‖F_k‖² + ‖G_k‖²)` with trapezoid weights and the
    /// surface product: the discrete weighted space-time norm squared.
    pub fn weighted_norm_sq(&self) -> f64 {
        (0..self.time_grid.num_samples())
            .map(|k| {
                let t = self.time_grid.time(k);
                let w = self.time_grid.trapezoid_weight(k) * (-2.0 * t).exp();
                w * (self.dirichlet[k].inner(&self.dirichlet[k]) + self.second[k].inner(&self.second[k]))
            })
            .sum()
    }

    /// `self − other`, sample by sample.
    pub fn difference(&self, other: &BoundaryRecord) -> Result<BoundaryRecord> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.samples_mut().zip(other.samples()) {
            *a -= b;
        }
        Ok(out)
    }

    fn check_compatible(&self, other: &BoundaryRecord) -> Result<()> {
        if !self.grid.same_shape(&other.grid) || self.time_grid != other.time_grid {
            return Err(Error::Shape("records differ in grid or time sampling".into()));
        }
        Ok(())
    }
}

/// Multiplicative uniform noise `s ↦ s·(1 + δ·r)`, `r ∈ [−1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(delta: f64, seed: u64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!("noise level must be >= 0, got {delta}")));
        }
        Ok(Self { delta, seed })
    }
}

/// Deterministic uniform draws on `[−1, 1)`: xoshiro256** seeded through the
/// SplitMix64 expansion of a 64-bit seed; `r = 2·u − 1` with `u` the top 53
/// bits of each output scaled by `2⁻⁵³`.
#[derive(Debug, Clone)]
pub struct UniformNoise(Xoshiro256StarStar);

impl UniformNoise {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn next_unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_unit() - 1.0
    }
}

pub fn add_noise(record: &BoundaryRecord, spec: &NoiseSpec) -> BoundaryRecord {
    let mut out = record.clone();
    let mut rng = UniformNoise::new(spec.seed);
    for s in out.samples_mut() {
        let r = rng.next_symmetric();
        *s *= 1.0 + spec.delta * r;
    }
    out
}

/// Fourier modes `f_m`, `g_m` of the boundary data, `m = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeData {
    variant: TraceVariant,
    dirichlet: Vec<BoundaryTrace>,
    second: Vec<BoundaryTrace>,
}

impl ModeData {
    pub fn new(variant: TraceVariant, dirichlet: Vec<BoundaryTrace>, second: Vec<BoundaryTrace>) -> Result<Self> {
        if dirichlet.len() != second.len() || dirichlet.is_empty() {
            return Err(Error::Shape("mode data needs matching, nonempty f and g lists".into()));
        }
        let g0 = *dirichlet[0].grid();
        if dirichlet.iter().chain(&second).any(|t| !t.grid().same_shape(&g0)) {
            return Err(Error::Shape("mode traces live on different grids".into()));
        }
        Ok(Self {
            variant,
            dirichlet,
            second,
        })
    }

    pub fn zeros(grid: Grid3, num_modes: usize, variant: TraceVariant) -> Self {
        Self {
            variant,
            dirichlet: vec![BoundaryTrace::zeros(grid); num_modes],
            second: vec![BoundaryTrace::zeros(grid); num_modes],
        }
    }

    pub fn num_modes(&self) -> usize {
        self.dirichlet.len()
    }

    pub fn grid(&self) -> &Grid3 {
        self.dirichlet[0].grid()
    }

    pub fn variant(&self) -> TraceVariant {
        self.variant
    }

    /// `f_m`
    pub fn dirichlet(&self, m: usize) -> &BoundaryTrace {
        &self.dirichlet[m]
    }

    /// `g_m`
    pub fn second(&self, m: usize) -> &BoundaryTrace {
        &self.second[m]
    }

    /// `Σ_m ‖f_m‖² + ‖g_m‖²` in the surface product.
    pub fn norm_sq(&self) -> f64 {
        self.dirichlet
            .iter()
            .chain(&self.second)
            .map(|t| t.inner(t))
            .sum()
    }

    pub fn difference(&self, other: &ModeData) -> Result<ModeData> {
        if self.num_modes() != other.num_modes() {
            return Err(Error::Shape("mode counts differ".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.dirichlet.iter_mut().zip(&other.dirichlet) {
            a.axpy(-1.0, b);
        }
        for (a, b) in out.second.iter_mut().zip(&other.second) {
            a.axpy(-1.0, b);
        }
        Ok(out)
    }
}

/// Projects every boundary sample series onto the basis with the default
/// (least-squares) rule.
pub fn project_record(record: &BoundaryRecord, basis: &BasisSet) -> Result<ModeData> {
    project_record_with(record, basis, ProjectionRule::default())
}

pub fn project_record_with(record: &BoundaryRecord, basis: &BasisSet, rule: ProjectionRule) -> Result<ModeData> {
    let proj = Projector::with_rule(basis, record.time_grid(), rule)?;
    let project = |series: &[BoundaryTrace]| -> Vec<BoundaryTrace> {
        (0..proj.num_modes())
            .map(|m| {
                let mut acc = BoundaryTrace::zeros(record.grid);
                for (k, slice) in series.iter().enumerate() {
                    acc.axpy(proj.weight(m, k), slice);
                }
                acc
            })
            .collect()
    };
    ModeData::new(record.variant, project(&record.dirichlet), project(&record.second))
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    lo: [f64; 3],
    hi: [f64; 3],
    n: [usize; 3],
    final_time: f64,
    num_samples: usize,
    trace_variant: TraceVariant,
    ordering: String,
    endianness: String,
}

/// Serializes a record to bytes in the `MXTDR1` layout.
pub fn encode_record(record: &BoundaryRecord) -> Vec<u8> {
    let header = Header {
        format: "MXTDR1".into(),
        lo: record.grid.lo(),
        hi: record.grid.hi(),
        n: record.grid.dims(),
        final_time: record.time_grid.final_time(),
        num_samples: record.time_grid.num_samples(),
        trace_variant: record.variant,
        ordering: ORDERING.into(),
        endianness: "LE".into(),
    };
    let json = serde_json::to_string(&header).expect("header serializes");
    let mut out = Vec::with_capacity(MAGIC.len() + json.len() + 1 + 16 * record.block_len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(json.as_bytes());
    out.push(b'\n');
    for v in record.samples() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_record(bytes: &[u8]) -> Result<BoundaryRecord> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    let rest = &bytes[MAGIC.len()..];
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Truncated("header line has no terminating newline".into()))?;
    let header: Header =
        serde_json::from_slice(&rest[..nl]).map_err(|e| Error::Header(e.to_string()))?;
    if header.endianness != "LE" {
        return Err(Error::Header(format!("unsupported endianness `{}`", header.endianness)));
    }
    if header.ordering != ORDERING {
        return Err(Error::Header(format!("unsupported sample ordering `{}`", header.ordering)));
    }
    let grid = Grid3::new(header.lo, header.hi, header.n).map_err(|e| Error::Header(e.to_string()))?;
    let time_grid =
        TimeGrid::new(header.final_time, header.num_samples).map_err(|e| Error::Header(e.to_string()))?;
    let payload = &rest[nl + 1..];
    if payload.len() % 8 != 0 {
        return Err(Error::Truncated(format!(
            "payload of {} bytes is not a whole number of 8-byte values",
            payload.len()
        )));
    }
    let per_slice = 3 * boundary_entry_count(&grid);
    let expected = 2 * header.num_samples * per_slice;
    let found = payload.len() / 8;
    if found != expected {
        return Err(Error::SizeMismatch { expected, found });
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let slices: Vec<BoundaryTrace> = values
        .chunks_exact(per_slice)
        .map(|c| BoundaryTrace::from_flat(grid, c))
        .collect::<Result<_>>()?;
    let (f, g) = slices.split_at(header.num_samples);
    BoundaryRecord::new(grid, time_grid, header.trace_variant, f.to_vec(), g.to_vec())
}

pub fn save_record(record: &BoundaryRecord, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_record(record)).map_err(|e| Error::io(path, e))
}

pub fn load_record(path: impl AsRef<Path>) -> Result<BoundaryRecord> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_record(&bytes)
}

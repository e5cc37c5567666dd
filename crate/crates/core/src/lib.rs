//! Reconstruction of the initial electric field of the Maxwell curl-curl
//! system from lateral boundary data, by projecting time onto a Legendre
//! polynomial-exponential basis and solving the resulting coupled spatial
//! system with a quasi-reversibility (Tikhonov) functional.

pub mod basis;
pub mod data;
pub mod error;
pub mod forward;
pub mod grid;
pub mod inverse;
pub mod linalg;
pub mod ops;
pub mod phantoms;
pub mod stencil;
pub mod trace;
pub mod vtk;

pub use basis::{BasisSet, ProjectionRule, StiffnessMatrix, TimeGrid};
pub use error::{Error, Result};
pub use grid::{Grid3, MediumFields, VectorGrid};
pub use trace::{BoundaryTrace, FaceId};
pub use data::{BoundaryRecord, ModeData, NoiseSpec, TraceVariant};
pub use phantoms::PhantomId;
pub use forward::ForwardConfig;
pub use inverse::{invert, ModeStack, QRConfig, SolveReport};

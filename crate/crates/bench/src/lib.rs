//! Shared fixtures for the criterion benches.

use tdr_core::forward::cfl_max_dt;
use tdr_core::inverse::ModeStack;
use tdr_core::phantoms::{benchmark_medium, phantom, PhantomId};
use tdr_core::{Grid3, MediumFields, VectorGrid};

/// The benchmark domain grid, 20 nodes per axis on `[-1, 1]³`.
pub fn omega() -> Grid3 {
    Grid3::cube(-1.0, 1.0, 20).expect("valid grid")
}

pub fn medium() -> MediumFields {
    benchmark_medium(omega())
}

pub fn test1_field() -> VectorGrid {
    phantom(PhantomId::TEST1, &omega())
}

/// A deterministic, non-trivial mode stack with `num_modes` modes.
pub fn stack(num_modes: usize) -> ModeStack {
    let g = omega();
    let len = num_modes * 3 * g.len();
    let flat: Vec<f64> = (0..len).map(|i| ((i as f64) * 0.618).sin()).collect();
    ModeStack::from_flat(g, num_modes, &flat).expect("shape matches")
}

/// A stable leapfrog step for [`medium`].
pub fn stable_dt() -> f64 {
    0.9 * cfl_max_dt(omega().h(0), &medium())
}

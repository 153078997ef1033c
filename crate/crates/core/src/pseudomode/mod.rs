//! Numerically exact solver for arbitrary `N`: the lossy cavity is replaced
//! by one damped pseudomode, and the conserved joint excitation reduces the
//! master equation to a block tower coupled one way by photon loss.

mod evolve;
mod liouvillian;
mod lossless;
mod state;

pub use evolve::{
    bench_fixed_steps, evolve, evolve_observed, evolve_with, GridSpec, SolveOptions, StepSample,
    TRACE_DRIFT_BOUND,
};
pub use liouvillian::{
    build_liouvillian, BlockLiouvillian, DEFAULT_MEMORY_BUDGET,
};
pub use lossless::{evolve_lossless, LosslessPropagator};
pub use state::{block_offsets, storage_len, BlockDensityMatrix};

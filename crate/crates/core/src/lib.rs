//! Exact dynamics of `N` initially excited two-level atoms collectively
//! coupled to a lossy resonant cavity.
//!
//! Three solver routes cover the whole parameter space:
//!
//! * [`analytic`] — closed forms for one and two atoms (time-dependent decay
//!   rate, radiated intensity, exact master-equation coefficients and their
//!   canonical / non-canonical decay rates), plus the weak-coupling
//!   references: the mean-field superradiance profile and the Dicke
//!   population cascade.
//! * [`pseudomode`] — numerically exact evolution for arbitrary `N`: the
//!   Lorentzian reservoir is replaced by one damped bosonic mode, and the
//!   conserved excitation structure reduces the master equation to a tower of
//!   independent `(M+1) x (M+1)` blocks coupled one way by photon loss.
//! * [`analysis`] — derived quantities: radiation-regime classification,
//!   the critical spectral width separating burst-only from reabsorbing
//!   profiles, peak-intensity scaling exponents, reabsorption scaling, and
//!   the long-time negativity check of the two-atom canonical rates.
//!
//! All quantities are expressed in units of the atomic transition frequency
//! (`omega0 = 1` by default).

pub mod analysis;
pub mod analytic;
pub mod error;
pub mod expsum;
pub mod integrate;
pub mod model;
pub mod pseudomode;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{AnalysisError, AnalyticError, ModelError, PseudomodeError};
pub use expsum::ExpSum;
pub use model::{
    DerivedFrequencies, HorizonPolicy, IntensityTrace, SolverPath, SystemParams, TraceMeta,
};

//! Domain types shared by every solver path: physical parameters, derived
//! frequencies, intensity traces, and the run-horizon policy.
//!
//! The physical system is an ensemble of `N` identical two-level atoms
//! (transition frequency `omega0`) collectively coupled to a single lossy
//! cavity mode. The cavity is described by a Lorentzian spectral density of
//! strength `gamma0` and half-width `lambda`, both expressed in units of
//! `omega0`. The limit `lambda -> 0` is a perfect (lossless) cavity; for
//! `lambda > 0` the weak-coupling (bad cavity) decay rate is
//! `gamma_m = gamma0^2 / lambda`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::ModelError;

/// Fraction of the initial excitation below which a run is considered decayed.
pub const EXCITATION_FLOOR: f64 = 1e-3;

/// Horizon cap prefactor: runs never exceed `50 / gamma_m` (lossy) or
/// `50 sqrt(2) / (gamma0 sqrt(N))` (lossless).
pub const HORIZON_CAP_FACTOR: f64 = 50.0;

/// Largest imaginary residue tolerated when a complex-valued closed form is
/// converted to a real observable.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// Physical and numerical parameters of a run. The single source of truth:
/// every solver path takes one of these.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemParams {
    /// Number of two-level atoms, `N >= 1`.
    pub n_atoms: usize,
    /// Coupling strength of the Lorentzian spectral density (units of omega0).
    pub gamma0: f64,
    /// Spectral half-width of the Lorentzian (units of omega0). `0` is a
    /// lossless cavity.
    pub lambda: f64,
    /// Atomic transition frequency; sets the unit system (default 1).
    pub omega0: f64,
    /// Absolute tolerance of the adaptive integrator.
    pub abs_tol: f64,
    /// Relative tolerance of the adaptive integrator.
    pub rel_tol: f64,
    /// When to stop a simulation run.
    pub horizon: HorizonPolicy,
}

/// Stop rule for time evolution: whichever of the two bounds is hit first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonPolicy {
    /// Stop once `<n>(t) < excitation_floor * N`.
    pub excitation_floor: f64,
    /// Hard cap expressed as a multiple of the natural relaxation time.
    pub cap_factor: f64,
}

impl Default for HorizonPolicy {
    fn default() -> Self {
        Self { excitation_floor: EXCITATION_FLOOR, cap_factor: HORIZON_CAP_FACTOR }
    }
}

impl SystemParams {
    /// Parameters with the conventional defaults: `omega0 = 1`,
    /// `gamma0 = 1e-3` unless overridden, integrator tolerances `1e-9`
    /// (`N <= 100`) or `1e-7` (above).
    pub fn new(n_atoms: usize, gamma0: f64, lambda: f64) -> Self {
        let tol = if n_atoms <= 100 { 1e-9 } else { 1e-7 };
        Self {
            n_atoms,
            gamma0,
            lambda,
            omega0: 1.0,
            abs_tol: tol,
            rel_tol: tol,
            horizon: HorizonPolicy::default(),
        }
    }

    /// Checks every invariant, returning the first violation by name.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_atoms < 1 {
            return Err(ModelError::Invariant("n_atoms >= 1"));
        }
        if !(self.gamma0 > 0.0) || !self.gamma0.is_finite() {
            return Err(ModelError::Invariant("gamma0 > 0"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(ModelError::Invariant("lambda >= 0"));
        }
        if !(self.omega0 > 0.0) || !self.omega0.is_finite() {
            return Err(ModelError::Invariant("omega0 > 0"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(ModelError::Invariant("abs_tol > 0"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(ModelError::Invariant("rel_tol > 0"));
        }
        Ok(())
    }

    /// Validating constructor form of [`validate`](Self::validate).
    pub fn validated(self) -> Result<Self, ModelError> {
        self.validate()?;
        Ok(self)
    }

    /// Weak-coupling (Markovian) decay rate `gamma0^2 / lambda`.
    ///
    /// Undefined in the lossless limit `lambda = 0`.
    pub fn markovian_rate(&self) -> Result<f64, ModelError> {
        if self.lambda > 0.0 {
            Ok(self.gamma0 * self.gamma0 / self.lambda)
        } else {
            Err(ModelError::UndefinedMarkovianRate)
        }
    }

    /// Hard time cap from the horizon policy.
    pub fn horizon_cap(&self) -> f64 {
        match self.markovian_rate() {
            Ok(gm) => self.horizon.cap_factor / gm,
            // Lossless: cap on the collective oscillation timescale.
            Err(_) => {
                self.horizon.cap_factor * std::f64::consts::SQRT_2
                    / (self.gamma0 * (self.n_atoms as f64).sqrt())
            }
        }
    }

    /// Excitation level below which the run counts as decayed.
    pub fn excitation_floor_abs(&self) -> f64 {
        self.horizon.excitation_floor * self.n_atoms as f64
    }

    /// The three characteristic frequencies of the closed-form solutions.
    pub fn derived_frequencies(&self) -> DerivedFrequencies {
        DerivedFrequencies::from_params(self)
    }
}

/// Characteristic frequencies `sqrt(lambda^2 - k gamma0^2)` for `k = 2, 4, 8`.
///
/// Each one is carried as a complex number: purely imaginary below its
/// critical width, real above it. This avoids separate trigonometric and
/// hyperbolic code paths on the two sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedFrequencies {
    /// `sqrt(lambda^2 - 2 gamma0^2)`: single-atom oscillation frequency,
    /// vanishing at `lambda = sqrt(2) gamma0`.
    pub omega1: Complex64,
    /// `sqrt(lambda^2 - 4 gamma0^2)`: one-excitation pair frequency,
    /// vanishing at `lambda = 2 gamma0`.
    pub omega: Complex64,
    /// `sqrt(lambda^2 - 8 gamma0^2)`: two-excitation pair frequency,
    /// vanishing at `lambda = 2 sqrt(2) gamma0`.
    pub omega_tilde: Complex64,
}

impl DerivedFrequencies {
    pub fn from_params(p: &SystemParams) -> Self {
        let l2 = p.lambda * p.lambda;
        let g2 = p.gamma0 * p.gamma0;
        let freq = |k: f64| Complex64::new(l2 - k * g2, 0.0).sqrt();
        Self { omega1: freq(2.0), omega: freq(4.0), omega_tilde: freq(8.0) }
    }
}

/// Which solver produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    /// Closed-form single-atom solution.
    AnalyticSingle,
    /// Closed-form two-atom solution.
    AnalyticPair,
    /// Block-diagonal atoms-plus-pseudomode master equation.
    PseudomodeBlocks,
    /// Lossless limit via exact diagonalization of the coupling Hamiltonian.
    LosslessEigen,
    /// Weak-coupling population cascade.
    MarkovianCascade,
}

/// Provenance attached to every trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceMeta {
    pub solver: SolverPath,
    pub params: SystemParams,
}

/// Sampled radiated intensity `I(t) = -omega0 d<n>/dt` and excitation
/// `<n>(t)` on a monotonically increasing time grid.
#[derive(Debug, Clone)]
pub struct IntensityTrace {
    pub times: Vec<f64>,
    pub intensity: Vec<f64>,
    pub excitation: Vec<f64>,
    pub meta: TraceMeta,
}

impl IntensityTrace {
    /// Checks the structural invariants: grid monotone, equal lengths,
    /// excitation within `[0, N]` (up to `tol`) and starting at `N`.
    pub fn validate(&self, tol: f64) -> Result<(), ModelError> {
        let n = self.times.len();
        if self.intensity.len() != n || self.excitation.len() != n {
            return Err(ModelError::Invariant("trace arrays same length"));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::Invariant("times strictly increasing"));
        }
        let n_atoms = self.meta.params.n_atoms as f64;
        if self
            .excitation
            .iter()
            .any(|&x| x < -tol || x > n_atoms + tol)
        {
            return Err(ModelError::Invariant("excitation within [0, N]"));
        }
        if let Some(&x0) = self.excitation.first() {
            if self.times[0] == 0.0 && (x0 - n_atoms).abs() > tol {
                return Err(ModelError::Invariant("excitation(0) = N"));
            }
        }
        Ok(())
    }
}

/// Takes the real part of a closed-form complex result, checking that the
/// imaginary residue is numerical noise.
pub fn real_part_checked(z: Complex64, scale: f64) -> Result<f64, ModelError> {
    let bound = IMAG_RESIDUE_TOL * scale.abs().max(1.0);
    if z.im.abs() > bound {
        Err(ModelError::ImaginaryResidue { residue: z.im, bound })
    } else {
        Ok(z.re)
    }
}

//! Error types for every module. All solver errors carry enough context to be
//! reported verbatim by the CLI.

use thiserror::Error;

/// Parameter and trace validation failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    /// A parameter invariant is violated; the message names the invariant.
    #[error("parameter invariant violated: {0}")]
    Invariant(&'static str),

    /// The Markovian rate `gamma0^2 / lambda` is undefined at `lambda = 0`.
    #[error("markovian rate undefined: lambda = 0 (lossless cavity)")]
    UndefinedMarkovianRate,

    /// A closed form that should be real carried a non-negligible
    /// imaginary part.
    #[error("imaginary residue {residue:e} exceeds bound {bound:e}")]
    ImaginaryResidue { residue: f64, bound: f64 },
}

/// Failures of the closed-form solution paths.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error(transparent)]
    Model(#[from] ModelError),

    /// The single-atom decay rate was evaluated within the guard band of one
    /// of its poles.
    #[error("decay rate pole at t = {pole:.6e} (requested t = {t:.6e})")]
    PoleProximity { t: f64, pole: f64 },

    /// Two roots of the pair characteristic polynomial coincide; happens only
    /// at `lambda = {critical_lambda} gamma0`.
    #[error(
        "degenerate parameters: characteristic roots collide at \
         lambda = {critical_lambda:.12} gamma0; shift lambda slightly"
    )]
    DegenerateParameters { critical_lambda: f64 },

    /// A master-equation coefficient was requested where a propagator
    /// vanishes and the coefficient diverges.
    #[error("master-equation coefficients singular near t = {t:.6e}")]
    SingularCoefficient { t: f64 },

    /// A characteristic root failed its residual check.
    #[error("root polish failed: |P(z)| residual {residual:e} at z = {root}")]
    RootResidual { root: num_complex::Complex64, residual: f64 },
}

/// Failures of the numerically exact pseudomode solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PseudomodeError {
    #[error(transparent)]
    Model(#[from] ModelError),

    /// The requested N does not fit in the configured memory budget.
    #[error(
        "state for N = {n_atoms} needs {required_bytes} bytes \
         (budget {budget_bytes}); raise the memory budget to proceed"
    )]
    Capacity { n_atoms: usize, required_bytes: usize, budget_bytes: usize },

    /// The step-size controller underflowed; the problem is stiffer than the
    /// tolerances allow.
    #[error(
        "step size underflow at t = {t:.6e} (h = {h:.3e}); \
         loosen abs_tol/rel_tol or reduce the horizon"
    )]
    StepSizeUnderflow { t: f64, h: f64 },

    /// The integrator exceeded its step budget.
    #[error("integration exceeded {max_steps} steps at t = {t:.6e}")]
    MaxStepsExceeded { t: f64, max_steps: usize },

    /// Trace left the `1 +/- 1e-6` band; the run is not trusted (no silent
    /// renormalization is performed).
    #[error("trace drift {drift:e} exceeds 1e-6 at t = {t:.6e}; tighten tolerances")]
    TraceDrift { t: f64, drift: f64 },
}

/// Failures of the analysis pipeline.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Pseudomode(#[from] PseudomodeError),

    #[error(transparent)]
    Analytic(#[from] AnalyticError),

    /// The trace ended before the first emission maximum.
    #[error("trace truncated before the first intensity maximum (horizon too short)")]
    IncompleteTrace,

    /// The bisection bracket does not contain a reabsorption onset.
    #[error(
        "no reabsorption-onset sign change in bracket \
         [{lo:.6e}, {hi:.6e}] (units of gamma0)"
    )]
    BracketWithoutSignChange { lo: f64, hi: f64 },

    /// Peak intensities must be positive to take logarithmic slopes.
    #[error("non-positive peak intensity {value:e} at N = {n_atoms}")]
    NonPositiveMaximum { n_atoms: usize, value: f64 },

    /// Exponent estimation needs strictly increasing atom numbers.
    #[error("atom-number list must be strictly increasing (got {a} then {b})")]
    NonIncreasingAtomList { a: usize, b: usize },
}

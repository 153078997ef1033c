//! The critical spectral width separating reabsorbing from burst-only
//! radiation profiles.
//!
//! For one atom the boundary is known in closed form
//! (`lambda_crit = sqrt(2) gamma0`): the reabsorption minimum exists exactly
//! below it, so the bisection runs on that predicate. For `N >= 2` the
//! predicate is numeric: does the intensity develop an interior dip below
//! the reabsorption threshold? The dip magnitude vanishes continuously at the
//! boundary, so bisecting its presence converges on the critical width.

use crate::analysis::regime::intensity_epsilon;
use crate::analysis::scan::{scan_extrema, ScanOptions};
use crate::analytic;
use crate::error::AnalysisError;
use crate::model::SystemParams;
use crate::pseudomode::SolveOptions;

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CriticalLambda {
    pub lambda_crit_over_gamma0: f64,
    /// Final bracket width relative to the result.
    pub relative_width: f64,
    /// Number of full scans spent.
    pub scans: usize,
}

/// Integrator tolerance used by the bisection scans; the boundary location
/// is insensitive to it well below the bisection width (verified by the
/// tolerance-robustness test).
fn scan_tolerance(n_atoms: usize) -> f64 {
    if n_atoms <= 100 { 1e-7 } else { 1e-6 }
}

fn has_reabsorption(p_base: &SystemParams, ratio: f64) -> Result<bool, AnalysisError> {
    let mut p = p_base.clone();
    p.lambda = ratio * p.gamma0;
    let tol = scan_tolerance(p.n_atoms);
    let eps = intensity_epsilon(&p);
    let opts = ScanOptions {
        solve: SolveOptions {
            rel_tol: Some(tol),
            abs_tol: Some(tol),
            ..Default::default()
        },
        negative_min_early_exit: Some(eps),
        horizon: None,
    };
    let out = scan_extrema(&p, &opts)?;
    let threshold = eps.max(30.0 * tol * out.max.1.abs());
    Ok(out.min.map_or(false, |(_, v)| v < -threshold))
}

/// Bisects for the critical width, in units of `gamma0`. The bracket
/// (default `[0.1, 2 sqrt N]`) is widened automatically if the boundary lies
/// outside it; failure to establish a sign change is an error.
pub fn find_critical_lambda(
    p_base: &SystemParams,
    bracket: Option<(f64, f64)>,
    rel_width: f64,
) -> Result<CriticalLambda, AnalysisError> {
    p_base.validate().map_err(AnalysisError::Model)?;
    let sqrt_n = (p_base.n_atoms as f64).sqrt();
    let (lo0, hi0) = bracket.unwrap_or((0.1, 2.0 * sqrt_n));
    let mut scans = 0usize;

    let mut pred = |ratio: f64| -> Result<bool, AnalysisError> {
        scans += 1;
        if p_base.n_atoms == 1 {
            // Closed-form predicate: the reabsorption minimum exists only
            // below the critical width.
            let mut p = p_base.clone();
            p.lambda = ratio * p.gamma0;
            Ok(analytic::single_extrema(&p)?.min.is_some())
        } else {
            has_reabsorption(p_base, ratio)
        }
    };

    let (mut lo, mut hi) = (lo0, hi0);
    // lo must reabsorb, hi must not.
    let mut lo_ok = pred(lo)?;
    while !lo_ok && lo > 0.01 {
        lo /= 1.5;
        lo_ok = pred(lo)?;
    }
    let mut hi_ok = !pred(hi)?;
    while !hi_ok && hi < 8.0 * sqrt_n {
        hi *= 1.5;
        hi_ok = !pred(hi)?;
    }
    if !lo_ok || !hi_ok {
        return Err(AnalysisError::BracketWithoutSignChange { lo, hi });
    }

    while hi - lo > rel_width * 0.5 * (hi + lo) {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok(CriticalLambda {
        lambda_crit_over_gamma0: mid,
        relative_width: (hi - lo) / mid,
        scans,
    })
}

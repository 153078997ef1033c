//! Scaling of the peak emitted and peak reabsorbed intensity with the number
//! of atoms, estimated through local logarithmic slopes.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::regime::intensity_epsilon;
use crate::analysis::scan::{scan_extrema, ScanOptions};
use crate::analytic;
use crate::error::AnalysisError;
use crate::model::SystemParams;
use crate::pseudomode::SolveOptions;

/// Which reference produces the peak intensities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakSolver {
    /// Numerically exact run (block solver, or eigen propagation at
    /// zero width).
    Exact,
    /// Markovian population cascade.
    MarkovianCascade,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentRow {
    pub n_lo: usize,
    pub n_hi: usize,
    /// Peak intensity at `n_lo`.
    pub max_intensity: f64,
    /// Local logarithmic slope between the two sizes.
    pub nu: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentTable {
    pub rows: Vec<ExponentRow>,
    /// Peak intensity at the last size (closes the table).
    pub last_max_intensity: f64,
}

/// Peak intensity of a run with `n` atoms at the base parameters.
pub fn peak_intensity(
    p_base: &SystemParams,
    n: usize,
    solver: PeakSolver,
) -> Result<(f64, f64), AnalysisError> {
    let mut p = SystemParams::new(n, p_base.gamma0, p_base.lambda);
    p.omega0 = p_base.omega0;
    match solver {
        PeakSolver::MarkovianCascade => {
            let peak = analytic::cascade_peak(&p)?;
            Ok((peak.t_peak, peak.i_peak))
        }
        PeakSolver::Exact => {
            let opts = ScanOptions {
                solve: SolveOptions {
                    rel_tol: Some(if n <= 100 { 1e-7 } else { 1e-6 }),
                    abs_tol: Some(if n <= 100 { 1e-7 } else { 1e-6 }),
                    ..Default::default()
                },
                ..Default::default()
            };
            let out = scan_extrema(&p, &opts)?;
            Ok(out.max)
        }
    }
}

/// Local exponents `nu_m = log(max I(N_{m+1}) / max I(N_m)) /
/// log(N_{m+1} / N_m)` for a strictly increasing list of sizes.
pub fn local_exponent(
    p_base: &SystemParams,
    n_list: &[usize],
    solver: PeakSolver,
) -> Result<ExponentTable, AnalysisError> {
    for w in n_list.windows(2) {
        if w[1] <= w[0] {
            return Err(AnalysisError::NonIncreasingAtomList { a: w[0], b: w[1] });
        }
    }
    if n_list.len() < 2 {
        return Err(AnalysisError::NonIncreasingAtomList {
            a: n_list.first().copied().unwrap_or(0),
            b: 0,
        });
    }
    let peaks: Vec<(usize, f64)> = n_list
        .par_iter()
        .map(|&n| peak_intensity(p_base, n, solver).map(|(_, i)| (n, i)))
        .collect::<Result<_, _>>()?;
    for &(n, i) in &peaks {
        if i <= 0.0 {
            return Err(AnalysisError::NonPositiveMaximum { n_atoms: n, value: i });
        }
    }
    let rows = peaks
        .windows(2)
        .map(|w| {
            let (n_lo, i_lo) = w[0];
            let (n_hi, i_hi) = w[1];
            ExponentRow {
                n_lo,
                n_hi,
                max_intensity: i_lo,
                nu: (i_hi / i_lo).ln() / (n_hi as f64 / n_lo as f64).ln(),
            }
        })
        .collect();
    Ok(ExponentTable { rows, last_max_intensity: peaks.last().unwrap().1 })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReabsorptionRow {
    pub n_atoms: usize,
    pub lambda_over_gamma0: f64,
    /// `|min_t I|`, or exactly 0 where no dip beyond threshold exists.
    pub reabsorption: f64,
    pub t_min: Option<f64>,
    /// Local logarithmic slope against the previous size at the same width.
    pub slope_vs_prev_n: Option<f64>,
}

/// Maximum reabsorbed intensity across a grid of sizes and widths; rows are
/// ordered width-major, size-minor, and carry local log-log slopes in `N`.
pub fn reabsorption_scan(
    p_base: &SystemParams,
    n_list: &[usize],
    lambda_ratios: &[f64],
) -> Result<Vec<ReabsorptionRow>, AnalysisError> {
    let points: Vec<(f64, usize)> = lambda_ratios
        .iter()
        .flat_map(|&r| n_list.iter().map(move |&n| (r, n)))
        .collect();
    let depths: Vec<(f64, Option<f64>)> = points
        .par_iter()
        .map(|&(ratio, n)| {
            let mut p = SystemParams::new(n, p_base.gamma0, ratio * p_base.gamma0);
            p.omega0 = p_base.omega0;
            let eps = intensity_epsilon(&p);
            let opts = ScanOptions {
                solve: SolveOptions {
                    rel_tol: Some(if n <= 100 { 1e-7 } else { 1e-6 }),
                    abs_tol: Some(if n <= 100 { 1e-7 } else { 1e-6 }),
                    ..Default::default()
                },
                ..Default::default()
            };
            let out = scan_extrema(&p, &opts)?;
            Ok(match out.min {
                Some((t, v)) if v < -eps => (v.abs(), Some(t)),
                _ => (0.0, None),
            })
        })
        .collect::<Result<_, AnalysisError>>()?;

    let mut rows = Vec::with_capacity(points.len());
    for (k, (&(ratio, n), &(depth, t_min))) in points.iter().zip(&depths).enumerate() {
        let slope = if k > 0 && points[k - 1].0 == ratio {
            let (prev_depth, _) = depths[k - 1];
            let prev_n = points[k - 1].1;
            (depth > 0.0 && prev_depth > 0.0)
                .then(|| (depth / prev_depth).ln() / (n as f64 / prev_n as f64).ln())
        } else {
            None
        };
        rows.push(ReabsorptionRow {
            n_atoms: n,
            lambda_over_gamma0: ratio,
            reabsorption: depth,
            t_min,
            slope_vs_prev_n: slope,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RelaxationReport {
    /// Mean relaxation time `2 / (N gamma_m)` of the Markovian generator.
    pub tau_r: f64,
    /// `lambda / (sqrt N gamma0)`: above 1 the Markovian description is
    /// expected to hold, below it memory effects take over.
    pub markov_indicator: f64,
}

pub fn relaxation_time(p: &SystemParams) -> Result<RelaxationReport, AnalysisError> {
    p.validate().map_err(AnalysisError::Model)?;
    let gm = p.markovian_rate().map_err(AnalysisError::Model)?;
    Ok(RelaxationReport {
        tau_r: 2.0 / (p.n_atoms as f64 * gm),
        markov_indicator: p.lambda / ((p.n_atoms as f64).sqrt() * p.gamma0),
    })
}

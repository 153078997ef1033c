//! Time evolution drivers for the block master equation.
//!
//! `evolve` integrates from the all-excited state and samples intensity and
//! excitation on a grid; `evolve_observed` streams one sample per accepted
//! step to a caller-supplied observer (the analysis scans build on it). The
//! lossless limit dispatches to the exact-diagonalization path unless the
//! caller forces the block solver.

use num_complex::Complex64;

use crate::error::PseudomodeError;
use crate::integrate::{integrate_adaptive, IntegrateOptions, ObserverControl, Sample};
use crate::model::{IntensityTrace, SolverPath, SystemParams, TraceMeta};
use crate::pseudomode::liouvillian::{build_liouvillian, BlockLiouvillian, DEFAULT_MEMORY_BUDGET};
use crate::pseudomode::lossless::evolve_lossless;
use crate::pseudomode::state::{block_offsets, trace_flat, BlockDensityMatrix};

/// Trace is trusted to this absolute drift; beyond it the run aborts
/// (never silently renormalized).
pub const TRACE_DRIFT_BOUND: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Evolve the block tower even where the lossless shortcut applies.
    pub force_blocks: bool,
    /// Memory budget covering the state and all integrator workspace.
    pub memory_budget: usize,
    /// Tolerance overrides (defaults come from the parameter set).
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub h_max: Option<f64>,
    /// Stop once the excitation has decayed below the horizon floor.
    pub stop_at_floor: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            force_blocks: false,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            abs_tol: None,
            rel_tol: None,
            h_max: None,
            stop_at_floor: true,
        }
    }
}

/// Sampling request for `evolve`.
#[derive(Debug, Clone)]
pub enum GridSpec {
    /// `n_samples` uniform points on `[0, t_end]`; `t_end` defaults to the
    /// horizon cap of the parameter set.
    Uniform { t_end: Option<f64>, n_samples: usize },
    /// Explicit strictly increasing times (0 is prepended if missing).
    Times(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Uniform { t_end: None, n_samples: 1001 }
    }
}

impl GridSpec {
    /// Resolved sample times, starting at 0.
    pub fn resolve(&self, p: &SystemParams) -> Vec<f64> {
        match self {
            GridSpec::Uniform { t_end, n_samples } => {
                let t_end = t_end.unwrap_or_else(|| p.horizon_cap());
                let n = (*n_samples).max(2);
                (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect()
            }
            GridSpec::Times(ts) => {
                let mut out = Vec::with_capacity(ts.len() + 1);
                if ts.first().map_or(true, |&t| t > 0.0) {
                    out.push(0.0);
                }
                out.extend_from_slice(ts);
                out
            }
        }
    }
}

/// One accepted integration step, as seen by an observer.
#[derive(Debug, Clone, Copy)]
pub struct StepSample {
    pub t: f64,
    pub intensity: f64,
    pub excitation: f64,
    /// `<n + b'b>`, monotone non-increasing for `lambda > 0`.
    pub total_excitation: f64,
    /// `<J+ J->`; together with the photon number it bounds any future
    /// intensity excursion.
    pub jpjm: f64,
    pub photons: f64,
}

/// Evolves the all-excited state and samples on the grid.
pub fn evolve(
    p: &SystemParams,
    grid: &GridSpec,
) -> Result<(IntensityTrace, BlockDensityMatrix), PseudomodeError> {
    evolve_with(p, grid, &SolveOptions::default())
}

pub fn evolve_with(
    p: &SystemParams,
    grid: &GridSpec,
    opts: &SolveOptions,
) -> Result<(IntensityTrace, BlockDensityMatrix), PseudomodeError> {
    p.validate()?;
    let times = grid.resolve(p);
    if p.lambda == 0.0 && !opts.force_blocks {
        return evolve_lossless(p, &times);
    }

    let liou = build_liouvillian(p, opts.memory_budget)?;
    let floor = if opts.stop_at_floor { Some(p.excitation_floor_abs()) } else { None };
    let mut out_t = vec![0.0];
    let mut out_i = vec![0.0];
    let mut out_n = vec![p.n_atoms as f64];
    let (_, rho) = run_blocks(p, &liou, *times.last().unwrap_or(&0.0), &times[1..], opts, |s, is_grid| {
        if is_grid {
            out_t.push(s.t);
            out_i.push(s.intensity);
            out_n.push(s.excitation);
        }
        match floor {
            Some(f) if s.excitation < f => ObserverControl::Stop,
            _ => ObserverControl::Continue,
        }
    })?;
    Ok((
        IntensityTrace {
            times: out_t,
            intensity: out_i,
            excitation: out_n,
            meta: TraceMeta { solver: SolverPath::PseudomodeBlocks, params: p.clone() },
        },
        rho,
    ))
}

/// Streams every accepted step of a block-solver run to `observer`.
/// The observer's `Stop` ends the run early (not an error).
pub fn evolve_observed(
    p: &SystemParams,
    t_end: f64,
    opts: &SolveOptions,
    mut observer: impl FnMut(&StepSample) -> ObserverControl,
) -> Result<(f64, BlockDensityMatrix), PseudomodeError> {
    p.validate()?;
    let liou = build_liouvillian(p, opts.memory_budget)?;
    run_blocks(p, &liou, t_end, &[], opts, |s, _| observer(s))
}

fn run_blocks(
    p: &SystemParams,
    liou: &BlockLiouvillian,
    t_end: f64,
    grid: &[f64],
    opts: &SolveOptions,
    mut on_step: impl FnMut(&StepSample, bool) -> ObserverControl,
) -> Result<(f64, BlockDensityMatrix), PseudomodeError> {
    let n = p.n_atoms;
    let offsets = block_offsets(n);
    let mut y = BlockDensityMatrix::all_excited(n).into_flat();
    let int_opts = IntegrateOptions {
        abs_tol: opts.abs_tol.unwrap_or(p.abs_tol),
        rel_tol: opts.rel_tol.unwrap_or(p.rel_tol),
        h_max: opts.h_max,
        ..Default::default()
    };
    let grid: Vec<f64> = grid.iter().copied().filter(|&t| t > 0.0 && t <= t_end).collect();

    let mut drift_failure: Option<PseudomodeError> = None;
    let t_reached = integrate_adaptive(
        |_t, y, dy| liou.apply_into(y, dy),
        0.0,
        t_end,
        &mut y,
        &grid,
        &int_opts,
        |t, y, sample| {
            let trace = trace_flat(y, &offsets, n);
            let drift = (trace - 1.0).abs();
            if drift > TRACE_DRIFT_BOUND {
                drift_failure = Some(PseudomodeError::TraceDrift { t, drift });
                return ObserverControl::Stop;
            }
            let rho = RhoView { data: y, offsets: &offsets, n };
            let excitation = rho.expectation_n();
            let total = rho.expectation_total();
            let s = StepSample {
                t,
                intensity: liou.intensity_from_flat(y),
                excitation,
                total_excitation: total,
                jpjm: rho.expectation_jpjm(),
                photons: total - excitation,
            };
            on_step(&s, sample == Sample::Grid)
        },
    )?;
    if let Some(err) = drift_failure {
        return Err(err);
    }
    Ok((t_reached, BlockDensityMatrix::from_flat(n, y)))
}

/// Diagonal-walk helpers over a borrowed flat state.
struct RhoView<'a> {
    data: &'a [Complex64],
    offsets: &'a [usize],
    n: usize,
}

impl RhoView<'_> {
    fn diag_sum(&self, weight: impl Fn(usize, usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for m in 0..=self.n {
            let dim = m + 1;
            let blk = &self.data[self.offsets[m]..self.offsets[m + 1]];
            for i in 0..dim {
                acc += weight(m, i) * blk[i * dim + i].re;
            }
        }
        acc
    }

    fn expectation_n(&self) -> f64 {
        self.diag_sum(|_, i| i as f64)
    }

    fn expectation_total(&self) -> f64 {
        self.diag_sum(|m, _| m as f64)
    }

    fn expectation_jpjm(&self) -> f64 {
        let nf = self.n as f64;
        self.diag_sum(|_, i| i as f64 * (nf - i as f64 + 1.0))
    }
}

/// Wall time of `steps` fixed RK4 steps of the block generator, single
/// threaded, used to verify the cubic growth of the computational cost.
pub fn bench_fixed_steps(n_atoms: usize, steps: usize) -> Result<std::time::Duration, PseudomodeError> {
    let p = SystemParams::new(n_atoms, 1e-3, 5e-4);
    let liou = build_liouvillian(&p, usize::MAX)?;
    let mut y = BlockDensityMatrix::all_excited(n_atoms).into_flat();
    // Step small enough to stay stable for every benchmarked size.
    let h = 0.02 / (p.gamma0 * (n_atoms as f64).powf(1.5));
    let start = std::time::Instant::now();
    crate::integrate::fixed_rk4(|_t, y, dy| liou.apply_into(y, dy), 0.0, &mut y, h, steps);
    Ok(start.elapsed())
}

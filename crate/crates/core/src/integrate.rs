//! Adaptive Dormand-Prince 5(4) integration over flat complex state vectors,
//! plus a fixed-step classic RK4 used for benchmarking.
//!
//! The state is always a `&[Complex64]` slice; the solver knows nothing about
//! block structure. Stage combinations and error norms are fused single-pass
//! kernels, parallelized over chunks for large states with a fixed chunk
//! decomposition so results do not depend on the number of threads.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::PseudomodeError;

/// States below this length are not worth parallelizing.
const PAR_MIN_LEN: usize = 1 << 15;
const PAR_CHUNK: usize = 1 << 14;

/// Step-size controller limits (standard Hairer choices).
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-9, rel_tol: 1e-9, h_init: None, h_max: None, max_steps: 50_000_000 }
    }
}

/// Why the observer is being called.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sample {
    /// An ordinary accepted step.
    Step,
    /// An accepted step that was clamped to land exactly on a requested time.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObserverControl {
    Continue,
    /// Terminate the integration early (not an error).
    Stop,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Difference between the 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// `out[i] = y[i] + h * sum_j c[j] * ks[j][i]`, fused and chunk-parallel.
fn stage_combine(out: &mut [Complex64], y: &[Complex64], h: f64, c: &[f64], ks: &[&[Complex64]]) {
    debug_assert_eq!(c.len(), ks.len());
    let kernel = |offset: usize, out_chunk: &mut [Complex64]| {
        for (i, o) in out_chunk.iter_mut().enumerate() {
            let idx = offset + i;
            let mut acc = y[idx];
            for (cj, k) in c.iter().zip(ks) {
                acc += h * cj * k[idx];
            }
            *o = acc;
        }
    };
    if out.len() >= PAR_MIN_LEN {
        out.par_chunks_mut(PAR_CHUNK)
            .enumerate()
            .for_each(|(ci, chunk)| kernel(ci * PAR_CHUNK, chunk));
    } else {
        kernel(0, out);
    }
}

/// Scaled RMS error norm of `h * sum_j e[j] ks[j]` against
/// `atol + rtol * max(|y|, |ynew|)`. Deterministic regardless of thread count.
fn error_norm(
    y: &[Complex64],
    ynew: &[Complex64],
    h: f64,
    ks: &[&[Complex64]; 7],
    atol: f64,
    rtol: f64,
) -> f64 {
    let chunk_sum = |offset: usize, len: usize| -> f64 {
        let mut acc = 0.0;
        for i in offset..offset + len {
            let mut e = Complex64::ZERO;
            for (ej, k) in E.iter().zip(ks) {
                e += ej * k[i];
            }
            let scale = atol + rtol * y[i].norm().max(ynew[i].norm());
            let r = (h * e).norm() / scale;
            acc += r * r;
        }
        acc
    };
    let n = y.len();
    let total: f64 = if n >= PAR_MIN_LEN {
        let partials: Vec<f64> = (0..n.div_ceil(PAR_CHUNK))
            .into_par_iter()
            .map(|ci| {
                let offset = ci * PAR_CHUNK;
                chunk_sum(offset, PAR_CHUNK.min(n - offset))
            })
            .collect();
        partials.iter().sum()
    } else {
        chunk_sum(0, n)
    };
    (total / n as f64).sqrt()
}

/// Crude initial step size from the magnitude of the first derivative.
fn initial_step<F>(rhs: &mut F, t0: f64, y: &[Complex64], k1: &[Complex64], opts: &IntegrateOptions, t_end: f64) -> f64
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let scaled_rms = |v: &[Complex64]| -> f64 {
        let s: f64 = v
            .iter()
            .zip(y)
            .map(|(vi, yi)| {
                let scale = opts.abs_tol + opts.rel_tol * yi.norm();
                let r = vi.norm() / scale;
                r * r
            })
            .sum();
        (s / v.len() as f64).sqrt()
    };
    let d0 = {
        let s: f64 = y
            .iter()
            .map(|yi| {
                let scale = opts.abs_tol + opts.rel_tol * yi.norm();
                let r = yi.norm() / scale;
                r * r
            })
            .sum::<f64>();
        (s / y.len() as f64).sqrt()
    };
    let d1 = scaled_rms(k1);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * (t_end - t0).max(1.0) } else { 0.01 * d0 / d1 };
    h0 = h0.min(t_end - t0);
    // One explicit Euler probe to estimate the second derivative.
    let mut y1 = y.to_vec();
    stage_combine(&mut y1, y, h0, &[1.0], &[k1]);
    let mut f1 = vec![Complex64::ZERO; y.len()];
    rhs(t0 + h0, &y1, &mut f1);
    let d2 = {
        let s: f64 = f1
            .iter()
            .zip(k1)
            .zip(y)
            .map(|((a, b), yi)| {
                let scale = opts.abs_tol + opts.rel_tol * yi.norm();
                let r = (a - b).norm() / scale;
                r * r
            })
            .sum::<f64>();
        (s / y.len() as f64).sqrt() / h0
    };
    let h1 = if d1.max(d2) > 1e-15 {
        (0.01 / d1.max(d2)).powf(0.2)
    } else {
        (h0 * 1e3).max(1e-6)
    };
    h0 = (100.0 * h0).min(h1).min(t_end - t0);
    if let Some(hm) = opts.h_max {
        h0 = h0.min(hm);
    }
    h0
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` to `t_end`, calling `observer`
/// after every accepted step. Steps are clamped so each entry of `hit_times`
/// (strictly increasing, within `(t0, t_end]`) is landed on exactly; those
/// calls carry [`Sample::Grid`]. Returns the final time reached (which is
/// earlier than `t_end` only if the observer stopped the run).
pub fn integrate_adaptive<F, O>(
    mut rhs: F,
    t0: f64,
    t_end: f64,
    y: &mut Vec<Complex64>,
    hit_times: &[f64],
    opts: &IntegrateOptions,
    mut observer: O,
) -> Result<f64, PseudomodeError>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
    O: FnMut(f64, &[Complex64], Sample) -> ObserverControl,
{
    let n = y.len();
    debug_assert!(hit_times.windows(2).all(|w| w[0] < w[1]));
    let mut ks: Vec<Vec<Complex64>> = (0..7).map(|_| vec![Complex64::ZERO; n]).collect();
    let mut ytmp = vec![Complex64::ZERO; n];
    let mut ynew = vec![Complex64::ZERO; n];

    let mut t = t0;
    let mut next_hit = 0usize;
    while next_hit < hit_times.len() && hit_times[next_hit] <= t0 {
        next_hit += 1;
    }

    rhs(t, y, &mut ks[0]);
    let mut h = opts
        .h_init
        .unwrap_or_else(|| initial_step(&mut rhs, t0, y, &ks[0], opts, t_end));
    let mut steps = 0usize;
    let mut last_rejected = false;

    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(PseudomodeError::MaxStepsExceeded { t, max_steps: opts.max_steps });
        }
        if let Some(hm) = opts.h_max {
            h = h.min(hm);
        }
        // Clamp onto the next requested sample time and the horizon.
        let mut t_next = (t + h).min(t_end);
        let mut is_grid = false;
        if next_hit < hit_times.len() && hit_times[next_hit] <= t_next {
            t_next = hit_times[next_hit];
            is_grid = true;
        }
        let h_step = t_next - t;
        let clamped = h_step < h;
        if h_step <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(PseudomodeError::StepSizeUnderflow { t, h: h_step });
        }

        // Stage evaluations (k1 is fresh from FSAL).
        stage_combine(&mut ytmp, y, h_step, &A2, &[&ks[0]]);
        rhs(t + C[1] * h_step, &ytmp, &mut ks[1]);
        stage_combine(&mut ytmp, y, h_step, &A3, &[&ks[0], &ks[1]]);
        rhs(t + C[2] * h_step, &ytmp, &mut ks[2]);
        stage_combine(&mut ytmp, y, h_step, &A4, &[&ks[0], &ks[1], &ks[2]]);
        rhs(t + C[3] * h_step, &ytmp, &mut ks[3]);
        stage_combine(&mut ytmp, y, h_step, &A5, &[&ks[0], &ks[1], &ks[2], &ks[3]]);
        rhs(t + C[4] * h_step, &ytmp, &mut ks[4]);
        stage_combine(&mut ytmp, y, h_step, &A6, &[&ks[0], &ks[1], &ks[2], &ks[3], &ks[4]]);
        rhs(t + C[5] * h_step, &ytmp, &mut ks[5]);
        stage_combine(
            &mut ynew,
            y,
            h_step,
            &B,
            &[&ks[0], &ks[1], &ks[2], &ks[3], &ks[4], &ks[5]],
        );
        rhs(t + h_step, &ynew, &mut ks[6]);

        let krefs: [&[Complex64]; 7] = [
            &ks[0], &ks[1], &ks[2], &ks[3], &ks[4], &ks[5], &ks[6],
        ];
        let err = error_norm(y, &ynew, h_step, &krefs, opts.abs_tol, opts.rel_tol);

        if err <= 1.0 {
            t += h_step;
            std::mem::swap(y, &mut ynew);
            ks.swap(0, 6); // FSAL
            let sample = if is_grid {
                next_hit += 1;
                Sample::Grid
            } else {
                Sample::Step
            };
            if observer(t, y, sample) == ObserverControl::Stop {
                return Ok(t);
            }
            let mut fac = SAFETY * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(FAC_MIN, if last_rejected { 1.0 } else { FAC_MAX });
            // A step clamped onto a sample time must not shrink the
            // controller's step permanently.
            h = if clamped { (h_step * fac).max(h) } else { h_step * fac };
            last_rejected = false;
        } else {
            let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            h = h_step * fac;
            last_rejected = true;
            if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(PseudomodeError::StepSizeUnderflow { t, h });
            }
        }
    }
    Ok(t)
}

/// Fixed-step classic RK4 over `steps` steps of width `h`. Used by the
/// runtime-scaling benchmark, where the work per step must not depend on the
/// error controller.
pub fn fixed_rk4<F>(mut rhs: F, t0: f64, y: &mut Vec<Complex64>, h: f64, steps: usize)
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = y.len();
    let mut k1 = vec![Complex64::ZERO; n];
    let mut k2 = vec![Complex64::ZERO; n];
    let mut k3 = vec![Complex64::ZERO; n];
    let mut k4 = vec![Complex64::ZERO; n];
    let mut ytmp = vec![Complex64::ZERO; n];
    let mut ynew = vec![Complex64::ZERO; n];
    let mut t = t0;
    for _ in 0..steps {
        rhs(t, y, &mut k1);
        stage_combine(&mut ytmp, y, 0.5 * h, &[1.0], &[&k1]);
        rhs(t + 0.5 * h, &ytmp, &mut k2);
        stage_combine(&mut ytmp, y, 0.5 * h, &[1.0], &[&k2]);
        rhs(t + 0.5 * h, &ytmp, &mut k3);
        stage_combine(&mut ytmp, y, h, &[1.0], &[&k3]);
        rhs(t + h, &ytmp, &mut k4);
        stage_combine(
            &mut ynew,
            y,
            h / 6.0,
            &[1.0, 2.0, 2.0, 1.0],
            &[&k1, &k2, &k3, &k4],
        );
        std::mem::swap(y, &mut ynew);
        t += h;
    }
}

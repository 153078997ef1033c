//! Weak-coupling references: the mean-field superradiance profile and the
//! exact Dicke population cascade of the Markovian master equation.
//!
//! With the collective jump operator the Dicke populations close on
//! themselves:
//!
//! `dp_m/dt = gamma_m [ (m+1)(N-m) p_{m+1} - m(N-m+1) p_m ]`
//!
//! and the radiated intensity is `I = omega0 gamma_m <J+ J->`
//! `= omega0 gamma_m sum_m m(N-m+1) p_m`, which never goes negative: the
//! Markovian cascade cannot reabsorb.

use num_complex::Complex64;

use crate::error::AnalysisError;
use crate::integrate::{integrate_adaptive, IntegrateOptions, ObserverControl};
use crate::model::{IntensityTrace, SolverPath, SystemParams, TraceMeta};

/// Mean-field superradiant intensity
/// `I_m(t) = (omega0 gamma_m N^2 / 4) sech^2[(gamma_m N / 2)(t - t0)]` with
/// the burst delay `t0 = ln(N+1) / (N gamma_m)`.
pub fn meanfield_intensity(p: &SystemParams, t: f64) -> Result<f64, AnalysisError> {
    let gm = p.markovian_rate()?;
    let n = p.n_atoms as f64;
    let (t0, peak) = meanfield_peak_parts(p, gm);
    let x = 0.5 * gm * n * (t - t0);
    // sech^2 without overflow for large |x|.
    let e = (-x.abs()).exp();
    let sech = 2.0 * e / (1.0 + e * e);
    Ok(peak * sech * sech)
}

/// Burst time and peak height of the mean-field profile.
pub fn meanfield_peak(p: &SystemParams) -> Result<(f64, f64), AnalysisError> {
    let gm = p.markovian_rate()?;
    Ok(meanfield_peak_parts(p, gm))
}

fn meanfield_peak_parts(p: &SystemParams, gm: f64) -> (f64, f64) {
    let n = p.n_atoms as f64;
    let t0 = ((n + 1.0).ln()) / (n * gm);
    let peak = 0.25 * p.omega0 * gm * n * n;
    (t0, peak)
}

fn cascade_intensity(p: &SystemParams, gm: f64, pops: &[Complex64]) -> f64 {
    let n = p.n_atoms as f64;
    let mut jj = 0.0;
    for (m, pm) in pops.iter().enumerate() {
        jj += m as f64 * (n - m as f64 + 1.0) * pm.re;
    }
    p.omega0 * gm * jj
}

fn cascade_rhs(gm: f64, n_atoms: usize) -> impl Fn(f64, &[Complex64], &mut [Complex64]) {
    let n = n_atoms as f64;
    move |_t, pops, dp| {
        for m in 0..=n_atoms {
            let mf = m as f64;
            let mut d = -gm * mf * (n - mf + 1.0) * pops[m];
            if m + 1 <= n_atoms {
                d += gm * (mf + 1.0) * (n - mf) * pops[m + 1];
            }
            dp[m] = d;
        }
    }
}

/// Integrates the Dicke cascade from the all-excited state and samples the
/// intensity on a uniform grid of `n_samples` points up to `t_end`.
pub fn markovian_cascade(
    p: &SystemParams,
    t_end: f64,
    n_samples: usize,
) -> Result<IntensityTrace, AnalysisError> {
    p.validate()?;
    let gm = p.markovian_rate()?;
    let n_at = p.n_atoms;
    let mut pops = vec![Complex64::ZERO; n_at + 1];
    pops[n_at] = Complex64::ONE;

    let m = n_samples.max(2);
    let grid: Vec<f64> = (1..m).map(|k| t_end * k as f64 / (m - 1) as f64).collect();
    let mut times = vec![0.0];
    let mut intensity = vec![cascade_intensity(p, gm, &pops)];
    let mut excitation = vec![n_at as f64];

    let opts = IntegrateOptions { abs_tol: p.abs_tol, rel_tol: p.rel_tol, ..Default::default() };
    let rhs = cascade_rhs(gm, n_at);
    integrate_adaptive(
        |t, y, dy| rhs(t, y, dy),
        0.0,
        t_end,
        &mut pops,
        &grid,
        &opts,
        |t, y, sample| {
            if sample == crate::integrate::Sample::Grid {
                times.push(t);
                intensity.push(cascade_intensity(p, gm, y));
                excitation.push(y.iter().enumerate().map(|(m, pm)| m as f64 * pm.re).sum());
            }
            ObserverControl::Continue
        },
    )
    .map_err(AnalysisError::Pseudomode)?;

    Ok(IntensityTrace {
        times,
        intensity,
        excitation,
        meta: TraceMeta { solver: SolverPath::MarkovianCascade, params: p.clone() },
    })
}

/// Peak of the cascade intensity, refined parabolically around the best
/// sample of a dense accepted-step scan.
#[derive(Debug, Clone, Copy)]
pub struct CascadePeak {
    pub t_peak: f64,
    pub i_peak: f64,
}

pub fn cascade_peak(p: &SystemParams) -> Result<CascadePeak, AnalysisError> {
    p.validate()?;
    let gm = p.markovian_rate()?;
    let n_at = p.n_atoms;
    let n = n_at as f64;
    let t0 = ((n + 1.0).ln()) / (n * gm);
    let t_end = 6.0 * t0 + 2.0 / (n * gm);
    let mut pops = vec![Complex64::ZERO; n_at + 1];
    pops[n_at] = Complex64::ONE;

    let opts = IntegrateOptions {
        abs_tol: p.abs_tol,
        rel_tol: p.rel_tol,
        h_max: Some(t_end / 2000.0),
        ..Default::default()
    };
    let mut samples: Vec<(f64, f64)> = vec![(0.0, cascade_intensity(p, gm, &pops))];
    let rhs = cascade_rhs(gm, n_at);
    integrate_adaptive(
        |t, y, dy| rhs(t, y, dy),
        0.0,
        t_end,
        &mut pops,
        &[],
        &opts,
        |t, y, _| {
            samples.push((t, cascade_intensity(p, gm, y)));
            ObserverControl::Continue
        },
    )
    .map_err(AnalysisError::Pseudomode)?;

    let (k_best, &(tb, ib)) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("samples nonempty");
    // Parabola through the best sample and its neighbours.
    let refined = if k_best > 0 && k_best + 1 < samples.len() {
        parabolic_vertex(samples[k_best - 1], samples[k_best], samples[k_best + 1])
    } else {
        (tb, ib)
    };
    Ok(CascadePeak { t_peak: refined.0, i_peak: refined.1 })
}

/// Vertex of the parabola through three samples; falls back to the middle
/// point when the samples are collinear.
pub(crate) fn parabolic_vertex(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> (f64, f64) {
    let (x0, y0) = a;
    let (x1, y1) = b;
    let (x2, y2) = c;
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let curv = (d1 - d0) / (x2 - x0);
    if curv == 0.0 || !curv.is_finite() {
        return b;
    }
    let xv = 0.5 * (x0 + x1 - d0 / curv);
    let yv = y1 + curv * (xv - x0) * (xv - x1) + d0 * (xv - x1);
    // Guard against degenerate geometry throwing the vertex far outside.
    if xv < x0.min(x2) || xv > x0.max(x2) {
        b
    } else {
        (xv, yv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const G0: f64 = 1e-3;

    #[test]
    fn meanfield_peak_and_symmetry() {
        let p = SystemParams::new(40, G0, 0.01);
        let gm = p.markovian_rate().unwrap();
        let (t0, peak) = meanfield_peak(&p).unwrap();
        assert!((meanfield_intensity(&p, t0).unwrap() - peak).abs() < 1e-12 * peak);
        assert!((peak - 0.25 * gm * 1600.0).abs() < 1e-12 * peak);
        for &s in &[0.1 * t0, 0.5 * t0, 2.0 * t0] {
            let a = meanfield_intensity(&p, t0 + s).unwrap();
            let b = meanfield_intensity(&p, t0 - s).unwrap();
            assert!((a - b).abs() < 1e-12 * peak);
        }
    }

    #[test]
    fn meanfield_energy_is_bounded_by_n_quanta() {
        let p = SystemParams::new(30, G0, 0.01);
        let (t0, _) = meanfield_peak(&p).unwrap();
        let t_end = t0 + 60.0 / (30.0 * p.markovian_rate().unwrap());
        let n = 200_000;
        let mut acc = 0.0;
        let mut prev = meanfield_intensity(&p, 0.0).unwrap();
        for k in 1..=n {
            let t = t_end * k as f64 / n as f64;
            let cur = meanfield_intensity(&p, t).unwrap();
            acc += 0.5 * (prev + cur) * (t_end / n as f64);
            prev = cur;
        }
        // Equals (N omega0 / 2)(1 + tanh(gamma_m N t0 / 2)) < N omega0.
        let gm = p.markovian_rate().unwrap();
        let closed = 0.5 * 30.0 * (1.0 + (0.5 * gm * 30.0 * t0).tanh());
        assert!((acc - closed).abs() < 1e-3 * closed, "{acc} vs {closed}");
        assert!(acc <= 30.0 * p.omega0);
    }

    #[test]
    fn single_atom_cascade_is_exponential() {
        let p = SystemParams::new(1, G0, 0.01);
        let gm = p.markovian_rate().unwrap();
        let trace = markovian_cascade(&p, 3.0 / gm, 600).unwrap();
        for (t, i) in trace.times.iter().zip(&trace.intensity) {
            let expect = gm * (-gm * t).exp();
            assert!((i - expect).abs() < 1e-8 * gm, "t={t}");
        }
    }

    #[test]
    fn cascade_conserves_total_probability_and_counts_quanta() {
        let p = SystemParams::new(12, G0, 0.02);
        let gm = p.markovian_rate().unwrap();
        let trace = markovian_cascade(&p, 8.0 / gm, 4000).unwrap();
        trace.validate(1e-7).unwrap();
        // Energy bookkeeping via the trapezoid rule.
        let mut acc = 0.0;
        for w in trace.times.windows(2).zip(trace.intensity.windows(2)) {
            acc += 0.5 * (w.1[0] + w.1[1]) * (w.0[1] - w.0[0]);
        }
        let emitted = 12.0 - trace.excitation.last().unwrap();
        assert!((acc - emitted).abs() < 1e-3 * 12.0, "{acc} vs {emitted}");
    }

    #[test]
    fn cascade_peak_agrees_with_meanfield_for_many_atoms() {
        let p = SystemParams::new(50, G0, 50f64.sqrt() * 20.0 * G0 * G0 / G0);
        // lambda chosen deep in the bad-cavity regime; the cascade is the
        // exact Markovian reference and mean-field its large-N approximation.
        let peak = cascade_peak(&p).unwrap();
        let (t0, imf) = meanfield_peak(&p).unwrap();
        assert!(
            (peak.i_peak - imf).abs() < 0.2 * imf,
            "cascade {} vs meanfield {}",
            peak.i_peak,
            imf
        );
        assert!((peak.t_peak - t0).abs() < 0.3 * t0);
    }
}

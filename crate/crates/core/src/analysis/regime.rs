//! Radiation-regime classification of an intensity trace.
//!
//! Three qualitatively distinct profiles occur: a single burst followed by
//! monotone decay (Markovian), an oscillation through genuinely negative
//! intensities (non-Markovian reabsorption), and the critical boundary where
//! the emission halts at isolated instants without ever reversing (pulsed
//! emission). The classifier works on interior local minima of the sampled
//! trace, refined parabolically, against an intensity threshold tied to the
//! natural scale `omega0 gamma0 N`.

use serde::Serialize;

use crate::analytic::parabolic_vertex;
use crate::error::AnalysisError;
use crate::model::{IntensityTrace, SystemParams};

/// Default intensity threshold: a dip is a reabsorption only beyond this.
pub fn intensity_epsilon(p: &SystemParams) -> f64 {
    1e-6 * p.omega0 * p.gamma0 * p.n_atoms as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Markovian,
    CriticalPulsed,
    NonMarkovian,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub max_intensity: f64,
    pub t_max: f64,
    /// Deepest interior local minimum (the global sample minimum when no
    /// interior minimum exists, e.g. for a pure burst profile).
    pub min_intensity: f64,
    pub t_min: f64,
    /// Interior minima whose refined value sits inside `[-eps, eps]`.
    pub zero_touch_times: Vec<f64>,
    /// Threshold used for the classification.
    pub epsilon: f64,
}

/// Extrema of a sampled trace: refined global maximum and interior local
/// minima.
pub(crate) struct TraceExtrema {
    pub max: (f64, f64),
    pub max_index: usize,
    /// Refined interior local minima (time, value).
    pub interior_minima: Vec<(f64, f64)>,
}

pub(crate) fn trace_extrema(times: &[f64], intensity: &[f64]) -> Option<TraceExtrema> {
    let n = times.len();
    if n < 3 {
        return None;
    }
    let (k_max, &i_max) = intensity
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let max = if k_max > 0 && k_max + 1 < n {
        parabolic_vertex(
            (times[k_max - 1], intensity[k_max - 1]),
            (times[k_max], intensity[k_max]),
            (times[k_max + 1], intensity[k_max + 1]),
        )
    } else {
        (times[k_max], i_max)
    };
    let mut interior_minima = Vec::new();
    for k in 1..n - 1 {
        if intensity[k] <= intensity[k - 1] && intensity[k] <= intensity[k + 1] {
            // Plateaus produce runs of equal samples; keep the first.
            if intensity[k] == intensity[k - 1] && k >= 2 && intensity[k - 1] <= intensity[k - 2] {
                continue;
            }
            let v = parabolic_vertex(
                (times[k - 1], intensity[k - 1]),
                (times[k], intensity[k]),
                (times[k + 1], intensity[k + 1]),
            );
            interior_minima.push(v);
        }
    }
    Some(TraceExtrema { max, max_index: k_max, interior_minima })
}

/// Classifies a trace that covers at least the first emission maximum.
pub fn classify_regime(trace: &IntensityTrace, epsilon: f64) -> Result<RegimeReport, AnalysisError> {
    let ext =
        trace_extrema(&trace.times, &trace.intensity).ok_or(AnalysisError::IncompleteTrace)?;
    // The maximum must be an interior feature of the trace; a peak sitting on
    // the final sample means the horizon cut the burst short.
    if ext.max_index + 1 >= trace.times.len() || ext.max.1 <= 0.0 {
        return Err(AnalysisError::IncompleteTrace);
    }

    let (min_intensity, t_min) = ext
        .interior_minima
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(t, v)| (v, t))
        .unwrap_or_else(|| {
            let (k, &v) = trace
                .intensity
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty");
            (v, trace.times[k])
        });

    let zero_touch_times: Vec<f64> = ext
        .interior_minima
        .iter()
        .filter(|(_, v)| v.abs() <= epsilon)
        .map(|&(t, _)| t)
        .collect();

    let regime = if min_intensity < -epsilon {
        Regime::NonMarkovian
    } else if !zero_touch_times.is_empty() {
        Regime::CriticalPulsed
    } else {
        Regime::Markovian
    };
    Ok(RegimeReport {
        regime,
        max_intensity: ext.max.1,
        t_max: ext.max.0,
        min_intensity,
        t_min,
        zero_touch_times,
        epsilon,
    })
}

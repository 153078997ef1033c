//! Single-atom closed forms.
//!
//! The excited-state amplitude of one atom in a Lorentzian cavity obeys
//! `c'' + lambda c' + (gamma0^2/2) c = 0` with `c(0) = 1`, `c'(0) = 0`
//! (Breuer & Petruccione style damped amplitude). Everything here derives
//! from that amplitude: the time-local decay rate `-2 Re(c'/c)`, the radiated
//! intensity `-omega0 d(c^2)/dt`, its first maximum, and (below the critical
//! width `lambda = sqrt(2) gamma0`) the first reabsorption minimum.

use num_complex::Complex64;

use crate::error::AnalyticError;
use crate::expsum::ExpSum;
use crate::model::{real_part_checked, IntensityTrace, SolverPath, SystemParams, TraceMeta};

/// Relative half-width of the guard band around poles of the decay rate.
const POLE_GUARD_REL: f64 = 1e-6;

/// Excited-state amplitude as an exponential sum. Exact for every `lambda`,
/// including the critical width where the two characteristic rates coincide
/// and the amplitude becomes `(1 + lambda t / 2) e^{-lambda t / 2}`.
pub fn single_amplitude(p: &SystemParams) -> ExpSum {
    let omega1 = p.derived_frequencies().omega1;
    let l = Complex64::new(p.lambda, 0.0);
    let r_plus = 0.5 * (-l + omega1);
    let r_minus = 0.5 * (-l - omega1);
    ExpSum::from_second_order_ode(r_plus, r_minus, Complex64::ONE, Complex64::ZERO)
}

/// `n`-th pole of the single-atom decay rate, defined for
/// `lambda < sqrt(2) gamma0` where the amplitude oscillates through zero:
/// `t_n = (2/|Omega1|) [pi n - acot(lambda / |Omega1|)]`, `n = 1, 2, ...`.
pub fn single_pole_time(p: &SystemParams, n: usize) -> Option<f64> {
    let omega1 = p.derived_frequencies().omega1;
    if omega1.re > 0.0 || omega1.norm() == 0.0 {
        return None;
    }
    let w = omega1.im.abs();
    // acot(lambda/w) = atan(w/lambda) for positive arguments; pi/2 at lambda = 0.
    let acot = if p.lambda > 0.0 { (w / p.lambda).atan() } else { std::f64::consts::FRAC_PI_2 };
    Some(2.0 / w * (std::f64::consts::PI * n as f64 - acot))
}

/// Time-dependent decay rate `gamma(t) = -2 Re[c'(t)/c(t)]`.
///
/// Above the critical width it rises from 0 to the asymptote
/// `2 gamma0^2 / (lambda + Omega1)`; below it, it is periodic with simple
/// poles at the zeros of the amplitude, taking negative values between each
/// pole and the following node. Evaluations inside the guard band of a pole
/// return an error rather than a meaningless huge number.
pub fn single_decay_rate(p: &SystemParams, t: f64) -> Result<f64, AnalyticError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let omega1 = p.derived_frequencies().omega1;
    if omega1.re == 0.0 && omega1.im != 0.0 {
        let w = omega1.im.abs();
        let guard = POLE_GUARD_REL / w;
        // Nearest pole: solve the pole formula for the closest integer n.
        let acot =
            if p.lambda > 0.0 { (w / p.lambda).atan() } else { std::f64::consts::FRAC_PI_2 };
        let n_near = ((t * w / 2.0 + acot) / std::f64::consts::PI).round();
        if n_near >= 1.0 {
            let pole = 2.0 / w * (std::f64::consts::PI * n_near - acot);
            if (t - pole).abs() < guard {
                return Err(AnalyticError::PoleProximity { t, pole });
            }
        }
    }
    let c = single_amplitude(p);
    let cdot = c.derivative();
    let cv = c.eval(t);
    let rate = -2.0 * (cdot.eval(t) / cv).re;
    Ok(rate)
}

/// Radiated intensity `I(t) = -omega0 d/dt |c(t)|^2`, evaluated from the
/// analytic derivative of the amplitude square (complex arithmetic
/// throughout; the imaginary residue is checked).
pub fn single_intensity(p: &SystemParams, t: f64) -> Result<f64, AnalyticError> {
    let c = single_amplitude(p);
    let n = &c * &c;
    let i = n.derivative().scaled(Complex64::new(-p.omega0, 0.0));
    Ok(real_part_checked(i.eval(t), p.omega0 * p.gamma0)?)
}

/// Excited-state population `|c(t)|^2 = c(t)^2` (the amplitude is real).
pub fn single_excitation(p: &SystemParams, t: f64) -> Result<f64, AnalyticError> {
    let c = single_amplitude(p);
    let n = &c * &c;
    Ok(real_part_checked(n.eval(t), 1.0)?)
}

/// First emission maximum and (when it exists) the first reabsorption
/// minimum of the single-atom intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleExtrema {
    pub t_max: f64,
    pub i_max: f64,
    /// `None` at and above the critical width `lambda = sqrt(2) gamma0`,
    /// where the reabsorption vanishes and its time is pushed to infinity.
    pub min: Option<(f64, f64)>,
}

/// Closed-form extrema of the single-atom intensity.
///
/// The peak sits at `t_max = (2/Omega1) atanh(Omega1 / s)` with
/// `s = sqrt(lambda^2 + 2 gamma0^2)` and takes the value
/// `(omega0/2)(lambda + s) e^{-lambda t_max}`. Below the critical width the
/// deepest reabsorption is at `t_min = (2/|Omega1|)[pi - atan(|Omega1|/s)]`
/// with value `-(omega0/2)(s - lambda) e^{-lambda t_min}`.
pub fn single_extrema(p: &SystemParams) -> Result<SingleExtrema, AnalyticError> {
    let omega1 = p.derived_frequencies().omega1;
    let s = (p.lambda * p.lambda + 2.0 * p.gamma0 * p.gamma0).sqrt();
    let w = omega1 / s;
    // atanh(w)/w -> 1 as the frequency vanishes at the critical width.
    let ratio = if w.norm() < 1e-8 {
        Complex64::ONE
    } else {
        w.atanh() / w
    };
    let t_max = real_part_checked((2.0 / s) * ratio, 1.0 / s.max(f64::MIN_POSITIVE))
        .map_err(AnalyticError::Model)?;
    let i_max = 0.5 * p.omega0 * (p.lambda + s) * (-p.lambda * t_max).exp();

    let min = if omega1.re == 0.0 && omega1.im != 0.0 {
        let wa = omega1.im.abs();
        let t_min = 2.0 / wa * (std::f64::consts::PI - (wa / s).atan());
        let i_min = -0.5 * p.omega0 * (s - p.lambda) * (-p.lambda * t_min).exp();
        Some((t_min, i_min))
    } else {
        None
    };
    Ok(SingleExtrema { t_max, i_max, min })
}

/// Intensity and excitation sampled on a uniform grid.
pub fn single_intensity_trace(
    p: &SystemParams,
    t_end: f64,
    n_samples: usize,
) -> Result<IntensityTrace, AnalyticError> {
    let c = single_amplitude(p);
    let n = &c * &c;
    let i = n.derivative().scaled(Complex64::new(-p.omega0, 0.0));
    let m = n_samples.max(2);
    let mut times = Vec::with_capacity(m);
    let mut intensity = Vec::with_capacity(m);
    let mut excitation = Vec::with_capacity(m);
    for k in 0..m {
        let t = t_end * k as f64 / (m - 1) as f64;
        times.push(t);
        intensity.push(real_part_checked(i.eval(t), p.omega0 * p.gamma0).map_err(AnalyticError::Model)?);
        excitation.push(real_part_checked(n.eval(t), 1.0).map_err(AnalyticError::Model)?);
    }
    Ok(IntensityTrace {
        times,
        intensity,
        excitation,
        meta: TraceMeta { solver: SolverPath::AnalyticSingle, params: p.clone() },
    })
}

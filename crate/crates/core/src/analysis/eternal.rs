//! Long-time negativity of the two-atom double-jump rate.
//!
//! In the wide-reservoir regime the rate attached to the direct two-quantum
//! jump approaches `3 (gamma0^6 / lambda^5) G(lambda t)` with the universal
//! profile
//!
//! `G(tau) = [e^{-3 tau} + e^{-2 tau} (2 tau - 5)
//!            + e^{-tau} (4 tau^2 - 2 tau + 7)] / 3 - 1`,
//!
//! which starts at `G(0) = 0`, stays strictly negative for `tau > 0`, and
//! tends to -1. A canonical rate that is negative at every time means the
//! dynamics never has a fully Markovian stretch, no matter how wide the
//! reservoir: the non-Markovianity is eternal.

use serde::Serialize;

use crate::analytic::{build_pair_propagators, pair_gamma_matrix};
use crate::error::AnalysisError;
use crate::model::SystemParams;

/// The dimensionless long-time profile of the double-jump rate.
pub fn g_function(tau: f64) -> f64 {
    ((-3.0 * tau).exp()
        + (-2.0 * tau).exp() * (2.0 * tau - 5.0)
        + (-tau).exp() * (4.0 * tau * tau - 2.0 * tau + 7.0))
        / 3.0
        - 1.0
}

#[derive(Debug, Clone, Serialize)]
pub struct EternalNmReport {
    pub lambda_over_gamma0: f64,
    pub g_at_zero: f64,
    /// `G` at the last grid point (tends to -1).
    pub g_tail: f64,
    pub g_all_negative: bool,
    /// Exact double-jump rate negative at every sampled time.
    pub gamma3_all_negative: bool,
    /// Worst sampled `gamma3` (most positive), for reporting.
    pub gamma3_worst: f64,
    /// `|gamma3 - 3 (gamma0^6/lambda^5) G| / |...G|` at `tau = 1`.
    pub residual_at_unit_tau: f64,
}

/// Samples `G` and the exact rate on a dimensionless `tau = lambda t` grid.
pub fn eternal_nm_check(
    p: &SystemParams,
    tau_grid: &[f64],
) -> Result<EternalNmReport, AnalysisError> {
    p.validate().map_err(AnalysisError::Model)?;
    let pp = build_pair_propagators(p)?;
    let gm = pair_gamma_matrix(&pp);
    let prefactor = 3.0 * p.gamma0.powi(6) / p.lambda.powi(5);

    let mut g_all_negative = true;
    let mut gamma3_all_negative = true;
    let mut gamma3_worst = f64::MIN;
    let mut g_tail = 0.0;
    for &tau in tau_grid {
        let g = g_function(tau);
        g_tail = g;
        if tau > 0.0 && g >= 0.0 {
            g_all_negative = false;
        }
        let t = tau / p.lambda;
        let (_, _, gamma3) = gm.canonical_rates(t)?;
        gamma3_worst = gamma3_worst.max(gamma3);
        if tau > 0.0 && gamma3 >= 0.0 {
            gamma3_all_negative = false;
        }
    }

    let tau_probe = 1.0;
    let leading = prefactor * g_function(tau_probe);
    let (_, _, exact) = gm.canonical_rates(tau_probe / p.lambda)?;
    let residual_at_unit_tau = ((exact - leading) / leading).abs();

    Ok(EternalNmReport {
        lambda_over_gamma0: p.lambda / p.gamma0,
        g_at_zero: g_function(0.0),
        g_tail,
        g_all_negative,
        gamma3_all_negative,
        gamma3_worst,
        residual_at_unit_tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const G0: f64 = 1e-3;

    #[test]
    fn g_boundary_values() {
        assert_eq!(g_function(0.0), 0.0);
        assert!((g_function(40.0) + 1.0).abs() < 1e-12);
        // Small-argument behaviour ~ -tau^5/18.
        let tau: f64 = 0.01;
        let expect = -tau.powi(5) / 18.0;
        assert!((g_function(tau) - expect).abs() < 0.1 * expect.abs(), "{}", g_function(tau));
    }

    #[test]
    fn g_is_strictly_negative_beyond_the_origin() {
        for k in 1..=1000 {
            let tau = 0.02 + (20.0 - 0.02) * k as f64 / 1000.0;
            assert!(g_function(tau) < 0.0, "tau={tau}");
        }
    }

    #[test]
    fn exact_rate_approaches_the_wide_reservoir_profile() {
        let p = SystemParams::new(2, G0, 10.0 * G0);
        let grid: Vec<f64> = (1..=100).map(|k| 0.05 + 19.95 * k as f64 / 100.0).collect();
        let report = eternal_nm_check(&p, &grid).unwrap();
        assert!(report.g_all_negative);
        assert!(report.gamma3_all_negative, "worst gamma3 {}", report.gamma3_worst);
        // At lambda = 10 gamma0 the leading-order profile is accurate to a
        // couple of percent.
        assert!(report.residual_at_unit_tau < 0.05, "{}", report.residual_at_unit_tau);
    }

    #[test]
    fn residual_scales_with_the_width_squared() {
        let grid = [1.0];
        let r10 = eternal_nm_check(&SystemParams::new(2, G0, 10.0 * G0), &grid)
            .unwrap()
            .residual_at_unit_tau;
        let r312 = eternal_nm_check(&SystemParams::new(2, G0, 10.0 * 10f64.sqrt() * G0), &grid)
            .unwrap()
            .residual_at_unit_tau;
        let shrink = r10 / r312;
        assert!(
            shrink > 10.0 / 3.0 && shrink < 30.0,
            "residuals {r10:.3e} -> {r312:.3e} (ratio {shrink:.2})"
        );
    }
}

//! Complete closed-form solution for two atoms.
//!
//! The two-excitation amplitude `zeta(t)` obeys the third-order equation
//! `zeta''' + 3 lambda zeta'' + (2 lambda^2 + 3 gamma0^2) zeta'
//!  + 2 lambda gamma0^2 zeta = 0` with `zeta(0) = 1`, `zeta'(0) = 0`,
//! `zeta''(0) = -gamma0^2`; its characteristic roots are the eigenvalues of
//! the companion matrix of
//! `P(z) = z^3 + 3 lambda z^2 + (2 lambda^2 + 3 gamma0^2) z
//!  + 2 lambda gamma0^2`. The one-excitation amplitude `upsilon(t)` and the
//! auxiliary kernels `eta(t)`, `phi(t)` are damped second-order solutions
//! with frequencies `sqrt(lambda^2 - 4 gamma0^2)` and
//! `sqrt(lambda^2 - 8 gamma0^2)`.
//!
//! The populations of the Dicke ladder involve two overlap integrals:
//!
//! `I1(t) = gamma0^2 iint upsilon(t') K(t',t'')
//!          [upsilon(t-t'') zeta(t'') + eta(t-t'') zeta'(t'')]`
//! `I2(t) = gamma0^2 iint S_t(t') K(t',t'') S_t(t'')`,
//!
//! with `K = e^{-lambda |t'-t''|}` and
//! `S_t(s) = upsilon(t-s) zeta(s) + eta(t-s) zeta'(s)`, both over `[0,t]^2`.
//! Expanding the `t - s` arguments turns each into a finite combination of
//! kernel double integrals of exponential sums, so `I1` and `I2` are
//! themselves exponential sums in `t` and all their derivatives are exact.
//!
//! From the all-excited state the populations are `p2 = zeta^2`, `p1 = I2`,
//! and the exact time-local master equation on the Dicke ladder has the four
//! nonzero coefficients
//!
//! `G22 = -2 upsilon'/upsilon`
//! `G11 = -[2 (upsilon'/upsilon) I2 - I2'] / zeta^2`
//! `G33 = +[2 (upsilon'/upsilon) I2 - I2'] / zeta^2 - 2 zeta'/zeta`
//! `G12 = [I1' - (upsilon'/upsilon) I1] / (zeta upsilon)`
//!
//! attached to the lowering jumps `|1><2|`, `|0><1|`, `|0><2|`.

use num_complex::Complex64;

use crate::error::AnalyticError;
use crate::expsum::{ExpSum, Term};
use crate::model::{real_part_checked, IntensityTrace, SolverPath, SystemParams, TraceMeta};

/// Propagators vanish here for the purpose of coefficient evaluation
/// (they are normalized to 1 at t = 0).
const ZERO_GUARD: f64 = 1e-12;

/// Scale-relative residual bound for the polished characteristic roots.
const ROOT_RESIDUAL_TOL: f64 = 1e-10;

/// Roots closer than this (relative to their magnitude) count as collided.
const ROOT_COLLISION_REL: f64 = 1e-7;

/// `lambda / gamma0` at which two characteristic roots coincide:
/// `sqrt( (3/2) (2 + cbrt(3 - 2 sqrt 2) + cbrt(3 + 2 sqrt 2)) )`.
pub fn degenerate_width_ratio() -> f64 {
    let s = 2.0 * 2f64.sqrt();
    (1.5 * (2.0 + (3.0 - s).cbrt() + (3.0 + s).cbrt())).sqrt()
}

/// All closed-form material of the two-atom solution.
#[derive(Debug, Clone)]
pub struct PairPropagators {
    pub params: SystemParams,
    /// Characteristic roots of the two-excitation amplitude.
    pub roots: [Complex64; 3],
    /// One-excitation amplitude `upsilon(t)`.
    pub upsilon: ExpSum,
    pub upsilon_dot: ExpSum,
    /// Two-excitation amplitude `zeta(t)`.
    pub zeta: ExpSum,
    pub zeta_dot: ExpSum,
    /// Memory kernel `eta(t)` (zero at t = 0, unit slope).
    pub eta: ExpSum,
    /// Two-excitation resolvent kernel `phi(t)`.
    pub phi: ExpSum,
    /// Overlap integrals `I1(t)`, `I2(t)` and their derivatives.
    pub overlap1: ExpSum,
    pub overlap1_dot: ExpSum,
    pub overlap2: ExpSum,
    pub overlap2_dot: ExpSum,
    /// `<n>(t) = 2 zeta^2 + I2` from the all-excited state.
    excitation: ExpSum,
    /// `I(t) = -omega0 d<n>/dt`.
    intensity: ExpSum,
}

fn cubic_coefficients(p: &SystemParams) -> (f64, f64, f64) {
    let g2 = p.gamma0 * p.gamma0;
    (3.0 * p.lambda, 2.0 * p.lambda * p.lambda + 3.0 * g2, 2.0 * p.lambda * g2)
}

fn poly_eval(z: Complex64, a: f64, b: f64, c: f64) -> Complex64 {
    ((z + a) * z + b) * z + c
}

/// Companion-matrix eigenvalues of `z^3 + a z^2 + b z + c`, each polished by
/// two Newton iterations.
fn cubic_roots(p: &SystemParams) -> Result<[Complex64; 3], AnalyticError> {
    let (a, b, c) = cubic_coefficients(p);
    let companion = nalgebra::Matrix3::new(0.0, 0.0, -c, 1.0, 0.0, -b, 0.0, 1.0, -a);
    let eig = companion.complex_eigenvalues();
    let mut roots = [eig[0], eig[1], eig[2]];
    for z in &mut roots {
        for _ in 0..2 {
            let f = poly_eval(*z, a, b, c);
            let df = (3.0 * *z + 2.0 * a) * *z + b;
            if df.norm() > 0.0 {
                *z -= f / df;
            }
        }
        let scale = z.norm().powi(3) + a * z.norm().powi(2) + b.abs() * z.norm() + c.abs();
        let residual = poly_eval(*z, a, b, c).norm() / scale.max(f64::MIN_POSITIVE);
        if residual > ROOT_RESIDUAL_TOL {
            return Err(AnalyticError::RootResidual { root: *z, residual });
        }
    }
    let scale = roots.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    for i in 0..3 {
        for j in (i + 1)..3 {
            if (roots[i] - roots[j]).norm() < ROOT_COLLISION_REL * scale {
                return Err(AnalyticError::DegenerateParameters {
                    critical_lambda: degenerate_width_ratio(),
                });
            }
        }
    }
    // Canonical order: by real part, slowest decay first.
    roots.sort_by(|x, y| (y.re, y.im).partial_cmp(&(x.re, x.im)).expect("finite roots"));
    Ok(roots)
}

/// Splits every term `c (t-s)^p e^{mu (t-s)}` of `f(t - s)` into a pure
/// `t`-dependent factor and an exponential sum in `s`.
fn shifted_decomposition(f: &ExpSum) -> Vec<(Term, ExpSum)> {
    fn binomial(n: u32, k: u32) -> f64 {
        let mut acc = 1.0;
        for i in 0..k {
            acc = acc * (n - i) as f64 / (i + 1) as f64;
        }
        acc
    }
    let mut out = Vec::new();
    for term in f.terms() {
        for q in 0..=term.power {
            let sign = if (term.power - q) % 2 == 0 { 1.0 } else { -1.0 };
            let t_part = Term {
                coeff: term.coeff * binomial(term.power, q),
                power: q,
                rate: term.rate,
            };
            let s_part = ExpSum::from_terms(vec![Term {
                coeff: Complex64::new(sign, 0.0),
                power: term.power - q,
                rate: -term.rate,
            }]);
            out.push((t_part, s_part));
        }
    }
    out
}

/// Builds every propagator and overlap integral for the given parameters.
pub fn build_pair_propagators(p: &SystemParams) -> Result<PairPropagators, AnalyticError> {
    p.validate()?;
    let g2 = p.gamma0 * p.gamma0;
    let freqs = p.derived_frequencies();
    let l = Complex64::new(p.lambda, 0.0);

    let upsilon = ExpSum::from_second_order_ode(
        0.5 * (-l + freqs.omega),
        0.5 * (-l - freqs.omega),
        Complex64::ONE,
        Complex64::ZERO,
    );
    let eta = ExpSum::from_second_order_ode(
        0.5 * (-l + freqs.omega),
        0.5 * (-l - freqs.omega),
        Complex64::ZERO,
        Complex64::ONE,
    );
    let phi = ExpSum::from_second_order_ode(
        0.5 * (-l + freqs.omega_tilde),
        0.5 * (-l - freqs.omega_tilde),
        Complex64::ONE,
        Complex64::ZERO,
    );

    let roots = cubic_roots(p)?;
    let mut zeta_terms = Vec::with_capacity(3);
    for i in 0..3 {
        let (zj, zk) = (roots[(i + 1) % 3], roots[(i + 2) % 3]);
        let zi = roots[i];
        let coeff = (zj * zk - g2) / ((zi - zj) * (zi - zk));
        zeta_terms.push(Term { coeff, power: 0, rate: zi });
    }
    let zeta = ExpSum::from_terms(zeta_terms);
    let zeta_dot = zeta.derivative();

    // Initial-condition checks of the assembled propagators.
    let checks = [
        (upsilon.eval(0.0) - Complex64::ONE, "upsilon(0) = 1"),
        (zeta.eval(0.0) - Complex64::ONE, "zeta(0) = 1"),
        (phi.eval(0.0) - Complex64::ONE, "phi(0) = 1"),
        (eta.eval(0.0), "eta(0) = 0"),
        (zeta_dot.eval(0.0), "zeta'(0) = 0"),
        (
            zeta_dot.derivative().eval(0.0) + Complex64::new(g2, 0.0),
            "zeta''(0) = -gamma0^2",
        ),
    ];
    for (residual, what) in checks {
        let scale = g2.max(1e-300);
        if residual.norm() > 1e-8 * scale.max(1.0) {
            return Err(AnalyticError::RootResidual {
                root: residual,
                residual: residual.norm() / scale.max(1.0),
            });
        }
        let _ = what;
    }

    // Memory-weighted source S_t(s) = upsilon(t-s) zeta(s) + eta(t-s) zeta'(s),
    // decomposed into (t-factor, s-sum) pairs.
    let mut source: Vec<(Term, ExpSum)> = Vec::new();
    for (t_part, s_part) in shifted_decomposition(&upsilon) {
        source.push((t_part, &s_part * &zeta));
    }
    for (t_part, s_part) in shifted_decomposition(&eta) {
        source.push((t_part, &s_part * &zeta_dot));
    }

    let g2c = Complex64::new(g2, 0.0);
    let mut overlap1 = ExpSum::zero();
    for (t_part, b) in &source {
        let d = ExpSum::kernel_double_integral(&upsilon, b, p.lambda);
        overlap1 = &overlap1 + &(&d * &ExpSum::from_terms(vec![*t_part]));
    }
    overlap1 = overlap1.scaled(g2c);

    // The kernel is symmetric, so distinct source pairs contribute twice.
    let mut overlap2 = ExpSum::zero();
    for (ia, (ta, ba)) in source.iter().enumerate() {
        for (ib, (tb, bb)) in source.iter().enumerate().skip(ia) {
            let d = ExpSum::kernel_double_integral(ba, bb, p.lambda);
            let tt = &ExpSum::from_terms(vec![*ta]) * &ExpSum::from_terms(vec![*tb]);
            let mut contrib = &d * &tt;
            if ib != ia {
                contrib = contrib.scaled(Complex64::new(2.0, 0.0));
            }
            overlap2 = &overlap2 + &contrib;
        }
    }
    overlap2 = overlap2.scaled(g2c);

    let overlap1_dot = overlap1.derivative();
    let overlap2_dot = overlap2.derivative();

    let zeta_sq = &zeta * &zeta;
    let excitation = &zeta_sq.scaled(Complex64::new(2.0, 0.0)) + &overlap2;
    let intensity = excitation.derivative().scaled(Complex64::new(-p.omega0, 0.0));

    Ok(PairPropagators {
        params: p.clone(),
        roots,
        upsilon_dot: upsilon.derivative(),
        upsilon,
        zeta,
        zeta_dot,
        eta,
        phi,
        overlap1,
        overlap1_dot,
        overlap2,
        overlap2_dot,
        excitation,
        intensity,
    })
}

impl PairPropagators {
    /// Overlap integrals `(I1(t), I2(t))`; both real by construction.
    pub fn overlap_integrals(&self, t: f64) -> Result<(f64, f64), AnalyticError> {
        let i1 = real_part_checked(self.overlap1.eval(t), 1.0)?;
        let i2 = real_part_checked(self.overlap2.eval(t), 1.0)?;
        Ok((i1, i2))
    }

    /// Radiated intensity from the all-excited state,
    /// `I(t) = -omega0 d/dt (2 zeta^2 + I2)`, via the analytic derivative.
    pub fn intensity(&self, t: f64) -> Result<f64, AnalyticError> {
        Ok(real_part_checked(
            self.intensity.eval(t),
            self.params.omega0 * self.params.gamma0,
        )?)
    }

    /// Total excitation `<n>(t) = 2 zeta^2 + I2` from the all-excited state.
    pub fn excitation(&self, t: f64) -> Result<f64, AnalyticError> {
        Ok(real_part_checked(self.excitation.eval(t), 1.0)?)
    }

    /// Dicke populations `(p2, p1, p0)` from the all-excited state.
    pub fn populations(&self, t: f64) -> Result<(f64, f64, f64), AnalyticError> {
        let z = real_part_checked(self.zeta.eval(t), 1.0)?;
        let p2 = z * z;
        let (_, p1) = self.overlap_integrals(t)?;
        Ok((p2, p1, 1.0 - p2 - p1))
    }

    /// Intensity and excitation on a uniform grid.
    pub fn intensity_trace(
        &self,
        t_end: f64,
        n_samples: usize,
    ) -> Result<IntensityTrace, AnalyticError> {
        let m = n_samples.max(2);
        let mut times = Vec::with_capacity(m);
        let mut intensity = Vec::with_capacity(m);
        let mut excitation = Vec::with_capacity(m);
        for k in 0..m {
            let t = t_end * k as f64 / (m - 1) as f64;
            times.push(t);
            intensity.push(self.intensity(t)?);
            excitation.push(self.excitation(t)?);
        }
        let mut params = self.params.clone();
        params.n_atoms = 2;
        Ok(IntensityTrace {
            times,
            intensity,
            excitation,
            meta: TraceMeta { solver: SolverPath::AnalyticPair, params },
        })
    }
}

/// The four nonzero master-equation coefficients as evaluators over `t`.
#[derive(Debug, Clone)]
pub struct GammaMatrix {
    pp: PairPropagators,
}

/// One sample of the coefficient matrix. `g12` doubles as `g21`; the
/// remaining off-diagonal entries vanish identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSample {
    pub g11: f64,
    pub g22: f64,
    pub g33: f64,
    pub g12: f64,
}

impl GammaSample {
    /// Canonical decay rates: eigenvalues of the coefficient matrix, the
    /// `+` root first so `gamma1 >= gamma2`; `gamma3` is the isolated
    /// double-jump rate.
    pub fn canonical_rates(&self) -> (f64, f64, f64) {
        let tr = self.g11 + self.g22;
        let disc = ((self.g11 - self.g22).powi(2) + 4.0 * self.g12 * self.g12).sqrt();
        (0.5 * (tr + disc), 0.5 * (tr - disc), self.g33)
    }

    /// Rates attached to the collective jump operators built from powers of
    /// the ladder operators: `J-`, `J-J-`, `J+J-J-`, `J-J-J+`.
    pub fn noncanonical_rates(&self) -> (f64, f64, f64, f64) {
        (self.g12, self.g33, self.g11 - self.g12, self.g22 - self.g12)
    }
}

/// Builds the coefficient evaluators from the propagators.
pub fn pair_gamma_matrix(pp: &PairPropagators) -> GammaMatrix {
    GammaMatrix { pp: pp.clone() }
}

impl GammaMatrix {
    /// Evaluates all four coefficients, or reports the singular flag where a
    /// propagator vanishes and the coefficients diverge.
    pub fn eval(&self, t: f64) -> Result<GammaSample, AnalyticError> {
        let pp = &self.pp;
        let u = pp.upsilon.eval(t);
        let z = pp.zeta.eval(t);
        if u.norm() < ZERO_GUARD || z.norm() < ZERO_GUARD {
            return Err(AnalyticError::SingularCoefficient { t });
        }
        let du_over_u = pp.upsilon_dot.eval(t) / u;
        let i1 = pp.overlap1.eval(t);
        let i1d = pp.overlap1_dot.eval(t);
        let i2 = pp.overlap2.eval(t);
        let i2d = pp.overlap2_dot.eval(t);
        let zd = pp.zeta_dot.eval(t);

        let x = (2.0 * du_over_u * i2 - i2d) / (z * z);
        let scale = pp.params.gamma0;
        let g22 = real_part_checked(-2.0 * du_over_u, scale)?;
        let g11 = real_part_checked(-x, scale)?;
        let g33 = real_part_checked(x - 2.0 * zd / z, scale)?;
        let g12 = real_part_checked((i1d - du_over_u * i1) / (z * u), scale)?;
        Ok(GammaSample { g11, g22, g33, g12 })
    }

    /// Canonical decay rates at `t`.
    pub fn canonical_rates(&self, t: f64) -> Result<(f64, f64, f64), AnalyticError> {
        Ok(self.eval(t)?.canonical_rates())
    }

    /// Non-canonical decay rates at `t`.
    pub fn noncanonical_rates(&self, t: f64) -> Result<(f64, f64, f64, f64), AnalyticError> {
        Ok(self.eval(t)?.noncanonical_rates())
    }

    pub fn propagators(&self) -> &PairPropagators {
        &self.pp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate_adaptive, IntegrateOptions, ObserverControl};
    use crate::testutil::simpson;

    const G0: f64 = 1e-3;

    fn params(lambda_over_g0: f64) -> SystemParams {
        SystemParams::new(2, G0, lambda_over_g0 * G0)
    }

    fn build(lambda_over_g0: f64) -> PairPropagators {
        build_pair_propagators(&params(lambda_over_g0)).unwrap()
    }

    #[test]
    fn roots_satisfy_vieta() {
        for &r in &[0.5, 0.9024, 5.0] {
            let p = params(r);
            let pp = build(r);
            let g2 = G0 * G0;
            let sum: Complex64 = pp.roots.iter().sum();
            let prod: Complex64 = pp.roots.iter().product();
            let pair = pp.roots[0] * pp.roots[1]
                + pp.roots[0] * pp.roots[2]
                + pp.roots[1] * pp.roots[2];
            assert!((sum + 3.0 * p.lambda).norm() < 1e-12 * p.lambda, "r={r}");
            assert!((pair - (2.0 * p.lambda * p.lambda + 3.0 * g2)).norm() < 1e-12 * g2);
            assert!((prod + 2.0 * p.lambda * g2).norm() < 1e-14 * p.lambda);
        }
    }

    #[test]
    fn degenerate_width_is_rejected_by_name() {
        let ratio = degenerate_width_ratio();
        let err = build_pair_propagators(&params(ratio)).unwrap_err();
        match err {
            AnalyticError::DegenerateParameters { critical_lambda } => {
                assert!((critical_lambda - ratio).abs() < 1e-12);
            }
            other => panic!("expected degenerate-parameters error, got {other}"),
        }
        // Slightly off the degenerate width everything works.
        assert!(build_pair_propagators(&params(ratio * 1.001)).is_ok());
    }

    #[test]
    fn zeta_solves_its_differential_equation() {
        for &r in &[0.5, 0.9024, 5.0] {
            let p = params(r);
            let pp = build(r);
            let g2 = G0 * G0;
            let d1 = pp.zeta.derivative();
            let d2 = d1.derivative();
            let d3 = d2.derivative();
            for k in 1..=40 {
                let t = k as f64 * 50.0; // up to 2 / gamma0
                let z3 = d3.eval(t);
                let z2 = d2.eval(t);
                let z1 = d1.eval(t);
                let z0 = pp.zeta.eval(t);
                let res = z3
                    + 3.0 * p.lambda * z2
                    + (2.0 * p.lambda * p.lambda + 3.0 * g2) * z1
                    + 2.0 * p.lambda * g2 * z0;
                let scale = z3.norm()
                    + 3.0 * p.lambda * z2.norm()
                    + (2.0 * p.lambda * p.lambda + 3.0 * g2) * z1.norm()
                    + 2.0 * p.lambda * g2 * z0.norm();
                assert!(res.norm() < 1e-8 * scale.max(1e-300), "r={r} t={t}");
            }
        }
    }

    #[test]
    fn overlap_integrals_start_at_zero_and_stay_real() {
        for &r in &[0.5, 0.9024, 5.0] {
            let pp = build(r);
            let (i1, i2) = pp.overlap_integrals(0.0).unwrap();
            assert!(i1.abs() < 1e-12 && i2.abs() < 1e-12, "r={r}");
            assert!(pp.overlap2_dot.eval(0.0).norm() < 1e-12);
            for &t in &[0.3 / G0, 1.0 / G0, 5.0 / G0] {
                let (a, b) = pp.overlap_integrals(t).unwrap();
                assert!(a.is_finite() && b.is_finite());
                assert!(pp.overlap1.eval(t).im.abs() < 1e-9);
                assert!(pp.overlap2.eval(t).im.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn overlap2_matches_double_quadrature() {
        // Independent route: iterated adaptive quadrature of the defining
        // double integral, evaluating the propagators pointwise.
        let pp = build(0.9024);
        let p = &pp.params;
        for &t in &[1.0 / G0, 5.0 / G0] {
            let s_fun = |s: f64| {
                pp.upsilon.eval(t - s) * pp.zeta.eval(s)
                    + pp.eta.eval(t - s) * pp.zeta_dot.eval(s)
            };
            let outer = |tp: f64| {
                let sp = s_fun(tp);
                let inner = |ts: f64| s_fun(ts) * (-p.lambda * (tp - ts).abs()).exp();
                sp * simpson(&inner, 0.0, t, 1e-13)
            };
            let direct = G0 * G0 * simpson(&outer, 0.0, t, 1e-12).re;
            let (_, i2) = pp.overlap_integrals(t).unwrap();
            assert!(
                (i2 - direct).abs() < 1e-7 * direct.abs().max(1e-12),
                "t={t}: closed {i2} vs quadrature {direct}"
            );
        }
    }

    #[test]
    fn overlap1_matches_double_quadrature() {
        let pp = build(1.7);
        let p = &pp.params;
        let t = 2.0 / G0;
        let s_fun = |s: f64| {
            pp.upsilon.eval(t - s) * pp.zeta.eval(s) + pp.eta.eval(t - s) * pp.zeta_dot.eval(s)
        };
        let outer = |tp: f64| {
            let inner = |ts: f64| s_fun(ts) * (-p.lambda * (tp - ts).abs()).exp();
            pp.upsilon.eval(tp) * simpson(&inner, 0.0, t, 1e-13)
        };
        let direct = G0 * G0 * simpson(&outer, 0.0, t, 1e-12).re;
        let (i1, _) = pp.overlap_integrals(t).unwrap();
        assert!(
            (i1 - direct).abs() < 1e-7 * direct.abs().max(1e-12),
            "closed {i1} vs quadrature {direct}"
        );
    }

    #[test]
    fn intensity_starts_at_zero_and_two_quanta_leave() {
        for &r in &[0.9024, 5.0] {
            let pp = build(r);
            assert!(pp.intensity(0.0).unwrap().abs() < 1e-15, "r={r}");
            // Trapezoid quadrature of I(t) over a long horizon -> 2 omega0.
            let gm = G0 * G0 / pp.params.lambda;
            let t_end = 40.0 / gm;
            let n = 400_000;
            let mut acc = 0.0;
            let mut prev = 0.0;
            for k in 1..=n {
                let t = t_end * k as f64 / n as f64;
                let cur = pp.intensity(t).unwrap();
                acc += 0.5 * (prev + cur) * (t_end / n as f64);
                prev = cur;
            }
            assert!((acc - 2.0).abs() < 2e-3, "r={r}: emitted {acc}");
        }
    }

    #[test]
    fn populations_stay_physical() {
        for &r in &[0.5, 0.9024, 5.0] {
            let pp = build(r);
            let t_end = 30.0 * pp.params.lambda / (G0 * G0);
            for k in 0..=400 {
                let t = t_end * k as f64 / 400.0;
                let (p2, p1, p0) = pp.populations(t).unwrap();
                assert!((-1e-9..=1.0 + 1e-9).contains(&p2), "r={r} t={t} p2={p2}");
                assert!((-1e-9..=1.0 + 1e-9).contains(&p1), "r={r} t={t} p1={p1}");
                assert!((-1e-9..=1.0 + 1e-9).contains(&p0), "r={r} t={t} p0={p0}");
            }
        }
    }

    #[test]
    fn gamma22_is_the_single_atom_rate_with_boosted_coupling() {
        // The one-excitation amplitude sees the collective coupling
        // sqrt(2) gamma0, so G22 equals the single-atom rate after that
        // substitution; it is positive at all times once lambda exceeds
        // twice gamma0.
        let pp = build(5.0);
        let g = pair_gamma_matrix(&pp);
        let boosted = SystemParams::new(1, 2f64.sqrt() * G0, 5.0 * G0);
        for k in 1..=60 {
            let t = k as f64 * 50.0;
            let sample = g.eval(t).unwrap();
            let reference = crate::analytic::single_decay_rate(&boosted, t).unwrap();
            assert!(
                (sample.g22 - reference).abs() < 1e-10 * reference.abs().max(1e-12),
                "t={t}: {} vs {}",
                sample.g22,
                reference
            );
            assert!(sample.g22 > 0.0);
        }
        // Below twice gamma0 the one-excitation amplitude oscillates through
        // zero and the rate turns negative between pole and node.
        let pp = build(1.5);
        let g = pair_gamma_matrix(&pp);
        let w = pp.params.derived_frequencies().omega.im.abs();
        let mut saw_negative = false;
        for k in 1..=2000 {
            let t = k as f64 * (4.0 * std::f64::consts::PI / w) / 2000.0;
            if let Ok(s) = g.eval(t) {
                saw_negative |= s.g22 < 0.0;
            }
        }
        assert!(saw_negative);
    }

    #[test]
    fn gamma_matrix_reproduces_the_exact_solution_when_reintegrated() {
        // Propagating the time-local master equation with the evaluated
        // coefficients must reproduce the closed-form state, including the
        // coherence fed by the off-diagonal coefficient. Initial state
        // (|2> + |1> + |0>)/sqrt(3).
        let pp = build(5.0);
        let g = pair_gamma_matrix(&pp);
        let t_end = 1.5 * pp.params.lambda / (G0 * G0);

        // rho stored row-major over the Dicke basis (|0>, |1>, |2>).
        let third = Complex64::new(1.0 / 3.0, 0.0);
        let mut rho = vec![third; 9];
        let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            let s = g.eval(t).expect("smooth coefficients at lambda = 5 gamma0");
            let r = |i: usize, j: usize| y[3 * i + j];
            // Gains.
            let mut out = [[Complex64::ZERO; 3]; 3];
            out[1][1] += s.g11 * r(2, 2);
            out[0][0] += s.g22 * r(1, 1);
            out[0][0] += s.g33 * r(2, 2);
            out[0][1] += s.g12 * r(1, 2);
            out[1][0] += s.g12 * r(2, 1);
            // Anticommutator losses: L1+L1 = |2><2|, L2+L2 = |1><1|,
            // L3+L3 = |2><2|; the g12 cross products vanish.
            let w2 = 0.5 * (s.g11 + s.g33);
            let w1 = 0.5 * s.g22;
            for j in 0..3 {
                out[2][j] -= w2 * r(2, j);
                out[j][2] -= w2 * r(j, 2);
                out[1][j] -= w1 * r(1, j);
                out[j][1] -= w1 * r(j, 1);
            }
            for i in 0..3 {
                for j in 0..3 {
                    dy[3 * i + j] = out[i][j];
                }
            }
        };
        let opts = IntegrateOptions { abs_tol: 1e-11, rel_tol: 1e-11, ..Default::default() };
        integrate_adaptive(rhs, 0.0, t_end, &mut rho, &[], &opts, |_, _, _| {
            ObserverControl::Continue
        })
        .unwrap();

        let t = t_end;
        let z = pp.zeta.eval(t).re;
        let u = pp.upsilon.eval(t).re;
        let (i1, i2) = pp.overlap_integrals(t).unwrap();
        let expect_p2 = z * z / 3.0;
        let expect_p1 = (u * u + i2) / 3.0;
        let expect_rho21 = z * u / 3.0;
        let expect_rho20 = z / 3.0;
        let expect_rho10 = (u + i1) / 3.0;

        let r = |i: usize, j: usize| rho[3 * i + j];
        assert!((r(2, 2).re - expect_p2).abs() < 1e-6, "p2 {} vs {}", r(2, 2).re, expect_p2);
        assert!((r(1, 1).re - expect_p1).abs() < 1e-6, "p1 {} vs {}", r(1, 1).re, expect_p1);
        assert!((r(2, 1).re - expect_rho21).abs() < 1e-6);
        assert!((r(2, 0).re - expect_rho20).abs() < 1e-6);
        assert!((r(1, 0).re - expect_rho10).abs() < 1e-6, "{} vs {}", r(1, 0).re, expect_rho10);
        // Trace preserved.
        let tr = r(0, 0).re + r(1, 1).re + r(2, 2).re;
        assert!((tr - 1.0).abs() < 1e-8);
    }

    #[test]
    fn populations_from_all_excited_follow_the_same_master_equation() {
        let pp = build(5.0);
        let g = pair_gamma_matrix(&pp);
        let t_end = 1.0 * pp.params.lambda / (G0 * G0);
        let mut pops = vec![Complex64::ZERO; 3]; // (p2, p1, p0)
        pops[0] = Complex64::ONE;
        let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            let s = g.eval(t).expect("smooth");
            dy[0] = -(s.g11 + s.g33) * y[0];
            dy[1] = s.g11 * y[0] - s.g22 * y[1];
            dy[2] = s.g22 * y[1] + s.g33 * y[0];
        };
        let opts = IntegrateOptions { abs_tol: 1e-11, rel_tol: 1e-11, ..Default::default() };
        integrate_adaptive(rhs, 0.0, t_end, &mut pops, &[], &opts, |_, _, _| {
            ObserverControl::Continue
        })
        .unwrap();
        let (p2, p1, p0) = pp.populations(t_end).unwrap();
        assert!((pops[0].re - p2).abs() < 1e-6);
        assert!((pops[1].re - p1).abs() < 1e-6);
        assert!((pops[2].re - p0).abs() < 1e-6);
    }

    #[test]
    fn collective_lowering_rate_is_positive_in_all_three_regimes() {
        // The rate attached to the plain collective lowering operator stays
        // positive below, at, and above the critical width.
        for &r in &[0.5, 0.9024, 5.0] {
            let pp = build(r);
            let g = pair_gamma_matrix(&pp);
            let t_end = 20.0 / (G0 * 2f64.sqrt());
            let mut checked = 0;
            for k in 1..=3000 {
                let t = t_end * k as f64 / 3000.0;
                if let Ok(s) = g.eval(t) {
                    let (g1t, ..) = s.noncanonical_rates();
                    // Skip samples blown up by a nearby propagator zero.
                    if g1t.abs() > 1e4 * G0 {
                        continue;
                    }
                    assert!(g1t > -1e-12 * G0, "r={r} t={t}: {g1t}");
                    checked += 1;
                }
            }
            assert!(checked > 2000, "r={r}: only {checked} regular samples");
        }
    }

    #[test]
    fn canonical_rates_keep_trace_and_determinant() {
        let pp = build(0.9024);
        let g = pair_gamma_matrix(&pp);
        for k in 1..=50 {
            let t = k as f64 * 20.0;
            if let Ok(s) = g.eval(t) {
                let (g1, g2t, g3) = s.canonical_rates();
                assert!(g1 >= g2t);
                assert!((g1 + g2t - (s.g11 + s.g22)).abs() < 1e-12 * (g1.abs() + g2t.abs()));
                let det = s.g11 * s.g22 - s.g12 * s.g12;
                assert!((g1 * g2t - det).abs() < 1e-9 * det.abs().max(1e-20));
                assert_eq!(g3, s.g33);
            }
        }
    }

    #[test]
    fn gamma3_is_negative_at_large_widths() {
        // Long-time negativity of the double-jump rate at lambda = 10 gamma0.
        let pp = build(10.0);
        let g = pair_gamma_matrix(&pp);
        for k in 1..=200 {
            let tau = 20.0 * k as f64 / 200.0; // dimensionless lambda * t
            let t = tau / pp.params.lambda;
            let (_, _, g3) = g.canonical_rates(t).unwrap();
            assert!(g3 < 0.0, "tau={tau}: gamma3 = {g3}");
        }
    }
}

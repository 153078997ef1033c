//! Exact algebra over finite sums `f(t) = sum_k c_k t^{p_k} e^{mu_k t}` with
//! complex coefficients and exponents.
//!
//! Every closed-form propagator of the two-atom solution, and every nested
//! integral built from them, stays inside this class: products map onto it,
//! definite integrals `int_0^t` map onto it, and the double integral against
//! the memory kernel `e^{-lambda |t' - t''|}` maps onto it after splitting the
//! square integration domain into its two ordered triangles. Polynomial
//! prefactors (`p_k > 0`) appear only when exponents collide, e.g. at the
//! degenerate spectral widths where two characteristic roots meet.

use num_complex::Complex64;

/// Relative tolerance for treating two exponents as equal. Scaled by the
/// largest exponent magnitude in the sum; below this, double-precision root
/// separation is not trustworthy.
pub const EPS_MERGE_REL: f64 = 1e-10;

/// Highest polynomial power that can legitimately appear; anything beyond
/// signals a logic error upstream.
const MAX_POWER: u32 = 8;

/// One term `coeff * t^power * exp(rate * t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub power: u32,
    pub rate: Complex64,
}

/// A merged, canonically ordered exponential sum.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpSum {
    terms: Vec<Term>,
}

impl ExpSum {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_terms(vec![Term { coeff: c, power: 0, rate: Complex64::ZERO }])
    }

    /// Single pure-exponential term `c e^{mu t}`.
    pub fn exponential(coeff: Complex64, rate: Complex64) -> Self {
        Self::from_terms(vec![Term { coeff, power: 0, rate }])
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        let mut s = Self { terms };
        s.normalize();
        s
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Tolerance under which two exponents of this sum are considered equal.
    pub fn eps_merge(&self) -> f64 {
        let max_rate = self
            .terms
            .iter()
            .map(|t| t.rate.norm())
            .fold(0.0_f64, f64::max);
        EPS_MERGE_REL * max_rate
    }

    /// Solution of `f'' - (r1 + r2) f' + r1 r2 f = 0` with `f(0) = f0`,
    /// `f'(0) = fdot0`; falls back to the confluent form `(a + b t) e^{r t}`
    /// when the two rates coincide.
    pub fn from_second_order_ode(
        r1: Complex64,
        r2: Complex64,
        f0: Complex64,
        fdot0: Complex64,
    ) -> Self {
        let scale = r1.norm().max(r2.norm());
        if (r1 - r2).norm() <= EPS_MERGE_REL * scale {
            let r = (r1 + r2) * 0.5;
            Self::from_terms(vec![
                Term { coeff: f0, power: 0, rate: r },
                Term { coeff: fdot0 - r * f0, power: 1, rate: r },
            ])
        } else {
            let c1 = (fdot0 - r2 * f0) / (r1 - r2);
            let c2 = (r1 * f0 - fdot0) / (r1 - r2);
            Self::from_terms(vec![
                Term { coeff: c1, power: 0, rate: r1 },
                Term { coeff: c2, power: 0, rate: r2 },
            ])
        }
    }

    fn normalize(&mut self) {
        self.terms.retain(|t| t.coeff != Complex64::ZERO);
        let eps = self.eps_merge();
        self.terms.sort_by(|a, b| {
            (a.rate.re, a.rate.im, a.power)
                .partial_cmp(&(b.rate.re, b.rate.im, b.power))
                .expect("exponents are finite")
        });
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            debug_assert!(t.power <= MAX_POWER, "runaway polynomial power {}", t.power);
            match merged
                .iter_mut()
                .find(|m| m.power == t.power && (m.rate - t.rate).norm() <= eps)
            {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != Complex64::ZERO);
        self.terms = merged;
    }

    /// `sum_k c_k t^{p_k} e^{mu_k t}`.
    pub fn eval(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for term in &self.terms {
            acc += term.coeff * t.powi(term.power as i32) * (term.rate * t).exp();
        }
        acc
    }

    /// Evaluation of a sum known to be real-valued; the imaginary residue is
    /// returned alongside so callers can enforce their own bound.
    pub fn eval_real_unchecked(&self, t: f64) -> (f64, f64) {
        let z = self.eval(t);
        (z.re, z.im)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| Term { coeff: t.coeff * c, ..*t })
                .collect(),
        )
    }

    /// Multiplication by `e^{delta t}` (shifts every exponent).
    pub fn rate_shifted(&self, delta: Complex64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| Term { rate: t.rate + delta, ..*t })
                .collect(),
        )
    }

    /// Term-by-term derivative.
    pub fn derivative(&self) -> Self {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            out.push(Term { coeff: t.coeff * t.rate, ..*t });
            if t.power > 0 {
                out.push(Term {
                    coeff: t.coeff * t.power as f64,
                    power: t.power - 1,
                    rate: t.rate,
                });
            }
        }
        Self::from_terms(out)
    }

    /// The definite integral `F(t) = int_0^t f(s) ds` as an exponential sum
    /// (so `F(0) = 0`). Exponents within the merge tolerance of zero take the
    /// polynomial limit `t^{p+1}/(p+1)`.
    pub fn integrate_0_to_t(&self) -> Self {
        let eps = self.eps_merge();
        let mut out: Vec<Term> = Vec::new();
        for t in &self.terms {
            if t.rate.norm() <= eps {
                out.push(Term {
                    coeff: t.coeff / (t.power + 1) as f64,
                    power: t.power + 1,
                    rate: Complex64::ZERO,
                });
            } else {
                // int_0^t s^p e^{mu s} ds = t^p e^{mu t}/mu - (p/mu) I_{p-1},
                // unrolled down to I_0 = (e^{mu t} - 1)/mu.
                let mu = t.rate;
                let mut factor = t.coeff;
                for p in (1..=t.power).rev() {
                    out.push(Term { coeff: factor / mu, power: p, rate: mu });
                    factor = -factor * p as f64 / mu;
                }
                out.push(Term { coeff: factor / mu, power: 0, rate: mu });
                out.push(Term { coeff: -factor / mu, power: 0, rate: Complex64::ZERO });
            }
        }
        Self::from_terms(out)
    }

    /// The double integral of `f(t') e^{-lambda |t' - t''|} g(t'')` over the
    /// square `[0, t]^2`, as an exponential sum in `t`.
    ///
    /// The absolute value is removed by splitting the square into the two
    /// ordered triangles `t' <= t''` and `t'' <= t'`, each of which reduces to
    /// two nested one-dimensional integrals.
    pub fn kernel_double_integral(f: &ExpSum, g: &ExpSum, lambda: f64) -> Self {
        let l = Complex64::new(lambda, 0.0);
        let triangle = |outer: &ExpSum, inner: &ExpSum| -> ExpSum {
            let inner_cum = inner.rate_shifted(l).integrate_0_to_t();
            (&outer.rate_shifted(-l) * &inner_cum).integrate_0_to_t()
        };
        &triangle(g, f) + &triangle(f, g)
    }

    /// Point evaluation of [`kernel_double_integral`](Self::kernel_double_integral).
    pub fn convolve_abs_kernel(f: &ExpSum, g: &ExpSum, lambda: f64, t: f64) -> Complex64 {
        debug_assert!(lambda > 0.0 && t >= 0.0);
        Self::kernel_double_integral(f, g, lambda).eval(t)
    }

    /// Largest coefficient magnitude; the natural scale of the sum.
    pub fn coeff_scale(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff.norm())
            .fold(0.0_f64, f64::max)
    }
}

impl std::ops::Add for &ExpSum {
    type Output = ExpSum;
    fn add(self, rhs: &ExpSum) -> ExpSum {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&rhs.terms);
        ExpSum::from_terms(terms)
    }
}

impl std::ops::Sub for &ExpSum {
    type Output = ExpSum;
    fn sub(self, rhs: &ExpSum) -> ExpSum {
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().map(|t| Term { coeff: -t.coeff, ..*t }));
        ExpSum::from_terms(terms)
    }
}

impl std::ops::Mul for &ExpSum {
    type Output = ExpSum;
    fn mul(self, rhs: &ExpSum) -> ExpSum {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    power: a.power + b.power,
                    rate: a.rate + b.rate,
                });
            }
        }
        ExpSum::from_terms(terms)
    }
}

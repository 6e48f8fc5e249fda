//! f_ε(v) = |v|^{p-1}v / ln(e+|v|)^ε and g_ε(u) likewise with q, plus
//! pointwise checks of the growth inequalities they satisfy.

use serde::{Deserialize, Serialize};

use crate::exponents::CriticalExponents;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub exps: CriticalExponents,
    pub epsilon: f64,
}

/// |x|^{s-1}x / ln(e+|x|)^ε and its derivative.
pub fn power_log(s: f64, eps: f64, x: f64) -> (f64, f64) {
    let a = x.abs();
    if a == 0.0 {
        return (0.0, 0.0);
    }
    let l = (std::f64::consts::E + a).ln();
    let damp = (-eps * l.ln()).exp();
    let base = a.powf(s - 1.0) * damp;
    let val = base * x;
    let der = base * (s - eps * a / ((std::f64::consts::E + a) * l));
    (val, der)
}

impl Nonlinearity {
    pub fn new(exps: CriticalExponents, epsilon: f64) -> Self {
        Nonlinearity { exps, epsilon }
    }

    /// f_ε(v) and f_ε'(v).
    pub fn f(&self, v: f64) -> (f64, f64) {
        power_log(self.exps.p, self.epsilon, v)
    }

    /// g_ε(u) and g_ε'(u).
    pub fn g(&self, u: f64) -> (f64, f64) {
        power_log(self.exps.q, self.epsilon, u)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthViolations {
    pub value_gap: usize,
    pub derivative_bound: usize,
    pub derivative_gap: usize,
    pub samples: usize,
}

impl GrowthViolations {
    pub fn total(&self) -> usize {
        self.value_gap + self.derivative_bound + self.derivative_gap
    }
}

/// Checks at one point, for exponent s:
///   (i)   |f_ε - f₀| ≤ ε|u|^s ln ln(e+|u|)
///   (ii)  |f_ε'| ≤ s|u|^{s-1}
///   (iii) |f_ε' - f₀'| ≤ ε|u|^{s-1}(s ln ln(e+|u|) + 1/ln(e+|u|))
/// The differences are formed without cancellation so that rounding does
/// not decide the outcome near u = 0.
pub fn growth_checks(s: f64, eps: f64, u: f64) -> [bool; 3] {
    let a = u.abs();
    if a == 0.0 {
        return [true; 3];
    }
    let l = (std::f64::consts::E + a).ln();
    let ll = l.ln();
    let pw = a.powf(s);
    let pw1 = a.powf(s - 1.0);
    // L^{-ε} - 1
    let dm1 = (-eps * ll).exp_m1();
    let damp = 1.0 + dm1;
    let gap = pw * dm1.abs();
    let (_, der) = power_log(s, eps, u);
    let tail = eps * a / ((std::f64::consts::E + a) * l);
    let dgap = (pw1 * (s * dm1 - damp * tail)).abs();
    let slack = 1.0 + 4.0 * f64::EPSILON;
    [
        gap <= eps * pw * ll * slack,
        der.abs() <= s * pw1 * slack,
        dgap <= eps * pw1 * (s * ll + 1.0 / l) * slack,
    ]
}

/// Runs the checks for f (s = p) and g (s = q) on `samples` points whose
/// magnitudes are spread log-uniformly over [1e-8, 1e12] by a golden-ratio
/// sequence, with alternating signs.
pub fn growth_suite(nl: &Nonlinearity, samples: usize) -> GrowthViolations {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut out = GrowthViolations { samples, ..Default::default() };
    for i in 0..samples {
        let frac = (i as f64 * phi).fract();
        let mag = 10f64.powf(-8.0 + 20.0 * frac);
        let u = if i % 2 == 0 { mag } else { -mag };
        for s in [nl.exps.p, nl.exps.q] {
            let c = growth_checks(s, nl.epsilon, u);
            out.value_gap += !c[0] as usize;
            out.derivative_bound += !c[1] as usize;
            out.derivative_gap += !c[2] as usize;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::make_exponents;

    #[test]
    fn pure_power_at_zero_epsilon() {
        let nl = Nonlinearity::new(make_exponents(6, 1.2).unwrap(), 0.0);
        assert!((nl.f(2.0).0 - 2f64.powf(1.2)).abs() < 1e-15);
        assert_eq!(nl.f(0.0), (0.0, 0.0));
        assert_eq!(nl.f(-3.0).0, -nl.f(3.0).0);
    }

    #[test]
    fn derivative_matches_differences() {
        let nl = Nonlinearity::new(make_exponents(5, 1.3).unwrap(), 0.05);
        for &x in &[0.3, 2.0, 75.0, -4.0, 1e5] {
            let h = 1e-6 * f64::abs(x);
            let fd = (nl.g(x + h).0 - nl.g(x - h).0) / (2.0 * h);
            assert!((fd / nl.g(x).1 - 1.0).abs() < 1e-6, "{x}");
        }
    }
}

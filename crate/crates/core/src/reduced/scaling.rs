//! The ε–μ relation ε = μ^γ (ln 1/μ)² on its small-μ branch.

use crate::error::ReducedError;
use crate::exponents::CriticalExponents;

/// ε as a function of μ.
pub fn eps_from_mu(mu: f64, gamma: f64) -> f64 {
    let l = mu.ln();
    mu.powf(gamma) * l * l
}

/// Largest ε on the branch, reached at μ = e^{-2/γ}.
pub fn eps_bar(gamma: f64) -> f64 {
    let t = 2.0 / (gamma * std::f64::consts::E);
    t * t
}

/// Unique μ < e^{-2/γ} with ε = μ^γ (ln μ)².
///
/// Solves γt + 2 ln(-t) = ln ε for t = ln μ by Newton, safeguarded by a
/// bracket; the left side is increasing and concave on t < -2/γ.
pub fn mu_from_eps(eps: f64, exps: &CriticalExponents) -> Result<f64, ReducedError> {
    mu_from_eps_gamma(eps, exps.gamma_u)
}

pub fn mu_from_eps_gamma(eps: f64, gamma: f64) -> Result<f64, ReducedError> {
    let bar = eps_bar(gamma);
    if !(eps > 0.0 && eps < bar) {
        return Err(ReducedError::OutOfRange { eps, eps_bar: bar });
    }
    let target = eps.ln();
    let g = |t: f64| gamma * t + 2.0 * (-t).ln() - target;
    let mut hi = -2.0 / gamma;
    // g(t) ≤ γt + 2|t| - ln ε is negative for t < ln ε/(γ - 2) when γ > 2,
    // otherwise step left geometrically.
    let mut lo = (target / gamma - 1.0).min(hi - 1.0);
    while g(lo) > 0.0 {
        lo = 2.0 * lo - 1.0;
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = g(t);
        if v > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let mut next = t - v / (gamma + 2.0 / t);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-15 * t.abs() {
            t = next;
            break;
        }
        t = next;
    }
    Ok(t.exp())
}

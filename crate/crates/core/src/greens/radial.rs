//! τ̃ at the centre of a ball by one-dimensional quadrature.
//!
//! With the source at the centre, G^p is radial and the subtracted part
//! γ̃ r^{-γ} is exactly the Newtonian preimage of (γ_N r^{2-N})^p, so
//!
//!   H̃(0) = γ̃ R^{-γ} - Q(0),
//!   Q(0) = 1/(N-2) ∫_0^R w(t) (t - t^{N-1} R^{2-N}) dt,
//!   w(t) = G(t)^p - (γ_N t^{2-N})^p.

use crate::exponents::{gamma_n, CriticalExponents};

/// H̃_{1,c}(c) on B_R(c).
pub fn tau_tilde_ball_center(exps: &CriticalExponents, radius: f64) -> f64 {
    let n = exps.n;
    let nf = n as f64;
    let p = exps.p;
    let gp = gamma_n(n).powf(p);
    let r = radius;
    let w = |t: f64| {
        let s = (t / r).powf(nf - 2.0);
        gp * t.powf(-(nf - 2.0) * p) * (p * (-s).ln_1p()).exp_m1()
    };
    let f = |t: f64| {
        if t <= 0.0 || t >= r {
            return 0.0;
        }
        w(t) * (t - t.powf(nf - 1.0) * r.powf(2.0 - nf))
    };
    let a = quadrature::integrate(f, 0.0, 0.5 * r, 1e-15).integral;
    let b = quadrature::integrate(f, 0.5 * r, r, 1e-15).integral;
    let q0 = (a + b) / (nf - 2.0);
    exps.gamma_tilde() * r.powf(-exps.gamma_u) - q0
}

#![allow(dead_code)]

use std::sync::OnceLock;

use lane_emden::bubble::{shoot_ground_state, BubbleProfile, ShootOptions};
use lane_emden::exponents::sphere_area;
use lane_emden::make_exponents;

fn shoot(n: usize, p: f64) -> BubbleProfile {
    shoot_ground_state(&make_exponents(n, p).unwrap(), &ShootOptions::default()).unwrap()
}

pub fn profile_6() -> &'static BubbleProfile {
    static P: OnceLock<BubbleProfile> = OnceLock::new();
    P.get_or_init(|| shoot(6, 1.2))
}

pub fn profile_5() -> &'static BubbleProfile {
    static P: OnceLock<BubbleProfile> = OnceLock::new();
    P.get_or_init(|| shoot(5, 1.3))
}

pub fn profile_4() -> &'static BubbleProfile {
    static P: OnceLock<BubbleProfile> = OnceLock::new();
    P.get_or_init(|| shoot(4, 1.25))
}

/// ∫_R^∞ r^{s-1}(c0 + c1 ln r) dr for s < 0.
fn log_power_tail(c0: f64, c1: f64, s: f64, r: f64) -> f64 {
    let rs = r.powf(s);
    -rs / s * (c0 + c1 * r.ln()) + c1 * rs / (s * s)
}

/// The five constants by the trapezoid rule in t = ln r over the stored
/// mesh, plus leading-power tails beyond it.
pub fn trapezoid_constants(pr: &BubbleProfile) -> [f64; 5] {
    let e = &pr.exps;
    let nf = e.n as f64;
    let area = sphere_area(e.n);
    let m = pr.r.len();
    let integrate = |f: &dyn Fn(usize) -> f64| {
        let mut s = 0.0;
        for k in 0..m {
            let w = if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
            s += w * f(k) * pr.r[k].powf(nf);
        }
        s * pr.dt * area
    };
    let (u, v, psi, phi) = (&pr.u, &pr.v, &pr.psi0, &pr.phi0);
    let a1 = -integrate(&|k| u[k].powf(e.q) * u[k].ln() * psi[k]);
    let a1t = -integrate(&|k| v[k].powf(e.p) * v[k].ln() * phi[k]);
    let a2 = e.q * integrate(&|k| u[k].powf(e.q - 1.0) * psi[k]);
    let a3 = integrate(&|k| u[k].powf(e.q));
    let a4 = integrate(&|k| u[k].powf(e.q - 1.0)) / e.q;
    // U ~ a r^{-γ}, Ψ⁰ ~ a(N/(q+1) - γ) r^{-γ}, V ~ b r^{2-N}, Φ⁰ ~ b(N/(p+1) - N + 2) r^{2-N}.
    let r = *pr.r.last().unwrap();
    let (a, b, g, gv) = (pr.tail.a_np, pr.tail.b_np, e.gamma_u, nf - 2.0);
    let cpsi = a * (nf / (e.q + 1.0) - g);
    let cphi = b * (nf / (e.p + 1.0) - gv);
    let uq = a.powf(e.q);
    let t1 = -area * uq * cpsi * log_power_tail(a.ln(), -g, nf - g * (e.q + 1.0), r);
    let vp = b.powf(e.p);
    let t1t = -area * vp * cphi * log_power_tail(b.ln(), -gv, nf - gv * (e.p + 1.0), r);
    let t2 = e.q * area * a.powf(e.q - 1.0) * cpsi * log_power_tail(1.0, 0.0, nf - g * e.q, r);
    let t3 = area * uq * log_power_tail(1.0, 0.0, nf - g * e.q, r);
    let t4 = area * a.powf(e.q - 1.0) * log_power_tail(1.0, 0.0, nf - g * (e.q - 1.0), r) / e.q;
    [a1 + t1, a1t + t1t, a2 + t2, a3 + t3, a4 + t4]
}

//! Reduction constants of the bubble and the integral identities they obey.
//!
//! Every integrand is a product of U, V, ln U, ln V and the dilation kernel
//! (Ψ⁰, Φ⁰) = (rU' + α_u U, rV' + α_v V). Beyond the mesh each factor is
//! replaced by its leading power law and the tail is integrated exactly.

use serde::{Deserialize, Serialize};

use crate::bubble::{BubbleProfile, TailConstants};
use crate::error::ConstantsError;
use crate::exponents::CriticalExponents;
use crate::par::{self, Exec};
use crate::quadrature::{radial_integral, Integral, RadialFunction, TailLaw};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantErrors {
    pub a1: f64,
    pub a1_tilde: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionConstants {
    pub n: usize,
    pub p: f64,
    pub a1: f64,
    pub a1_tilde: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub quadrature_error: ConstantErrors,
}

impl ReductionConstants {
    /// Signs the constants are claimed to have: A1, Ã1, A3, A4 > 0.
    pub fn sign_violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !(self.a1 > 0.0) {
            v.push("A1");
        }
        if !(self.a1_tilde > 0.0) {
            v.push("A1_tilde");
        }
        if !(self.a3 > 0.0) {
            v.push("A3");
        }
        if !(self.a4 > 0.0) {
            v.push("A4");
        }
        v
    }
}

/// Series Σ c r^e against its first term, at radius r.
fn leading_rel_err(terms: &[(f64, f64)], r: f64, rms: f64) -> f64 {
    let lead = terms[0].1 * r.powf(terms[0].0);
    let full: f64 = terms.iter().map(|&(e, c)| c * r.powf(e)).sum();
    (full / lead - 1.0).abs() + rms
}

/// r d/dr + α applied termwise to a series.
fn dilate(terms: &[(f64, f64)], alpha: f64) -> Vec<(f64, f64)> {
    terms.iter().map(|&(e, c)| (e, c * (e + alpha))).collect()
}

/// Mesh samples and tail laws of the basic factors.
pub struct Factors {
    pub u: RadialFunction,
    pub v: RadialFunction,
    pub ln_u: RadialFunction,
    pub ln_v: RadialFunction,
    pub psi0: RadialFunction,
    pub phi0: RadialFunction,
}

pub fn factors(profile: &BubbleProfile) -> Factors {
    let e: &CriticalExponents = &profile.exps;
    let t: &TailConstants = &profile.tail;
    let r_end = profile.r_end();
    let rms = t.rms_residual;
    let eu = -t.u_terms[0].0;
    let ev = -t.v_terms[0].0;
    let ru = leading_rel_err(&t.u_terms, r_end, rms);
    let rv = leading_rel_err(&t.v_terms, r_end, rms);
    let psi_terms = dilate(&t.u_terms, e.alpha_u());
    let phi_terms = dilate(&t.v_terms, e.alpha_v());
    let rpsi = leading_rel_err(&psi_terms, r_end, rms);
    let rphi = leading_rel_err(&phi_terms, r_end, rms);
    // ln U = ln a - γ ln r + O(r^-κ); measure the slack relative to |ln U|.
    let ln_rel = |lead: f64, val: f64| ((val.ln() - lead).abs() / val.ln().abs()) + rms;
    let ln_u_end = t.a_np.ln() - eu * r_end.ln();
    let ln_v_end = t.b_np.ln() - ev * r_end.ln();
    Factors {
        u: RadialFunction { samples: profile.u.clone(), tail: TailLaw::power(t.a_np, eu, ru) },
        v: RadialFunction { samples: profile.v.clone(), tail: TailLaw::power(t.b_np, ev, rv) },
        ln_u: RadialFunction {
            samples: profile.u.iter().map(|x| x.ln()).collect(),
            tail: TailLaw { c0: t.a_np.ln(), c1: -eu, e: 0.0, rel_err: ln_rel(ln_u_end, t.u(r_end)) },
        },
        ln_v: RadialFunction {
            samples: profile.v.iter().map(|x| x.ln()).collect(),
            tail: TailLaw { c0: t.b_np.ln(), c1: -ev, e: 0.0, rel_err: ln_rel(ln_v_end, t.v(r_end)) },
        },
        psi0: RadialFunction {
            samples: profile.psi0.clone(),
            tail: TailLaw::power(psi_terms[0].1, eu, rpsi),
        },
        phi0: RadialFunction {
            samples: profile.phi0.clone(),
            tail: TailLaw::power(phi_terms[0].1, ev, rphi),
        },
    }
}

pub fn pow(f: &RadialFunction, s: f64) -> RadialFunction {
    RadialFunction {
        samples: f.samples.iter().map(|x| x.powf(s)).collect(),
        tail: f.tail.powf(s),
    }
}

/// The five constant integrands, in the order A1, Ã1, A2, A3, A4.
pub fn integrands(profile: &BubbleProfile) -> [RadialFunction; 5] {
    let e = &profile.exps;
    let f = factors(profile);
    let uq = pow(&f.u, e.q);
    let vp = pow(&f.v, e.p);
    let uq1 = pow(&f.u, e.q - 1.0);
    [
        uq.mul(&f.ln_u).mul(&f.psi0).scale(-1.0),
        vp.mul(&f.ln_v).mul(&f.phi0).scale(-1.0),
        uq1.mul(&f.psi0).scale(e.q),
        uq,
        uq1.scale(1.0 / e.q),
    ]
}

pub fn compute_constants(profile: &BubbleProfile) -> Result<ReductionConstants, ConstantsError> {
    compute_constants_with(profile, profile.opts.exec)
}

pub fn compute_constants_with(
    profile: &BubbleProfile,
    exec: Exec,
) -> Result<ReductionConstants, ConstantsError> {
    let fs = integrands(profile);
    let res: Vec<Result<Integral, ConstantsError>> =
        par::map_slice(exec, &fs, |f| radial_integral(profile, f));
    let mut v = Vec::with_capacity(5);
    for r in res {
        v.push(r?);
    }
    Ok(ReductionConstants {
        n: profile.exps.n,
        p: profile.exps.p,
        a1: v[0].value,
        a1_tilde: v[1].value,
        a2: v[2].value,
        a3: v[3].value,
        a4: v[4].value,
        quadrature_error: ConstantErrors {
            a1: v[0].error,
            a1_tilde: v[1].error,
            a2: v[2].error,
            a3: v[3].error,
            a4: v[4].error,
        },
    })
}

/// ∫(V^pΦ + U^qΨ) / ∫|V^pΦ| for a kernel pair (Ψ, Φ) given on the mesh.
pub fn orthogonality_residual(
    profile: &BubbleProfile,
    psi: &RadialFunction,
    phi: &RadialFunction,
) -> Result<f64, ConstantsError> {
    let e = &profile.exps;
    let f = factors(profile);
    let vp_phi = pow(&f.v, e.p).mul(phi);
    let uq_psi = pow(&f.u, e.q).mul(psi);
    let abs = RadialFunction {
        samples: vp_phi.samples.iter().map(|x| x.abs()).collect(),
        tail: TailLaw { c0: vp_phi.tail.c0.abs(), ..vp_phi.tail },
    };
    let a = radial_integral(profile, &vp_phi)?.value;
    let b = radial_integral(profile, &uq_psi)?.value;
    let norm = radial_integral(profile, &abs)?.value;
    Ok((a + b) / norm)
}

pub fn check_orthogonality(profile: &BubbleProfile) -> Result<f64, ConstantsError> {
    let f = factors(profile);
    orthogonality_residual(profile, &f.psi0, &f.phi0)
}

/// b^p / (a [(N-2)p-2] [N-(N-2)p]) - 1.
pub fn check_lss(tails: &TailConstants, exps: &CriticalExponents) -> f64 {
    crate::bubble::lss_residual(tails, exps)
}

/// ∫ U^{q-1} Ψ^l for the dilation kernel (l = 0) and the translation
/// kernels (l = 1..N). The translation kernels are U'(r) x_l / r, odd in
/// x_l, so their angular integral vanishes and the moment is exactly 0.
pub fn kernel_moment(profile: &BubbleProfile, l: usize) -> Result<f64, ConstantsError> {
    if l >= 1 {
        return Ok(0.0);
    }
    let f = factors(profile);
    let g = pow(&f.u, profile.exps.q - 1.0).mul(&f.psi0);
    Ok(radial_integral(profile, &g)?.value)
}

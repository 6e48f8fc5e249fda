//! Radial integrals ∫_{R^N} F(|x|) dx = |S^{N-1}| ∫_0^∞ F(r) r^{N-1} dr over
//! a bubble mesh, with the part beyond the mesh done in closed form from a
//! power law with an optional logarithm.

use serde::{Deserialize, Serialize};

use crate::bubble::BubbleProfile;
use crate::error::ConstantsError;

/// (c0 + c1 ln r) r^{-e}, the behaviour of an integrand past the mesh.
/// `rel_err` is the relative uncertainty of the law at the mesh end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailLaw {
    pub c0: f64,
    pub c1: f64,
    pub e: f64,
    pub rel_err: f64,
}

impl TailLaw {
    pub fn power(c: f64, e: f64, rel_err: f64) -> Self {
        TailLaw { c0: c, c1: 0.0, e, rel_err }
    }

    pub fn zero() -> Self {
        TailLaw { c0: 0.0, c1: 0.0, e: 0.0, rel_err: 0.0 }
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.c0 + self.c1 * r.ln()) * r.powf(-self.e)
    }

    /// Product of two laws. At most one factor may carry a logarithm.
    pub fn mul(&self, o: &TailLaw) -> TailLaw {
        assert!(
            self.c1 == 0.0 || o.c1 == 0.0,
            "tail laws with two logarithmic factors are not representable"
        );
        TailLaw {
            c0: self.c0 * o.c0,
            c1: self.c0 * o.c1 + self.c1 * o.c0,
            e: self.e + o.e,
            rel_err: self.rel_err + o.rel_err,
        }
    }

    pub fn scale(&self, s: f64) -> TailLaw {
        TailLaw { c0: self.c0 * s, c1: self.c1 * s, ..*self }
    }

    pub fn powf(&self, s: f64) -> TailLaw {
        assert!(self.c1 == 0.0);
        TailLaw {
            c0: self.c0.abs().powf(s),
            c1: 0.0,
            e: self.e * s,
            rel_err: self.rel_err * s.abs(),
        }
    }

    /// ∫_R^∞ (c0 + c1 ln r) r^{-e} r^{n-1} dr.
    pub fn integral_from(&self, r: f64, n: usize) -> Result<f64, ConstantsError> {
        if self.c0 == 0.0 && self.c1 == 0.0 {
            return Ok(0.0);
        }
        let m = self.e - n as f64;
        if m <= 0.0 {
            return Err(ConstantsError::Divergent { exponent: self.e, n });
        }
        let rm = r.powf(-m);
        Ok(self.c0 * rm / m + self.c1 * rm * (r.ln() / m + 1.0 / (m * m)))
    }
}

/// Samples on the profile mesh plus the law that continues them.
#[derive(Clone, Debug)]
pub struct RadialFunction {
    pub samples: Vec<f64>,
    pub tail: TailLaw,
}

impl RadialFunction {
    pub fn zip_with(&self, o: &RadialFunction, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.samples.iter().zip(&o.samples).map(|(&a, &b)| f(a, b)).collect()
    }

    pub fn mul(&self, o: &RadialFunction) -> RadialFunction {
        RadialFunction { samples: self.zip_with(o, |a, b| a * b), tail: self.tail.mul(&o.tail) }
    }

    pub fn scale(&self, s: f64) -> RadialFunction {
        RadialFunction {
            samples: self.samples.iter().map(|x| x * s).collect(),
            tail: self.tail.scale(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    /// Richardson truncation estimate plus the propagated tail uncertainty.
    pub error: f64,
    pub tail: f64,
}

/// Composite Simpson on the uniform ln r mesh, improved by one Richardson
/// step against the rule on every other node, plus the analytic tail.
pub fn radial_integral(
    profile: &BubbleProfile,
    f: &RadialFunction,
) -> Result<Integral, ConstantsError> {
    let n = profile.exps.n;
    let len = profile.r.len();
    assert_eq!(f.samples.len(), len, "integrand must be sampled on the profile mesh");
    assert!(len >= 9 && (len - 1) % 4 == 0, "mesh length must be 4m+1");
    let nf = n as f64;
    let g: Vec<f64> = (0..len).map(|k| f.samples[k] * profile.r[k].powf(nf)).collect();
    let simpson = |stride: usize| -> f64 {
        let h = profile.dt * stride as f64;
        let m = (len - 1) / stride;
        let mut s = g[0] + g[len - 1];
        for j in 1..m {
            s += g[j * stride] * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let s1 = simpson(1);
    let s2 = simpson(2);
    let body = s1 + (s1 - s2) / 15.0;
    // Below the first node the integrand is F(0) r^{N-1}.
    let head = g[0] / nf;
    let r_end = profile.r[len - 1];
    let tail = f.tail.integral_from(r_end, n)?;
    let area = profile.exps.sphere_area();
    Ok(Integral {
        value: area * (head + body + tail),
        error: area * ((s1 - s2).abs() / 15.0 + tail.abs() * f.tail.rel_err),
        tail: area * tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_of_pure_power() {
        let t = TailLaw::power(2.0, 8.0, 0.0);
        // ∫_2^∞ 2 r^{-8} r^5 dr = 2 * 2^{-2}/2
        assert!((t.integral_from(2.0, 6).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn tail_with_log() {
        // ∫_1^∞ ln r r^{-3} dr = 1/4
        let t = TailLaw { c0: 0.0, c1: 1.0, e: 5.0, rel_err: 0.0 };
        assert!((t.integral_from(1.0, 3).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn divergent_tail() {
        let t = TailLaw::power(1.0, 4.0, 0.0);
        assert!(matches!(t.integral_from(1.0, 4), Err(ConstantsError::Divergent { .. })));
    }
}

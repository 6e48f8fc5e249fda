//! Scalar abstraction shared by the f64 and double-double integrators.
//!
//! Addition and multiplication on [`Dd`] come from `twofloat`. Its
//! double-double division and its transcendental functions stop near f64
//! accuracy, so division, `exp` and `ln` are done here.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use twofloat::TwoFloat;

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Dd(pub TwoFloat);

impl Dd {
    pub fn new_add(a: f64, b: f64) -> Dd {
        Dd(TwoFloat::new_add(a, b))
    }
    pub fn hi(&self) -> f64 {
        self.0.hi()
    }
    pub fn lo(&self) -> f64 {
        self.0.lo()
    }
}

pub const LN_2: Dd = Dd(twofloat::consts::LN_2);
pub const E: Dd = Dd(twofloat::consts::E);

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd(TwoFloat::from(x))
    }
}

macro_rules! forward {
    ($tr:ident, $f:ident) => {
        impl $tr for Dd {
            type Output = Dd;
            fn $f(self, o: Dd) -> Dd {
                Dd($tr::$f(self.0, o.0))
            }
        }
        impl $tr<f64> for Dd {
            type Output = Dd;
            fn $f(self, o: f64) -> Dd {
                Dd($tr::$f(self.0, o))
            }
        }
    };
}
forward!(Add, add);
forward!(Sub, sub);
forward!(Mul, mul);

impl Div<f64> for Dd {
    type Output = Dd;
    fn div(self, o: f64) -> Dd {
        Dd(self.0 / o)
    }
}

impl Div for Dd {
    type Output = Dd;
    /// Long division with three f64 quotient digits.
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi() / b.hi();
        let r = self - b * q1;
        let q2 = r.hi() / b.hi();
        let r = r - b * q2;
        let q3 = r.hi() / b.hi();
        Dd(TwoFloat::new_add(q1, q2)) + q3
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd(-self.0)
    }
}

pub trait Real:
    Copy
    + Debug
    + Send
    + Sync
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    /// Relative accuracy the type can be driven to.
    const EPS: f64;
    fn from_f64(x: f64) -> Self;
    /// hi + lo, rounded to the precision of the type.
    fn from_pair(hi: f64, lo: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn abs(self) -> Self {
        if self.to_f64() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
}

impl Real for f64 {
    const EPS: f64 = f64::EPSILON;
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_pair(hi: f64, lo: f64) -> Self {
        hi + lo
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

fn inv_fact() -> &'static [Dd; 13] {
    static T: OnceLock<[Dd; 13]> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = [Dd::from(1.0); 13];
        for k in 1..13 {
            t[k] = t[k - 1] / (k as f64);
        }
        t
    })
}

/// e^x - 1 for |x| below about 1e-3, Taylor sum to order 12.
fn expm1_small(x: Dd) -> Dd {
    let c = inv_fact();
    let mut sum = x * c[12];
    for k in (1..12).rev() {
        sum = (sum + c[k]) * x;
    }
    sum
}

pub fn dd_exp(x: Dd) -> Dd {
    let h = x.hi();
    if h > 709.0 {
        return Dd::from(f64::INFINITY);
    }
    if h < -745.0 {
        return Dd::from(0.0);
    }
    let k = (h / std::f64::consts::LN_2).round();
    let r = x - LN_2 * k;
    // r in [-0.35, 0.35]; shrink by 2^-10 and square back up through expm1.
    let mut s = expm1_small(r * (1.0 / 1024.0));
    for _ in 0..10 {
        s = s * (s + 2.0);
    }
    let e = s + 1.0;
    let scale = 2f64.powi(k as i32);
    e * scale
}

pub fn dd_ln(x: Dd) -> Dd {
    let h = x.hi();
    if h <= 0.0 {
        return Dd::from(f64::NAN);
    }
    let y = Dd::from(h.ln());
    // One Newton step on e^y = x doubles the 1e-16 seed accuracy.
    y + x * dd_exp(-y) - 1.0
}

impl Real for Dd {
    const EPS: f64 = 1e-31;
    fn from_f64(x: f64) -> Self {
        Dd::from(x)
    }
    fn from_pair(hi: f64, lo: f64) -> Self {
        Dd::new_add(hi, lo)
    }
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
    fn exp(self) -> Self {
        dd_exp(self)
    }
    fn ln(self) -> Self {
        dd_ln(self)
    }
}

/// sign(x)|x|^e through exp/ln.
pub fn signed_pow<T: Real>(x: T, e: f64) -> T {
    let xf = x.to_f64();
    if xf == 0.0 {
        return T::zero();
    }
    let m = (x.abs().ln() * e).exp();
    if xf < 0.0 {
        -m
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Dd, b: Dd) -> f64 {
        ((a - b) / b).to_f64().abs()
    }

    #[test]
    fn division_is_full_precision() {
        for d in [3.0, 7.0, 24.0, 1e-7 / 3.0] {
            let b = Dd::from(d) + Dd::from(d * 1e-20);
            let q = Dd::from(1.0) / b;
            assert!((q * b - 1.0).to_f64().abs() < 1e-31);
        }
    }

    #[test]
    fn exp_of_one_is_e() {
        assert!(rel(dd_exp(Dd::from(1.0)), E) < 1e-30);
    }

    #[test]
    fn ln_two() {
        assert!(rel(dd_ln(Dd::from(2.0)), LN_2) < 1e-30);
    }

    #[test]
    fn round_trip_and_integer_powers() {
        for &x in &[1e-6, 0.3, 1.7, 12.5, 3e5] {
            let d = Dd::from(x) / 3.0;
            assert!(rel(dd_exp(dd_ln(d)), d) < 1e-30);
            let cube = d * d * d;
            assert!(rel(signed_pow(d, 3.0), cube) < 1e-29);
            assert!(rel(signed_pow(-d, 3.0), -cube) < 1e-29);
        }
    }
}

//! Gragg-Bulirsch-Stoer extrapolation with a fixed number of columns and
//! adaptive step size. Generic over the scalar so the same code drives the
//! f64 and double-double shooting passes.

use crate::dd::Real;
use crate::error::OdeError;

pub trait System<T: Real, const D: usize>: Sync {
    fn rhs(&self, t: T, y: &[T; D]) -> [T; D];

    /// Magnitudes against which component errors are measured.
    fn scale(&self, y: &[T; D], y_new: &[T; D]) -> [f64; D] {
        let mut s = [0.0; D];
        for i in 0..D {
            s[i] = y[i].to_f64().abs().max(y_new[i].to_f64().abs());
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Gbs {
    /// Number of extrapolation columns; the method has order 2k.
    pub k: usize,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Gbs {
    pub fn for_f64(rtol: f64) -> Self {
        Gbs { k: 8, rtol, atol: 1e-300, max_steps: 200_000 }
    }

    pub fn for_dd(rtol: f64) -> Self {
        Gbs { k: 12, rtol, atol: 1e-300, max_steps: 200_000 }
    }

    fn midpoint<T: Real, S: System<T, D>, const D: usize>(
        &self,
        sys: &S,
        t: T,
        y: &[T; D],
        f0: &[T; D],
        big_h: T,
        n: usize,
    ) -> [T; D] {
        let h = big_h / T::from_f64(n as f64);
        let two_h = h * 2.0;
        let mut z0 = *y;
        let mut z1 = [T::zero(); D];
        for i in 0..D {
            z1[i] = y[i] + h * f0[i];
        }
        for m in 1..n {
            let f = sys.rhs(t + h * (m as f64), &z1);
            let mut z2 = [T::zero(); D];
            for i in 0..D {
                z2[i] = z0[i] + two_h * f[i];
            }
            z0 = z1;
            z1 = z2;
        }
        let f = sys.rhs(t + big_h, &z1);
        let mut out = [T::zero(); D];
        for i in 0..D {
            out[i] = (z1[i] + z0[i] + h * f[i]) * 0.5;
        }
        out
    }

    /// One extrapolated step of size `h`. Returns the new state and the
    /// scaled error norm (≤ 1 means acceptable).
    pub fn try_step<T: Real, S: System<T, D>, const D: usize>(
        &self,
        sys: &S,
        t: T,
        y: &[T; D],
        h: T,
    ) -> ([T; D], f64) {
        let f0 = sys.rhs(t, y);
        let mut rows: Vec<[T; D]> = Vec::with_capacity(self.k);
        let mut err_vec = [T::zero(); D];
        for j in 0..self.k {
            let nj = 2 * (j + 1);
            let mut cur = vec![self.midpoint(sys, t, y, &f0, h, nj)];
            for m in 1..=j {
                let nm = 2 * (j + 1 - m);
                // (nj/nm)^2 - 1 kept as an exact integer ratio.
                let num = (nm * nm) as f64;
                let den = T::from_f64((nj * nj - nm * nm) as f64);
                let mut next = [T::zero(); D];
                for i in 0..D {
                    next[i] = cur[m - 1][i] + (cur[m - 1][i] - rows[m - 1][i]) * num / den;
                }
                cur.push(next);
            }
            if j == self.k - 1 {
                for i in 0..D {
                    err_vec[i] = cur[j][i] - cur[j - 1][i];
                }
            }
            rows = cur;
        }
        let y_new = rows[self.k - 1];
        let sc = sys.scale(y, &y_new);
        let mut err: f64 = 0.0;
        for i in 0..D {
            let e = err_vec[i].to_f64().abs() / (self.atol + self.rtol * sc[i]);
            if !e.is_finite() {
                err = f64::INFINITY;
            } else {
                err = err.max(e);
            }
        }
        for v in y_new.iter() {
            if !v.to_f64().is_finite() {
                err = f64::INFINITY;
            }
        }
        (y_new, err)
    }
}

/// Integration state carried between calls so step sizes persist.
pub struct Stepper<'a, T: Real, S: System<T, D>, const D: usize> {
    pub gbs: Gbs,
    pub sys: &'a S,
    pub t: T,
    pub y: [T; D],
    pub h: f64,
    pub steps: usize,
}

impl<'a, T: Real, S: System<T, D>, const D: usize> Stepper<'a, T, S, D> {
    pub fn new(gbs: Gbs, sys: &'a S, t: T, y: [T; D], h: f64) -> Self {
        Stepper { gbs, sys, t, y, h, steps: 0 }
    }

    /// Advance to `t_target`. After every accepted step `stop(t, y)` is
    /// consulted; returning true ends the advance early with `Ok(true)`.
    pub fn advance<F>(&mut self, t_target: T, mut stop: F) -> Result<bool, OdeError>
    where
        F: FnMut(T, &[T; D]) -> bool,
    {
        let expo = 1.0 / (2 * self.gbs.k - 1) as f64;
        loop {
            let remaining = (t_target - self.t).to_f64();
            if remaining <= 0.0 {
                return Ok(false);
            }
            let last = self.h >= remaining;
            let h = if last { t_target - self.t } else { T::from_f64(self.h) };
            let (y_new, err) = self.gbs.try_step(self.sys, self.t, &self.y, h);
            let fac = if err == 0.0 {
                4.0
            } else if err.is_finite() {
                (0.9 * err.powf(-expo)).clamp(0.2, 4.0)
            } else {
                0.2
            };
            if err <= 1.0 {
                self.t = if last { t_target } else { self.t + h };
                self.y = y_new;
                self.steps += 1;
                if self.steps > self.gbs.max_steps {
                    return Err(OdeError::TooManySteps(self.gbs.max_steps));
                }
                let h_used = h.to_f64();
                // Do not let a short final step shrink the next one.
                self.h = if last { self.h.max(h_used * fac) } else { h_used * fac };
                if stop(self.t, &self.y) {
                    return Ok(true);
                }
            } else {
                self.h = h.to_f64() * fac;
                if self.h < 1e-14 * (1.0 + self.t.to_f64().abs()) {
                    return Err(OdeError::StepUnderflow(self.t.to_f64()));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::Dd;

    struct Osc;
    impl<T: Real> System<T, 2> for Osc {
        fn rhs(&self, _t: T, y: &[T; 2]) -> [T; 2] {
            [y[1], -y[0]]
        }
        fn scale(&self, y: &[T; 2], _: &[T; 2]) -> [f64; 2] {
            let m = y[0].to_f64().abs().max(y[1].to_f64().abs());
            [m, m]
        }
    }

    #[test]
    fn harmonic_oscillator_f64() {
        let sys = Osc;
        let mut st = Stepper::new(Gbs::for_f64(1e-13), &sys, 0.0, [1.0, 0.0], 0.1);
        st.advance(10.0, |_, _| false).unwrap();
        assert!((st.y[0] - 10f64.cos()).abs() < 1e-11);
    }

    #[test]
    fn exponential_growth_dd() {
        struct Grow;
        impl System<Dd, 1> for Grow {
            fn rhs(&self, _t: Dd, y: &[Dd; 1]) -> [Dd; 1] {
                [y[0]]
            }
        }
        let sys = Grow;
        let mut st = Stepper::new(Gbs::for_dd(1e-29), &sys, Dd::from(0.0), [Dd::from(1.0)], 0.1);
        st.advance(Dd::from(3.0), |_, _| false).unwrap();
        let exact = crate::dd::dd_exp(Dd::from(3.0));
        assert!(((st.y[0] - exact) / exact).to_f64().abs() < 1e-27);
    }
}

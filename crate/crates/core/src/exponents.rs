//! Exponent triples (N, p, q) on the critical hyperbola
//! 1/(p+1) + 1/(q+1) = (N-2)/N and the decay rates derived from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::ExponentError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    /// Decay rate of U: (N-2)p - 2.
    pub gamma_u: f64,
    /// Decay rate of V: N - 2.
    pub gamma_v: f64,
    /// min{N-2, (N-1)p-2}.
    pub kappa0: f64,
}

/// Lower end of the admissible p-window for dimension `n`.
pub fn p_lower(n: usize) -> f64 {
    let nf = n as f64;
    if n <= 2 {
        f64::INFINITY
    } else {
        (2.0 / (nf - 2.0)).max(1.0)
    }
}

/// Upper end of the admissible p-window for dimension `n`.
pub fn p_upper(n: usize) -> f64 {
    let nf = n as f64;
    if n <= 2 {
        f64::NEG_INFINITY
    } else {
        (nf - 1.0) / (nf - 2.0)
    }
}

pub fn make_exponents(n: usize, p: f64) -> Result<CriticalExponents, ExponentError> {
    if n < 3 {
        return Err(ExponentError::Inadmissible {
            n,
            p,
            reason: format!("dimension N = {n} is below 3"),
        });
    }
    if !p.is_finite() {
        return Err(ExponentError::Inadmissible {
            n,
            p,
            reason: "p is not finite".into(),
        });
    }
    let lo = p_lower(n);
    let hi = p_upper(n);
    if lo >= hi {
        return Err(ExponentError::Inadmissible {
            n,
            p,
            reason: format!(
                "admissible window is empty: need p > {lo} and p < {hi} simultaneously"
            ),
        });
    }
    if p <= lo {
        return Err(ExponentError::Inadmissible {
            n,
            p,
            reason: format!("p must exceed max(1, 2/(N-2)) = {lo}"),
        });
    }
    if p >= hi {
        return Err(ExponentError::Inadmissible {
            n,
            p,
            reason: format!("p must be below (N-1)/(N-2) = {hi}"),
        });
    }
    let nf = n as f64;
    let gamma_u = (nf - 2.0) * p - 2.0;
    let q = nf * (p + 1.0) / gamma_u - 1.0;
    Ok(CriticalExponents {
        n,
        p,
        q,
        gamma_u,
        gamma_v: nf - 2.0,
        kappa0: (nf - 2.0).min((nf - 1.0) * p - 2.0),
    })
}

impl CriticalExponents {
    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Scaling exponent of U in the bubble family, N/(q+1).
    pub fn alpha_u(&self) -> f64 {
        self.nf() / (self.q + 1.0)
    }

    /// Scaling exponent of V in the bubble family, N/(p+1).
    pub fn alpha_v(&self) -> f64 {
        self.nf() / (self.p + 1.0)
    }

    /// N - (N-2)p, the second factor in the tail identity.
    pub fn kappa(&self) -> f64 {
        self.nf() - (self.nf() - 2.0) * self.p
    }

    /// qγ - N: first correction exponent in the V tail.
    pub fn lambda(&self) -> f64 {
        self.q * self.gamma_u - self.nf()
    }

    /// Residual of the hyperbola relation.
    pub fn hyperbola_residual(&self) -> f64 {
        1.0 / (self.p + 1.0) + 1.0 / (self.q + 1.0) - (self.nf() - 2.0) / self.nf()
    }

    /// |S^{N-1}|.
    pub fn sphere_area(&self) -> f64 {
        sphere_area(self.n)
    }

    /// γ_N = 1/((N-2)|S^{N-1}|), the fundamental solution constant.
    pub fn gamma_n(&self) -> f64 {
        gamma_n(self.n)
    }

    /// γ̃ = γ_N^p / (γ κ): amplitude of the r^{-γ} singularity of G̃.
    pub fn gamma_tilde(&self) -> f64 {
        self.gamma_n().powf(self.p) / (self.gamma_u * self.kappa())
    }
}

/// Γ(n/2) for integer n ≥ 1.
fn gamma_half(n: usize) -> f64 {
    if n % 2 == 0 {
        (1..n / 2).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x + 1e-9 < n as f64 / 2.0 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Surface area of the unit sphere in R^n.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

pub fn gamma_n(n: usize) -> f64 {
    1.0 / ((n as f64 - 2.0) * sphere_area(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((sphere_area(6) - PI.powi(3)).abs() < 1e-12);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_six() {
        assert!((gamma_n(6) - 1.0 / (4.0 * PI.powi(3))).abs() < 1e-16);
    }

    #[test]
    fn window_edges() {
        assert!(make_exponents(6, 1.0).is_err());
        assert!(make_exponents(6, 1.25).is_err());
        assert!(make_exponents(4, 1.0).is_err());
        assert!(make_exponents(4, 1.5).is_err());
        assert!(make_exponents(2, 1.5).is_err());
        assert!(make_exponents(4, 1.25).is_ok());
    }
}

//! Closed forms on a ball B_R(c) ⊂ R^N, with c on the x₁ axis.
//!
//!   G(x, y) = γ_N |x - y|^{2-N} - H(x, y),
//!   H(x, y) = γ_N (|x-c|²|y-c|²/R² - 2(x-c)·(y-c) + R²)^{(2-N)/2}.

use crate::error::GreensError;
use crate::exponents::gamma_n;
use crate::greens::domain::Ball;

fn shifted(b: &Ball, x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v[0] -= b.center;
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn ball_regular(x: &[f64], y: &[f64], b: &Ball) -> f64 {
    let n = x.len();
    let (xs, ys) = (shifted(b, x), shifted(b, y));
    let r2 = b.radius * b.radius;
    let s = dot(&xs, &xs) * dot(&ys, &ys) / r2 - 2.0 * dot(&xs, &ys) + r2;
    gamma_n(n) * s.powf(0.5 * (2.0 - n as f64))
}

pub fn ball_green(x: &[f64], y: &[f64], b: &Ball) -> Result<f64, GreensError> {
    let n = x.len();
    let d2: f64 = x.iter().zip(y).map(|(a, c)| (a - c) * (a - c)).sum();
    if d2 == 0.0 {
        return Err(GreensError::Coincident);
    }
    Ok(gamma_n(n) * d2.powf(0.5 * (2.0 - n as f64)) - ball_regular(x, y, b))
}

/// H(y, y) = γ_N R^{N-2} (R² - |y-c|²)^{2-N}.
pub fn ball_robin(y: &[f64], b: &Ball) -> f64 {
    let n = y.len();
    let ys = shifted(b, y);
    let r = b.radius;
    gamma_n(n) * r.powi(n as i32 - 2) * (r * r - dot(&ys, &ys)).powi(2 - n as i32)
}

/// H(x, y) for x = (x₁, ρ) in the meridian plane and y on the axis.
pub fn ball_regular_axis(n: usize, x: f64, rho: f64, y: f64, b: &Ball) -> f64 {
    let (xs, ys) = (x - b.center, y - b.center);
    let r2 = b.radius * b.radius;
    let s = (xs * xs + rho * rho) * ys * ys / r2 - 2.0 * xs * ys + r2;
    gamma_n(n) * s.powf(0.5 * (2.0 - n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_on_the_sphere() {
        let b = Ball::new(0.0, 1.0);
        let y = [0.2, -0.1, 0.3, 0.0, 0.1, 0.0];
        let x = [0.6, 0.0, 0.8, 0.0, 0.0, 0.0];
        assert!(ball_green(&x, &y, &b).unwrap().abs() < 1e-15);
    }

    #[test]
    fn robin_at_centre() {
        let b = Ball::new(0.0, 1.0);
        let v = ball_robin(&[0.0; 6], &b);
        assert!((v - 1.0 / (4.0 * std::f64::consts::PI.powi(3))).abs() < 1e-17);
    }

    #[test]
    fn axis_form_agrees() {
        let b = Ball::new(0.3, 1.5);
        let full = ball_regular(&[0.7, 0.0, 0.4, 0.0], &[0.1, 0.0, 0.0, 0.0], &b);
        let ax = ball_regular_axis(4, 0.7, 0.4, 0.1, &b);
        assert!((full - ax).abs() < 1e-15 * full);
    }
}

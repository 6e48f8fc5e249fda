//! Continuation in ε along the single-peak branch, and the scaling fit.

use serde::{Deserialize, Serialize};

use crate::bubble::BubbleProfile;
use crate::direct::newton::{bubble_ansatz, radial_newton, NewtonOptions, RadialGrid, RadialSolution};
use crate::direct::nonlinearity::Nonlinearity;
use crate::error::DirectError;
use crate::reduced::scaling::eps_bar;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchPoint {
    pub epsilon: f64,
    pub mu_num: f64,
    pub peak_height: f64,
    pub iterations: usize,
    pub newton_residual: f64,
    /// μ used for the initial bubble.
    pub mu_guess: f64,
    pub positive: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Branch {
    pub n: usize,
    pub p: f64,
    pub radius: f64,
    pub cells: usize,
    pub points: Vec<BranchPoint>,
    /// Why the branch stopped early, if it did.
    pub truncated: Option<String>,
    #[serde(skip)]
    pub solutions: Vec<RadialSolution>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    pub newton: NewtonOptions,
    /// Ratio between the bubble scale and the scaling-law μ; the reduced
    /// functional's optimal d* for one peak at the centre.
    pub mu_scale: f64,
    /// Extra initial guesses tried around the predicted μ, by factors
    /// spread_factor^{±1, ±2, …}.
    pub extra_guesses: usize,
    pub spread_factor: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions { newton: NewtonOptions::default(), mu_scale: 1.0, extra_guesses: 6, spread_factor: 1.4 }
    }
}

fn law(eps: f64, gamma: f64) -> f64 {
    let e = eps.min(eps_bar(gamma) * (1.0 - 1e-9));
    crate::reduced::scaling::mu_from_eps_gamma(e, gamma).expect("clamped into range")
}

/// Predicted μ: the scaled law for the first point, the law's ratio from
/// one previous point, and a log-log secant from two.
fn predict(eps: f64, gamma: f64, scale: f64, pts: &[BranchPoint]) -> f64 {
    match pts {
        [] => scale * law(eps, gamma),
        [a] => a.mu_num * law(eps, gamma) / law(a.epsilon, gamma),
        [.., a, b] => {
            let k = (b.mu_num / a.mu_num).ln() / (b.epsilon / a.epsilon).ln();
            b.mu_num * (eps / b.epsilon).powf(k)
        }
    }
}

/// Walks the ε list (decreasing). Each point starts from a scaled bubble
/// at the predicted μ, then from nearby μ, then from the previous state.
/// Stops at the first point that cannot be resolved or solved.
pub fn continuation(
    profile: &BubbleProfile,
    epsilons: &[f64],
    radius: f64,
    opts: &ContinuationOptions,
) -> Result<Branch, DirectError> {
    let exps = profile.exps;
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(DirectError::InsufficientRange("epsilon list must be strictly decreasing".into()));
    }
    let nopts = &opts.newton;
    let grid = RadialGrid::mapped(exps.n, radius, nopts.cells, nopts.map);
    let mut branch = Branch {
        n: exps.n,
        p: exps.p,
        radius,
        cells: nopts.cells,
        points: vec![],
        truncated: None,
        solutions: vec![],
    };
    for &eps in epsilons {
        let nl = Nonlinearity::new(exps, eps);
        let mu0 = predict(eps, exps.gamma_u, opts.mu_scale, &branch.points);
        let mut guesses = vec![mu0];
        for i in 1..=opts.extra_guesses {
            let f = opts.spread_factor.powi(((i + 1) / 2) as i32);
            guesses.push(if i % 2 == 1 { mu0 / f } else { mu0 * f });
        }
        let mut last_err = None;
        let mut found = None;
        for &mu in &guesses {
            match radial_newton(&nl, &grid, bubble_ansatz(profile, &grid, mu), nopts) {
                Ok(s) if s.positive => {
                    found = Some((mu, s));
                    break;
                }
                Ok(_) => last_err = Some(DirectError::Diverged("converged to a sign-changing state".into())),
                Err(e) => last_err = Some(e),
            }
        }
        if found.is_none() {
            if let Some(prev) = branch.solutions.last() {
                let m = grid.cells();
                let warm = (prev.u[..m].to_vec(), prev.v[..m].to_vec());
                if let Ok(s) = radial_newton(&nl, &grid, warm, nopts) {
                    if s.positive {
                        found = Some((prev.mu_num, s));
                    }
                }
            }
        }
        match found {
            Some((mu, s)) => {
                branch.points.push(BranchPoint {
                    epsilon: eps,
                    mu_num: s.mu_num,
                    peak_height: s.peak_height,
                    iterations: s.iterations,
                    newton_residual: s.newton_residual,
                    mu_guess: mu,
                    positive: s.positive,
                });
                branch.solutions.push(s);
            }
            None => {
                let e = last_err.map(|e| e.to_string()).unwrap_or_default();
                branch.truncated = Some(format!("at epsilon = {eps:e}: {e}"));
                break;
            }
        }
    }
    Ok(branch)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LineFit { slope, intercept: my - slope * mx, r2 }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// ln ε against ln(μ^γ (ln 1/μ)²).
    pub with_log: LineFit,
    /// ln ε against ln μ^γ.
    pub pure_power: LineFit,
    pub points: usize,
    pub mu_span: f64,
}

/// Regression of the branch against the scaling law. Needs at least six
/// points spanning a decade in μ.
pub fn scaling_check(eps: &[f64], mu: &[f64], gamma: f64) -> Result<ScalingFit, DirectError> {
    if eps.len() != mu.len() || eps.len() < 6 {
        return Err(DirectError::InsufficientRange(format!("{} points, need 6", eps.len())));
    }
    let hi = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = mu.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(hi / lo >= 10.0) || mu.iter().any(|&m| !(m > 0.0 && m < 1.0)) {
        return Err(DirectError::InsufficientRange(format!("mu spans [{lo:e}, {hi:e}]")));
    }
    let y: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let xl: Vec<f64> = mu.iter().map(|m| gamma * m.ln() + 2.0 * (-m.ln()).ln()).collect();
    let xp: Vec<f64> = mu.iter().map(|m| gamma * m.ln()).collect();
    Ok(ScalingFit { with_log: line_fit(&xl, &y), pure_power: line_fit(&xp, &y), points: eps.len(), mu_span: hi / lo })
}

pub fn branch_scaling(branch: &Branch, gamma: f64) -> Result<ScalingFit, DirectError> {
    let e: Vec<f64> = branch.points.iter().map(|p| p.epsilon).collect();
    let m: Vec<f64> = branch.points.iter().map(|p| p.mu_num).collect();
    scaling_check(&e, &m, gamma)
}

/// ε values on the exact law for the given μ, for self-consistency checks.
pub fn synthetic_branch(mus: &[f64], gamma: f64) -> Vec<f64> {
    mus.iter().map(|&m| crate::reduced::scaling::eps_from_mu(m, gamma)).collect()
}


//! Per-ε summaries of the reduced functionals at located minima.

use serde::{Deserialize, Serialize};

use crate::error::ReducedError;
use crate::reduced::functional::{Coefficients, G0Terms, ReducedModel};
use crate::reduced::minimize::{distinct_minima, minimize, LambdaBox, LocatedMinimum, MinimizeOptions, Seed};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimumAtEps {
    pub seed: usize,
    pub lobes: Vec<usize>,
    pub g0: G0Terms,
    pub gh: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsilonReport {
    pub epsilon: f64,
    pub mu: f64,
    pub minima: Vec<MinimumAtEps>,
    /// True when 1/|ln μ| exceeds the warning threshold.
    pub remainder_warning: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReducedReport {
    pub n: usize,
    pub p: f64,
    pub k: usize,
    pub lambda: LambdaBox,
    pub coefficients: Coefficients,
    pub minima: Vec<LocatedMinimum>,
    /// Indices into `minima`, one per distinct minimum.
    pub distinct: Vec<usize>,
    pub distinct_tolerance: f64,
    pub per_epsilon: Vec<EpsilonReport>,
}

/// Dropped terms are flagged once 1/|ln μ| passes this value.
pub const REMAINDER_WARNING: f64 = 0.25;

pub fn report(
    model: &ReducedModel,
    k: usize,
    seeds: &[Seed],
    lam: &LambdaBox,
    epsilons: &[f64],
    opts: &MinimizeOptions,
) -> Result<ReducedReport, ReducedError> {
    let minima = minimize(model, seeds, lam, opts)?;
    let tol = 10.0 * model.grid_spacing();
    let distinct = distinct_minima(&minima, tol);
    let mut per_epsilon = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut rows = Vec::new();
        let mut mu = f64::NAN;
        let mut warn = false;
        for m in &minima {
            let g0 = model.eval_g0(&m.config, eps)?;
            mu = g0.mu;
            warn |= g0.remainder_ratio > REMAINDER_WARNING;
            let gh = model.eval_gh(&m.config, eps)?;
            rows.push(MinimumAtEps { seed: m.seed, lobes: m.lobes.clone(), g0, gh });
        }
        if minima.is_empty() {
            mu = crate::reduced::scaling::mu_from_eps(eps, &model.exps)?;
            warn = 1.0 / mu.ln().abs() > REMAINDER_WARNING;
        }
        per_epsilon.push(EpsilonReport { epsilon: eps, mu, minima: rows, remainder_warning: warn });
    }
    Ok(ReducedReport {
        n: model.exps.n,
        p: model.exps.p,
        k,
        lambda: *lam,
        coefficients: model.coefficients(),
        minima,
        distinct,
        distinct_tolerance: tol,
        per_epsilon,
    })
}

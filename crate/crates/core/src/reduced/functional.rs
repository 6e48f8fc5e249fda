//! The reduced functionals G₀ and G_h and the slow functional minimized to
//! locate concentration configurations.
//!
//! With C₁ = ((p+1)A₁ + (q+1)Ã₁)/N, C₂ = (b/γ_N)^p A₂, α = N/(q+1) and
//! L = |ln μ|,
//!
//!   G₀ = -k C₁ ε/L - C₁ (ε/L²) Σ ln d_i
//!        + μ^γ [C₂ Σ d_i^α H̃_{d,ξ}(ξ_i) - a A₄ Σ_{i≠j} d_i^{2α} d_j^{(p-1)α} |ξ_i - ξ_j|^{-γ}].
//!
//! Under ε/L² = μ^γ the last two groups share one scale factor, so
//! G₀ = -k C₁ ε/L - μ^γ |C₁| J(d, ξ) with the slow functional
//!
//!   J = (C₁ Σ ln d_i - C₂ Σ d_i^α H̃(ξ_i) + a A₄ Σ_{i≠j} …) / |C₁|.

use serde::{Deserialize, Serialize};

use crate::bubble::TailConstants;
use crate::constants::ReductionConstants;
use crate::error::{GreensError, ReducedError};
use crate::exponents::CriticalExponents;
use crate::greens::{htilde_config, Ball, DomainKind, DomainSpec, GreenOptions};
use crate::par;
use crate::reduced::scaling::mu_from_eps;

/// τ̃ sampled at equally spaced axis points, interpolated by local cubics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisTable {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    /// Even about x0: only x ≥ x0 is stored.
    pub even: bool,
}

impl AxisTable {
    fn node(&self, j: i64) -> Option<f64> {
        let j = if self.even { j.abs() } else { j };
        (j >= 0).then(|| self.values.get(j as usize).copied()).flatten()
    }

    pub fn range(&self) -> (f64, f64) {
        let hi = self.x0 + self.dx * (self.values.len() - 1) as f64;
        if self.even {
            (2.0 * self.x0 - hi, hi)
        } else {
            (self.x0, hi)
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, GreensError> {
        let (lo, hi) = self.range();
        if !(x >= lo - 1e-12 * self.dx && x <= hi + 1e-12 * self.dx) {
            return Err(GreensError::OutsideDomain { x, rho: 0.0 });
        }
        // Reflect so that even tables are exactly symmetric.
        let t = if self.even { (x - self.x0).abs() / self.dx } else { (x - self.x0) / self.dx };
        let m = self.values.len() as i64 - 1;
        let jmin = if self.even { -m } else { 0 };
        let mut j0 = t.floor() as i64 - 1;
        j0 = j0.max(jmin).min(m - 3);
        let mut s = 0.0;
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (t - (j0 + b) as f64) / (a - b) as f64;
                }
            }
            s += w * self.node(j0 + a).ok_or(GreensError::OutsideDomain { x, rho: 0.0 })?;
        }
        Ok(s)
    }

    /// Central difference with step `h`, one-sided next to the ends.
    pub fn derivative(&self, x: f64, h: f64) -> Result<f64, GreensError> {
        let (lo, hi) = self.range();
        let (a, b) = ((x - h).max(lo), (x + h).min(hi));
        Ok((self.eval(b)? - self.eval(a)?) / (b - a))
    }

    /// τ̃ on the unit ball at s = j·s_max/m, j = 0..=m, stored as an even table.
    pub fn unit_ball(exps: &CriticalExponents, m: usize, s_max: f64, opts: &GreenOptions) -> Result<Self, GreensError> {
        let dom = DomainSpec::unit_ball(exps.n);
        let dx = s_max / m as f64;
        let vals = par::map_range(opts.exec(), m + 1, |j| crate::greens::tau_tilde(&dom, j as f64 * dx, exps, opts));
        Ok(AxisTable { x0: 0.0, dx, values: vals.into_iter().collect::<Result<_, _>>()?, even: true })
    }

    /// τ̃ on the axis of `dom` at m+1 points spanning [lo, hi].
    pub fn on_axis(
        dom: &DomainSpec,
        lo: f64,
        hi: f64,
        m: usize,
        exps: &CriticalExponents,
        opts: &GreenOptions,
    ) -> Result<Self, GreensError> {
        let dx = (hi - lo) / m as f64;
        let vals = par::map_range(opts.exec(), m + 1, |j| crate::greens::tau_tilde(dom, lo + j as f64 * dx, exps, opts));
        Ok(AxisTable { x0: lo, dx, values: vals.into_iter().collect::<Result<_, _>>()?, even: false })
    }
}

/// How τ̃ and H̃ are evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TauModel {
    /// One unit-ball table, scaled onto each ball component.
    Balls { unit: AxisTable, balls: Vec<Ball> },
    /// One table per dumbbell lobe, in axial coordinates.
    Lobes { tables: Vec<AxisTable> },
    /// A meridian solve for every evaluation.
    Solve,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    pub nodes: usize,
    /// Fraction of each lobe radius covered by the table.
    pub reach: f64,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions { nodes: 36, reach: 0.9 }
    }
}

impl TauModel {
    pub fn build(
        dom: &DomainSpec,
        exps: &CriticalExponents,
        opts: &GreenOptions,
        table: &TableOptions,
    ) -> Result<TauModel, GreensError> {
        let dom = dom.normalized();
        match &dom.kind {
            DomainKind::Ball(_) | DomainKind::DisjointUnion { .. } => {
                let unit = AxisTable::unit_ball(exps, table.nodes, table.reach, opts)?;
                Ok(TauModel::Balls { unit, balls: dom.balls() })
            }
            DomainKind::Dumbbell { .. } => {
                let tables = dom
                    .balls()
                    .iter()
                    .map(|b| {
                        let w = table.reach * b.radius;
                        AxisTable::on_axis(&dom, b.center - w, b.center + w, 2 * table.nodes, exps, opts)
                    })
                    .collect::<Result<_, _>>()?;
                Ok(TauModel::Lobes { tables })
            }
        }
    }

    /// Single-peak τ̃(y), if a table covers y.
    pub fn tau(&self, y: f64, gamma: f64) -> Option<Result<f64, GreensError>> {
        match self {
            TauModel::Balls { unit, balls } => {
                let b = balls.iter().find(|b| (y - b.center).abs() < b.radius)?;
                Some(unit.eval((y - b.center) / b.radius).map(|t| t * b.radius.powf(-gamma)))
            }
            TauModel::Lobes { tables } => {
                let t = tables.iter().find(|t| {
                    let (lo, hi) = t.range();
                    y >= lo && y <= hi
                })?;
                Some(t.eval(y))
            }
            TauModel::Solve => None,
        }
    }

    pub fn tau_derivative(&self, y: f64, h: f64, gamma: f64) -> Option<Result<f64, GreensError>> {
        match self {
            TauModel::Balls { unit, balls } => {
                let b = balls.iter().find(|b| (y - b.center).abs() < b.radius)?;
                let r = b.radius;
                Some(unit.derivative((y - b.center) / r, h / r).map(|t| t * r.powf(-gamma - 1.0)))
            }
            TauModel::Lobes { tables } => {
                let t = tables.iter().find(|t| {
                    let (lo, hi) = t.range();
                    y >= lo && y <= hi
                })?;
                Some(t.derivative(y, h))
            }
            TauModel::Solve => None,
        }
    }
}

/// Everything the reduced functionals need at one parameter point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReducedModel {
    pub exps: CriticalExponents,
    pub constants: ReductionConstants,
    pub a_np: f64,
    pub b_np: f64,
    pub domain: DomainSpec,
    pub green: GreenOptions,
    pub tau: TauModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    /// ((p+1)A₁ + (q+1)Ã₁)/N, used by the functional.
    pub c1: f64,
    /// (A₁ + Ã₁)/N, the unweighted alternative, reported only.
    pub c1_unweighted: f64,
    /// (b/γ_N)^p A₂.
    pub c2: f64,
    /// a A₄.
    pub c_interaction: f64,
    /// (b/γ_N)^p A₃.
    pub c_gradient: f64,
}

impl Coefficients {
    /// Stationary d of the one-peak slow functional C₁ ln d - C₂ τ d^γ,
    /// d^γ = C₁/(γ C₂ τ). None when that ratio is not positive.
    pub fn single_peak_d(&self, tau: f64, gamma: f64) -> Option<f64> {
        let r = self.c1 / (gamma * self.c2 * tau);
        (r > 0.0 && r.is_finite()).then(|| r.powf(1.0 / gamma))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub d: Vec<f64>,
    pub xi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G0Terms {
    pub epsilon: f64,
    pub mu: f64,
    pub value: f64,
    pub log_term: f64,
    pub ln_d_term: f64,
    pub h_term: f64,
    pub interaction_term: f64,
    /// ε/L² and μ^γ; equal on the scaling law.
    pub scale_ln: f64,
    pub scale_mu: f64,
    /// Size of the first dropped correction relative to the kept terms, 1/|ln μ|.
    pub remainder_ratio: f64,
    pub h_tilde: Vec<f64>,
}

impl ReducedModel {
    pub fn new(
        exps: CriticalExponents,
        constants: ReductionConstants,
        tails: &TailConstants,
        domain: DomainSpec,
        green: GreenOptions,
        tau: TauModel,
    ) -> Self {
        ReducedModel { exps, constants, a_np: tails.a_np, b_np: tails.b_np, domain: domain.normalized(), green, tau }
    }

    pub fn coefficients(&self) -> Coefficients {
        let e = &self.exps;
        let c = &self.constants;
        let nf = e.n as f64;
        let bg = (self.b_np / e.gamma_n()).powf(e.p);
        Coefficients {
            c1: ((e.p + 1.0) * c.a1 + (e.q + 1.0) * c.a1_tilde) / nf,
            c1_unweighted: (c.a1 + c.a1_tilde) / nf,
            c2: bg * c.a2,
            c_interaction: self.a_np * c.a4,
            c_gradient: bg * c.a3,
        }
    }

    fn alpha(&self) -> f64 {
        self.exps.n as f64 / (self.exps.q + 1.0)
    }

    /// Meridian grid spacing used by the Green solves.
    pub fn grid_spacing(&self) -> f64 {
        let (lo, hi, _) = self.domain.bounding_box();
        (hi - lo) / self.green.nx as f64
    }

    fn component_of(&self, y: f64) -> Option<usize> {
        let comps = self.domain.components();
        comps.iter().position(|c| c.contains(y, 0.0))
    }

    /// Whether peaks i and j interact (same connected component).
    fn interacting(&self, xi: &[f64], i: usize, j: usize) -> bool {
        self.component_of(xi[i]) == self.component_of(xi[j])
    }

    /// H̃_{d,ξ}(ξ_i) for every peak.
    pub fn h_tilde(&self, cfg: &Configuration) -> Result<Vec<f64>, ReducedError> {
        let k = cfg.xi.len();
        if cfg.d.len() != k {
            return Err(ReducedError::InvalidConfiguration("d and xi lengths differ".into()));
        }
        let comp: Vec<Option<usize>> = cfg.xi.iter().map(|&y| self.component_of(y)).collect();
        if comp.iter().any(Option::is_none) {
            return Err(ReducedError::InvalidConfiguration("a peak lies outside the domain".into()));
        }
        let alone = (0..k).all(|i| (0..k).all(|j| i == j || comp[i] != comp[j]));
        let pw = self.exps.n as f64 * self.exps.p / (self.exps.q + 1.0);
        if alone {
            let tabled: Option<Vec<_>> = cfg.xi.iter().map(|&y| self.tau.tau(y, self.exps.gamma_u)).collect();
            if let Some(v) = tabled {
                return v
                    .into_iter()
                    .zip(&cfg.d)
                    .map(|(t, d)| Ok(t? * d.powf(pw)))
                    .collect();
            }
        }
        Ok(htilde_config(&self.domain, &cfg.d, &cfg.xi, &self.exps, &self.green)?.values)
    }

    /// Single-peak τ̃(y) = H̃_{1,y}(y).
    pub fn tau_tilde(&self, y: f64) -> Result<f64, ReducedError> {
        match self.tau.tau(y, self.exps.gamma_u) {
            Some(v) => Ok(v?),
            None => Ok(crate::greens::tau_tilde(&self.domain, y, &self.exps, &self.green)?),
        }
    }

    pub fn tau_derivative(&self, y: f64) -> Result<f64, ReducedError> {
        let h = self.grid_spacing();
        match self.tau.tau_derivative(y, h, self.exps.gamma_u) {
            Some(v) => Ok(v?),
            None => Ok((self.tau_tilde(y + h)? - self.tau_tilde(y - h)?) / (2.0 * h)),
        }
    }

    fn interaction(&self, cfg: &Configuration) -> f64 {
        let a = self.alpha();
        let p = self.exps.p;
        let g = self.exps.gamma_u;
        let k = cfg.xi.len();
        let mut s = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j && self.interacting(&cfg.xi, i, j) {
                    s += cfg.d[i].powf(2.0 * a) * cfg.d[j].powf((p - 1.0) * a) * (cfg.xi[i] - cfg.xi[j]).abs().powf(-g);
                }
            }
        }
        s
    }

    pub fn eval_g0(&self, cfg: &Configuration, epsilon: f64) -> Result<G0Terms, ReducedError> {
        let mu = mu_from_eps(epsilon, &self.exps)?;
        let l = -mu.ln();
        let c = self.coefficients();
        let k = cfg.xi.len() as f64;
        let ht = self.h_tilde(cfg)?;
        let a = self.alpha();
        let sum_ln_d: f64 = cfg.d.iter().map(|d| d.ln()).sum();
        let sum_h: f64 = cfg.d.iter().zip(&ht).map(|(d, h)| d.powf(a) * h).sum();
        let scale_ln = epsilon / (l * l);
        let scale_mu = mu.powf(self.exps.gamma_u);
        let log_term = -k * c.c1 * epsilon / l;
        let ln_d_term = -c.c1 * scale_ln * sum_ln_d;
        let h_term = scale_mu * c.c2 * sum_h;
        let interaction_term = -scale_mu * c.c_interaction * self.interaction(cfg);
        Ok(G0Terms {
            epsilon,
            mu,
            value: log_term + ln_d_term + h_term + interaction_term,
            log_term,
            ln_d_term,
            h_term,
            interaction_term,
            scale_ln,
            scale_mu,
            remainder_ratio: 1.0 / l,
            h_tilde: ht,
        })
    }

    /// Axial components of G_h, one per peak.
    pub fn eval_gh(&self, cfg: &Configuration, epsilon: f64) -> Result<Vec<f64>, ReducedError> {
        let mu = mu_from_eps(epsilon, &self.exps)?;
        let c = self.coefficients();
        let scale = c.c_gradient * mu.powf(self.exps.gamma_u + 1.0);
        let a = self.alpha();
        cfg.d
            .iter()
            .zip(&cfg.xi)
            .map(|(&d, &y)| Ok(scale * d.powf(a + 1.0) * self.tau_derivative(y)?))
            .collect()
    }

    /// The slow functional J(d, ξ).
    pub fn slow(&self, cfg: &Configuration) -> Result<f64, ReducedError> {
        let c = self.coefficients();
        let ht = self.h_tilde(cfg)?;
        let a = self.alpha();
        let sum_ln_d: f64 = cfg.d.iter().map(|d| d.ln()).sum();
        let sum_h: f64 = cfg.d.iter().zip(&ht).map(|(d, h)| d.powf(a) * h).sum();
        Ok((c.c1 * sum_ln_d - c.c2 * sum_h + c.c_interaction * self.interaction(cfg)) / c.c1.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_reproduces_cubics() {
        let f = |x: f64| 1.0 + x * x - 0.3 * x.powi(3);
        let t = AxisTable { x0: -1.0, dx: 0.25, values: (0..9).map(|j| f(-1.0 + 0.25 * j as f64)).collect(), even: false };
        for &x in &[-1.0, -0.9, 0.13, 0.99, 1.0] {
            assert!((t.eval(x).unwrap() - f(x)).abs() < 1e-13);
        }
        assert!(t.eval(1.1).is_err());
    }

    #[test]
    fn even_table_is_symmetric() {
        let t = AxisTable { x0: 0.0, dx: 0.1, values: (0..10).map(|j| (0.1 * j as f64).powi(2).cos()).collect(), even: true };
        for &x in &[0.03, 0.41, 0.85] {
            assert_eq!(t.eval(x).unwrap(), t.eval(-x).unwrap());
        }
        assert!(t.derivative(0.0, 0.01).unwrap().abs() < 1e-15);
    }
}

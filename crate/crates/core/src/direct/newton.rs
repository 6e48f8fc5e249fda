//! Radial Newton solver for
//!
//!   -Δu = f_ε(v),  -Δv = g_ε(u)  in B_R,   u = v = 0 on ∂B_R,
//!
//! discretised by finite volumes on a mapped radial grid.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::bubble::{evaluate_bubble_radial, BubbleProfile};
use crate::direct::nonlinearity::Nonlinearity;
use crate::error::DirectError;

/// Node placement r_j = R·φ(j/M).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GridMap {
    /// φ(x) = x², uniform in s = √r.
    Sqrt,
    /// φ(x) = (e^{κx} - 1)/(e^κ - 1): h/r is nearly constant away from 0.
    Geometric { kappa: f64 },
}

impl GridMap {
    fn phi(self, x: f64) -> f64 {
        match self {
            GridMap::Sqrt => x * x,
            GridMap::Geometric { kappa } => (kappa * x).exp_m1() / kappa.exp_m1(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub n: usize,
    pub radius: f64,
    /// Nodes r_0 = 0 < … < r_M = R.
    pub r: Vec<f64>,
    /// a[j] = r_{j+1/2}^{N-1} / (r_{j+1} - r_j).
    face: Vec<f64>,
    /// Control-volume measure (r_{j+1/2}^N - r_{j-1/2}^N)/N.
    vol: Vec<f64>,
}

impl RadialGrid {
    /// `cells` intervals, r_j = R (j/M)².
    pub fn new(n: usize, radius: f64, cells: usize) -> Self {
        Self::mapped(n, radius, cells, GridMap::Sqrt)
    }

    pub fn mapped(n: usize, radius: f64, cells: usize, map: GridMap) -> Self {
        let m = cells;
        let node = |x: f64| radius * map.phi(x / m as f64);
        let r: Vec<f64> = (0..=m).map(|j| node(j as f64)).collect();
        let nf = n as f64;
        let face = (0..m).map(|j| node(j as f64 + 0.5).powi(n as i32 - 1) / (r[j + 1] - r[j])).collect();
        let vol = (0..m)
            .map(|j| {
                let lo = if j == 0 { 0.0 } else { node(j as f64 - 0.5) };
                (node(j as f64 + 0.5).powi(n as i32) - lo.powi(n as i32)) / nf
            })
            .collect();
        RadialGrid { n, radius, r, face, vol }
    }

    pub fn cells(&self) -> usize {
        self.r.len() - 1
    }

    /// Nodes strictly inside r < μ.
    pub fn cells_within(&self, mu: f64) -> usize {
        self.r.iter().filter(|&&r| r < mu).count()
    }

    /// (A w)_j: the flux balance of w over cell j, with w_M = 0.
    fn apply(&self, w: &[f64], j: usize) -> f64 {
        let m = self.cells();
        let right = if j + 1 < m { w[j + 1] } else { 0.0 };
        let mut s = self.face[j] * (w[j] - right);
        if j > 0 {
            s += self.face[j - 1] * (w[j] - w[j - 1]);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub cells: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    /// Nodes required inside r < μ.
    pub min_cells: usize,
    pub map: GridMap,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { cells: 4096, tol: 1e-10, max_iter: 400, armijo: 1e-4, min_cells: 20, map: GridMap::Geometric { kappa: 14.0 } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub epsilon: f64,
    pub newton_residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub peak_height: f64,
    /// u(0)^{-(q+1)/N}.
    pub mu_num: f64,
    pub positive: bool,
    pub decreasing: bool,
}

/// Extra source terms added to the right-hand sides, for manufactured tests.
pub type Forcing<'a> = (&'a (dyn Fn(f64) -> f64 + Sync), &'a (dyn Fn(f64) -> f64 + Sync));

struct Residual {
    fu: Vec<f64>,
    fv: Vec<f64>,
    rel: f64,
    /// Σ F²/vol over both components; the line-search merit.
    abs2: f64,
}

fn residual(grid: &RadialGrid, nl: &Nonlinearity, u: &[f64], v: &[f64], forcing: Option<Forcing>) -> Residual {
    let m = grid.cells();
    let mut fu = vec![0.0; m];
    let mut fv = vec![0.0; m];
    let (mut nu, mut nv, mut su, mut sv) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..m {
        let vol = grid.vol[j];
        let (mut a, mut b) = (nl.f(v[j]).0, nl.g(u[j]).0);
        if let Some((pu, pv)) = forcing {
            a += pu(grid.r[j]);
            b += pv(grid.r[j]);
        }
        fu[j] = grid.apply(u, j) - vol * a;
        fv[j] = grid.apply(v, j) - vol * b;
        nu += fu[j] * fu[j] / vol;
        nv += fv[j] * fv[j] / vol;
        su += vol * a * a;
        sv += vol * b * b;
    }
    let rel = (nu / su.max(f64::MIN_POSITIVE)).sqrt().max((nv / sv.max(f64::MIN_POSITIVE)).sqrt());
    Residual { fu, fv, rel, abs2: nu + nv }
}

/// Solves J δ = -F by block Thomas elimination with 2×2 node blocks.
fn newton_step(grid: &RadialGrid, nl: &Nonlinearity, u: &[f64], v: &[f64], res: &Residual) -> (Vec<f64>, Vec<f64>) {
    let m = grid.cells();
    let mut cp: Vec<Matrix2<f64>> = Vec::with_capacity(m);
    let mut yp: Vec<Vector2<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let vol = grid.vol[j];
        let left = if j > 0 { grid.face[j - 1] } else { 0.0 };
        let right = if j + 1 < m { grid.face[j] } else { 0.0 };
        let d = grid.face[j] + left;
        let mut blk = Matrix2::new(d, -vol * nl.f(v[j]).1, -vol * nl.g(u[j]).1, d);
        let mut rhs = Vector2::new(-res.fu[j], -res.fv[j]);
        if j > 0 {
            // lower block is -left·I
            blk += left * cp[j - 1];
            rhs += left * yp[j - 1];
        }
        let inv = blk.try_inverse().unwrap_or_else(|| Matrix2::identity() / d);
        cp.push(inv * (-right));
        yp.push(inv * rhs);
    }
    let mut du = vec![0.0; m];
    let mut dv = vec![0.0; m];
    let mut next = Vector2::zeros();
    for j in (0..m).rev() {
        let x = if j + 1 < m { yp[j] - cp[j] * next } else { yp[j] };
        du[j] = x[0];
        dv[j] = x[1];
        next = x;
    }
    (du, dv)
}

/// Bubble ansatz U_μ(r) - U_μ(R), V_μ(r) - V_μ(R) sampled at the nodes.
pub fn bubble_ansatz(profile: &BubbleProfile, grid: &RadialGrid, mu: f64) -> (Vec<f64>, Vec<f64>) {
    let (ur, vr) = evaluate_bubble_radial(profile, mu, grid.radius);
    let m = grid.cells();
    (0..m)
        .map(|j| {
            let (a, b) = evaluate_bubble_radial(profile, mu, grid.r[j]);
            (a - ur, b - vr)
        })
        .unzip()
}

pub fn radial_newton(
    nl: &Nonlinearity,
    grid: &RadialGrid,
    init: (Vec<f64>, Vec<f64>),
    opts: &NewtonOptions,
) -> Result<RadialSolution, DirectError> {
    radial_newton_forced(nl, grid, init, None, opts)
}

pub fn radial_newton_forced(
    nl: &Nonlinearity,
    grid: &RadialGrid,
    init: (Vec<f64>, Vec<f64>),
    forcing: Option<Forcing>,
    opts: &NewtonOptions,
) -> Result<RadialSolution, DirectError> {
    let (mut u, mut v) = init;
    let m = grid.cells();
    assert_eq!(u.len(), m);
    let exps = &nl.exps;
    let alpha = exps.n as f64 / (exps.q + 1.0);
    if forcing.is_none() {
        let mu0 = u[0].powf(-1.0 / alpha);
        let cells = grid.cells_within(mu0);
        if cells < opts.min_cells {
            return Err(DirectError::Unresolved { mu: mu0, cells, required: opts.min_cells });
        }
    }
    let mut res = residual(grid, nl, &u, &v, forcing);
    let mut history = vec![res.rel];
    let mut growth = 0;
    let mut it = 0;
    while res.rel > opts.tol {
        if it >= opts.max_iter {
            return Err(DirectError::Diverged(format!("no convergence in {it} iterations, residual {:e}", res.rel)));
        }
        it += 1;
        let (du, dv) = newton_step(grid, nl, &u, &v, &res);
        let merit = res.abs2;
        let mut lambda = 1.0;
        let accepted = loop {
            let un: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + lambda * b).collect();
            let vn: Vec<f64> = v.iter().zip(&dv).map(|(a, b)| a + lambda * b).collect();
            let rn = residual(grid, nl, &un, &vn, forcing);
            if rn.abs2.is_finite() && rn.abs2 <= (1.0 - 2.0 * opts.armijo * lambda) * merit {
                break Some((un, vn, rn));
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                break None;
            }
        };
        let Some((un, vn, rn)) = accepted else {
            // Take the full step anyway; repeated growth ends the solve.
            growth += 1;
            if growth >= 5 {
                return Err(DirectError::Diverged(format!("line search failed, residual {:e}", res.rel)));
            }
            let un: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
            let vn: Vec<f64> = v.iter().zip(&dv).map(|(a, b)| a + b).collect();
            res = residual(grid, nl, &un, &vn, forcing);
            if !res.rel.is_finite() {
                return Err(DirectError::Diverged("non-finite residual".into()));
            }
            u = un;
            v = vn;
            history.push(res.rel);
            continue;
        };
        growth = if rn.rel > res.rel { growth + 1 } else { 0 };
        u = un;
        v = vn;
        res = rn;
        history.push(res.rel);
    }
    let mut uf = u.clone();
    let mut vf = v.clone();
    uf.push(0.0);
    vf.push(0.0);
    let positive = u.iter().chain(&v).all(|&x| x > 0.0);
    let decreasing = uf.windows(2).all(|w| w[1] <= w[0]);
    let peak = u[0];
    let mu_num = peak.powf(-1.0 / alpha);
    if forcing.is_none() {
        let cells = grid.cells_within(mu_num);
        if cells < opts.min_cells {
            return Err(DirectError::Unresolved { mu: mu_num, cells, required: opts.min_cells });
        }
    }
    Ok(RadialSolution {
        r: grid.r.clone(),
        u: uf,
        v: vf,
        epsilon: nl.epsilon,
        newton_residual: res.rel,
        iterations: it,
        residual_history: history,
        peak_height: peak,
        mu_num,
        positive,
        decreasing,
    })
}

/// Sum of J·x over both components at node j, for Jacobian checks.
pub fn jacobian_action(
    grid: &RadialGrid,
    nl: &Nonlinearity,
    u: &[f64],
    v: &[f64],
    xu: &[f64],
    xv: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let m = grid.cells();
    (0..m)
        .map(|j| {
            let vol = grid.vol[j];
            (
                grid.apply(xu, j) - vol * nl.f(v[j]).1 * xv[j],
                grid.apply(xv, j) - vol * nl.g(u[j]).1 * xu[j],
            )
        })
        .unzip()
}

/// The residual F(u, v) itself.
pub fn residual_vector(grid: &RadialGrid, nl: &Nonlinearity, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let r = residual(grid, nl, u, v, None);
    (r.fu, r.fv)
}

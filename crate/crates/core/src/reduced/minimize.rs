//! Seeds, box-projected Nelder–Mead, and classification of located minima.

use serde::{Deserialize, Serialize};

use crate::error::ReducedError;
use crate::par::{self, Exec};
use crate::reduced::functional::{Configuration, ReducedModel};

/// The admissible box Λ: d_i ∈ [δ₁, 1/δ₁], dist(ξ_i, ∂Ω) ≥ δ₂, |ξ_i - ξ_j| ≥ δ₂.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaBox {
    pub delta1: f64,
    pub delta2: f64,
}

impl LambdaBox {
    /// δ₁ = 0.1 and δ₂ = 0.1·diameter.
    pub fn default_for(model: &ReducedModel) -> Self {
        LambdaBox { delta1: 0.1, delta2: 0.1 * model.domain.diameter() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub xtol: f64,
    pub ftol: f64,
    /// Iteration cap per dimension.
    pub iter_per_dim: usize,
    /// Fresh-simplex restarts after the first run.
    pub restarts: usize,
    pub exec: Exec,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { xtol: 1e-8, ftol: 1e-13, iter_per_dim: 200, restarts: 2, exec: Exec::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    /// Indices of the lobes (balls) carrying a peak.
    pub lobes: Vec<usize>,
    pub config: Configuration,
}

/// All k-subsets of {0, …, l-1} in lexicographic order.
pub fn enumerate_lobe_subsets(l: usize, k: usize) -> Result<Vec<Vec<usize>>, ReducedError> {
    if k == 0 || k > l {
        return Err(ReducedError::TooManyPeaks { k, l });
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < l - k + i) else {
            return Ok(out);
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// One seed per k-subset of lobes: peaks at the lobe centres with d = 1.
pub fn lobe_seeds(model: &ReducedModel, k: usize) -> Result<Vec<Seed>, ReducedError> {
    let balls = model.domain.balls();
    Ok(enumerate_lobe_subsets(balls.len(), k)?
        .into_iter()
        .map(|lobes| {
            let xi = lobes.iter().map(|&i| balls[i].center).collect();
            Seed { config: Configuration { d: vec![1.0; k], xi }, lobes }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocatedMinimum {
    pub seed: usize,
    pub lobes: Vec<usize>,
    pub config: Configuration,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub interior: bool,
    /// ∂J/∂(ln d_i) by central differences.
    pub grad_log_d: Vec<f64>,
    /// ∂J/∂ξ_i by central differences.
    pub grad_xi: Vec<f64>,
}

struct Box01 {
    lo: Vec<f64>,
    hi: Vec<f64>,
    k: usize,
}

impl Box01 {
    fn to_config(&self, z: &[f64]) -> Configuration {
        let x: Vec<f64> = z.iter().zip(self.lo.iter().zip(&self.hi)).map(|(z, (l, h))| l + z * (h - l)).collect();
        Configuration { d: x[..self.k].iter().map(|v| v.exp()).collect(), xi: x[self.k..].to_vec() }
    }

    fn to_unit(&self, c: &Configuration) -> Vec<f64> {
        c.d.iter()
            .map(|d| d.ln())
            .chain(c.xi.iter().copied())
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(x, (l, h))| ((x - l) / (h - l)).clamp(0.0, 1.0))
            .collect()
    }
}

fn project(z: &mut [f64]) {
    for v in z {
        *v = v.clamp(0.0, 1.0);
    }
}

struct NmResult {
    z: Vec<f64>,
    f: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
}

fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, z0: &[f64], step: f64, opts: &MinimizeOptions) -> NmResult {
    let n = z0.len();
    let mut evals = 0;
    let mut eval = |z: &[f64]| {
        evals += 1;
        f(z)
    };
    let mut simplex: Vec<Vec<f64>> = vec![z0.to_vec()];
    for i in 0..n {
        let mut z = z0.to_vec();
        z[i] = if z[i] + step <= 1.0 { z[i] + step } else { z[i] - step };
        simplex.push(z);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|z| eval(z)).collect();
    let cap = opts.iter_per_dim * n;
    let mut it = 0;
    let mut converged = false;
    while it < cap {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        fv = idx.iter().map(|&i| fv[i]).collect();
        let size = simplex[1..]
            .iter()
            .map(|z| z.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size <= opts.xtol && (fv[n] - fv[0]).abs() <= opts.ftol * (1.0 + fv[0].abs()) {
            converged = true;
            break;
        }
        it += 1;
        let cen: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|z| z[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| {
            let mut z: Vec<f64> = cen.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect();
            project(&mut z);
            z
        };
        let zr = along(1.0);
        let fr = eval(&zr);
        if fr < fv[0] {
            let ze = along(2.0);
            let fe = eval(&ze);
            if fe < fr {
                simplex[n] = ze;
                fv[n] = fe;
            } else {
                simplex[n] = zr;
                fv[n] = fr;
            }
        } else if fr < fv[n - 1] {
            simplex[n] = zr;
            fv[n] = fr;
        } else {
            let (zc, fc) = if fr < fv[n] {
                let z = along(0.5);
                let f = eval(&z);
                (z, f)
            } else {
                let z = along(-0.5);
                let f = eval(&z);
                (z, f)
            };
            if fc < fv[n].min(fr) {
                simplex[n] = zc;
                fv[n] = fc;
            } else {
                for i in 1..=n {
                    let z: Vec<f64> = simplex[i].iter().zip(&simplex[0]).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    fv[i] = eval(&z);
                    simplex[i] = z;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| fv[a].total_cmp(&fv[b])).unwrap();
    NmResult { z: simplex[best].clone(), f: fv[best], iterations: it, evaluations: evals, converged }
}

/// Bounds on (ln d_i, ξ_i): ξ_i stays in the axis chord of the ball
/// (lobe) holding its seed, shrunk by δ₂.
fn bounds(model: &ReducedModel, seed: &Seed, lam: &LambdaBox) -> Result<Box01, ReducedError> {
    let k = seed.config.xi.len();
    let balls = model.domain.balls();
    let mut lo = vec![lam.delta1.ln(); k];
    let mut hi = vec![-lam.delta1.ln(); k];
    for &y in &seed.config.xi {
        let b = balls
            .iter()
            .find(|b| (y - b.center).abs() < b.radius)
            .ok_or_else(|| ReducedError::InvalidConfiguration(format!("seed point {y} is in no lobe")))?;
        let (a, c) = (b.center - b.radius + lam.delta2, b.center + b.radius - lam.delta2);
        if !(a < c) {
            return Err(ReducedError::InvalidConfiguration(format!("delta2 = {} leaves no room in a lobe", lam.delta2)));
        }
        lo.push(a);
        hi.push(c);
    }
    if !(lam.delta1 > 0.0 && lam.delta1 < 1.0) {
        return Err(ReducedError::InvalidConfiguration(format!("delta1 = {} not in (0, 1)", lam.delta1)));
    }
    Ok(Box01 { lo, hi, k })
}

fn separated(c: &Configuration, delta2: f64) -> bool {
    let k = c.xi.len();
    (0..k).all(|i| (i + 1..k).all(|j| (c.xi[i] - c.xi[j]).abs() >= delta2))
}

fn central_gradient(model: &ReducedModel, c: &Configuration) -> Result<(Vec<f64>, Vec<f64>), ReducedError> {
    let k = c.xi.len();
    let mut gd = Vec::with_capacity(k);
    let mut gx = Vec::with_capacity(k);
    let hd: f64 = 1e-5;
    let hx = 1e-5 * model.domain.diameter();
    for i in 0..k {
        let mut p = c.clone();
        let mut m = c.clone();
        p.d[i] *= hd.exp();
        m.d[i] *= (-hd).exp();
        gd.push((model.slow(&p)? - model.slow(&m)?) / (2.0 * hd));
        let mut p = c.clone();
        let mut m = c.clone();
        p.xi[i] += hx;
        m.xi[i] -= hx;
        gx.push((model.slow(&p)? - model.slow(&m)?) / (2.0 * hx));
    }
    Ok((gd, gx))
}

/// Minimizes the slow functional from each seed. Seeds run in parallel.
pub fn minimize(
    model: &ReducedModel,
    seeds: &[Seed],
    lam: &LambdaBox,
    opts: &MinimizeOptions,
) -> Result<Vec<LocatedMinimum>, ReducedError> {
    let res = par::map_range(opts.exec, seeds.len(), |s| minimize_one(model, s, &seeds[s], lam, opts));
    res.into_iter().collect()
}

fn minimize_one(
    model: &ReducedModel,
    index: usize,
    seed: &Seed,
    lam: &LambdaBox,
    opts: &MinimizeOptions,
) -> Result<LocatedMinimum, ReducedError> {
    let bx = bounds(model, seed, lam)?;
    let err = std::sync::Mutex::new(None);
    let f = |z: &[f64]| {
        let c = bx.to_config(z);
        if !separated(&c, lam.delta2) {
            return f64::INFINITY;
        }
        match model.slow(&c) {
            Ok(v) => v,
            Err(e) => {
                err.lock().unwrap().get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    let mut z = bx.to_unit(&seed.config);
    let mut r = nelder_mead(&f, &z, 0.05, opts);
    let (mut iterations, mut evaluations) = (r.iterations, r.evaluations);
    for _ in 0..opts.restarts {
        z = r.z.clone();
        let again = nelder_mead(&f, &z, 1e-3, opts);
        iterations += again.iterations;
        evaluations += again.evaluations;
        let done = again.converged && (again.f - r.f).abs() <= opts.ftol * (1.0 + r.f.abs());
        r = again;
        if done {
            break;
        }
    }
    if let Some(e) = err.into_inner().unwrap() {
        if !r.f.is_finite() {
            return Err(e);
        }
    }
    let config = bx.to_config(&r.z);
    let pinned = r.z.iter().any(|&v| v <= 1e-7 || v >= 1.0 - 1e-7);
    let (grad_log_d, grad_xi) = central_gradient(model, &config)?;
    Ok(LocatedMinimum {
        seed: index,
        lobes: seed.lobes.clone(),
        value: r.f,
        config,
        iterations,
        evaluations,
        converged: r.converged,
        interior: !pinned,
        grad_log_d,
        grad_xi,
    })
}

/// Groups minima whose (d, ξ) points, with peaks ordered along the axis,
/// lie within `tol` of each other. Returns one representative index per class.
pub fn distinct_minima(minima: &[LocatedMinimum], tol: f64) -> Vec<usize> {
    let key = |m: &LocatedMinimum| {
        let mut v: Vec<(f64, f64)> = m.config.xi.iter().copied().zip(m.config.d.iter().copied()).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let mut reps: Vec<usize> = Vec::new();
    for (i, m) in minima.iter().enumerate() {
        let ki = key(m);
        let dup = reps.iter().any(|&r| {
            let kr = key(&minima[r]);
            kr.len() == ki.len()
                && kr.iter().zip(&ki).all(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()) < tol)
        });
        if !dup {
            reps.push(i);
        }
    }
    reps
}

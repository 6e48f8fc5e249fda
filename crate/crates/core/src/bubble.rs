//! Radial ground state of the critical limit system
//!
//!   -ΔU = V^p,  -ΔV = U^q  in R^N,  U(0) = 1,
//!
//! by shooting on beta = V(0). Trajectories are integrated in t = ln r with
//! state (U, rU', V, rV'). A shot with beta too small loses V first, one with
//! beta too large loses U first; the ground state sits between.
//!
//! Bisection is carried out first in f64 and then refined in double-double,
//! because the separation between bracketing trajectories grows like r^N and
//! f64 alone only resolves the profile out to r of order 100.

use serde::{Deserialize, Serialize};

use crate::dd::{signed_pow, Dd, Real};
use crate::error::BubbleError;
use crate::exponents::CriticalExponents;
use crate::ode::{Gbs, Stepper, System};
use crate::par::{self, Exec};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShootOptions {
    pub r0: f64,
    pub r_max: f64,
    /// Tolerance of the f64 integration pass and of the residual contract.
    pub rtol: f64,
    /// Initial bracket for beta; searched for automatically when absent.
    pub bracket: Option<(f64, f64)>,
    /// Refine in double-double after the f64 pass.
    pub precise: bool,
    pub dd_rtol: f64,
    /// Output mesh density, nodes per unit of ln r.
    pub points_per_unit: f64,
    /// Relative agreement required between the two bracketing trajectories
    /// for a mesh node to count as resolved.
    pub valid_tol: f64,
    /// Tail fit window as fractions of the last resolved radius.
    pub fit_window: (f64, f64),
    /// Shots are classified out to this radius, beyond R_max, so the bracket
    /// can shrink further than R_max alone would resolve.
    pub r_classify: f64,
    /// Points evaluated per multisection round. Fixed so results do not
    /// depend on the execution policy.
    pub multisection: usize,
    pub exec: Exec,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            r0: 1e-8,
            r_max: 1e6,
            rtol: 1e-12,
            bracket: None,
            precise: true,
            dd_rtol: 1e-28,
            points_per_unit: 50.0,
            valid_tol: 1e-10,
            fit_window: (0.01, 1.0),
            r_classify: 1e12,
            multisection: 7,
            exec: Exec::Parallel,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class {
    /// U reached zero first: beta above the ground state.
    UFirst,
    /// V reached zero first: beta below the ground state.
    VFirst,
    /// Both components stayed positive up to R_max.
    Decaying,
}

/// The limit system in t = ln r.
///
/// q is carried as a double-double pair so that (p, q) lies on the critical
/// hyperbola to the working precision; an f64-rounded q is off-critical by
/// about 1e-16, which leaves a constant of that order in the U tail.
pub struct LimitSystem {
    pub n: f64,
    pub p: f64,
    pub q: (f64, f64),
}

/// q = N(p+1)/((N-2)p-2) - 1 as a double-double pair.
pub fn q_pair(exps: &CriticalExponents) -> (f64, f64) {
    let nf = exps.nf();
    let p = Dd::from(exps.p);
    let q = (p + 1.0) * nf / ((p * (nf - 2.0)) + (-2.0)) + (-1.0);
    (q.hi(), q.lo())
}

impl<T: Real> System<T, 4> for LimitSystem {
    fn rhs(&self, t: T, y: &[T; 4]) -> [T; 4] {
        let two_t = t * 2.0;
        let src = |x: T, e: T| -> T {
            let xf = x.to_f64();
            if xf == 0.0 {
                return T::zero();
            }
            let m = (two_t + x.abs().ln() * e).exp();
            if xf < 0.0 {
                -m
            } else {
                m
            }
        };
        let c = 2.0 - self.n;
        [
            y[1],
            y[1] * c - src(y[2], T::from_f64(self.p)),
            y[3],
            y[3] * c - src(y[0], T::from_pair(self.q.0, self.q.1)),
        ]
    }

    fn scale(&self, y: &[T; 4], y_new: &[T; 4]) -> [f64; 4] {
        let m = |a: &[T; 4], i: usize| a[i].to_f64().abs().max(a[i + 1].to_f64().abs());
        let su = m(y, 0).max(m(y_new, 0));
        let sv = m(y, 2).max(m(y_new, 2));
        [su, su, sv, sv]
    }
}

fn initial_state<T: Real>(exps: &CriticalExponents, beta: T, r0: f64) -> [T; 4] {
    let nf = exps.nf();
    let r2 = T::from_f64(r0) * T::from_f64(r0);
    let bp = signed_pow(beta, exps.p);
    [
        -(bp * r2 * (1.0 / (2.0 * nf))) + 1.0,
        -(bp * r2 * (1.0 / nf)),
        beta - r2 * (1.0 / (2.0 * nf)),
        -(r2 * (1.0 / nf)),
    ]
}

fn system(exps: &CriticalExponents) -> LimitSystem {
    LimitSystem { n: exps.nf(), p: exps.p, q: q_pair(exps) }
}

/// Integrate one shot and report which component fails first.
pub fn classify<T: Real>(
    exps: &CriticalExponents,
    beta: T,
    gbs: Gbs,
    opts: &ShootOptions,
) -> Result<Class, BubbleError> {
    let sys = system(exps);
    let y0 = initial_state(exps, beta, opts.r0);
    let t0 = T::from_f64(opts.r0).ln();
    let t1 = T::from_f64(opts.r_classify.max(opts.r_max)).ln();
    let mut st = Stepper::new(gbs, &sys, t0, y0, 0.05);
    let mut prev = y0;
    let mut class = Class::Decaying;
    st.advance(t1, |_, y| {
        let u = y[0].to_f64();
        let v = y[2].to_f64();
        let c = match (u <= 0.0, v <= 0.0) {
            (false, false) => {
                prev = *y;
                return false;
            }
            (true, false) => Class::UFirst,
            (false, true) => Class::VFirst,
            (true, true) => {
                let fu = prev[0].to_f64() / (prev[0].to_f64() - u);
                let fv = prev[2].to_f64() / (prev[2].to_f64() - v);
                if fu <= fv {
                    Class::UFirst
                } else {
                    Class::VFirst
                }
            }
        };
        class = c;
        true
    })?;
    Ok(class)
}

/// Shrink a bracket (lo: VFirst, hi: UFirst) by repeated multisection until
/// its relative width drops below `tol` or no interior point classifies.
fn multisect<T: Real>(
    exps: &CriticalExponents,
    mut lo: T,
    mut hi: T,
    tol: f64,
    gbs: Gbs,
    opts: &ShootOptions,
) -> Result<(T, T, usize), BubbleError> {
    let m = opts.multisection.max(1);
    let mut rounds = 0;
    while ((hi - lo) / hi).to_f64() > tol {
        rounds += 1;
        if rounds > 400 {
            break;
        }
        let width = hi - lo;
        let pts: Vec<T> = (1..=m).map(|i| lo + width * (i as f64 / (m + 1) as f64)).collect();
        let classes = par::map_slice(opts.exec, &pts, |&b| classify(exps, b, gbs, opts));
        let classes: Result<Vec<Class>, BubbleError> = classes.into_iter().collect();
        let classes = classes?;
        let mut new_lo = lo;
        let mut new_hi = hi;
        let mut i = 0;
        while i < m && classes[i] == Class::VFirst {
            new_lo = pts[i];
            i += 1;
        }
        while i < m {
            if classes[i] == Class::UFirst {
                new_hi = pts[i];
                break;
            }
            i += 1;
        }
        if new_lo == lo && new_hi == hi {
            // Every interior shot decays to R_max: the interval is below the
            // resolution of the classification itself.
            break;
        }
        lo = new_lo;
        hi = new_hi;
    }
    Ok((lo, hi, rounds))
}

fn find_bracket(
    exps: &CriticalExponents,
    gbs: Gbs,
    opts: &ShootOptions,
) -> Result<(f64, f64), BubbleError> {
    if let Some((lo, hi)) = opts.bracket {
        let cl = classify(exps, lo, gbs, opts)?;
        let ch = classify(exps, hi, gbs, opts)?;
        if cl == Class::VFirst && ch == Class::UFirst {
            return Ok((lo, hi));
        }
        return Err(BubbleError::NoBracket(format!(
            "beta = {lo} gives {cl:?} and beta = {hi} gives {ch:?}"
        )));
    }
    let mut b = 1.0;
    let c = classify(exps, b, gbs, opts)?;
    let (target, factor) = match c {
        Class::UFirst => (Class::VFirst, 0.5),
        Class::VFirst => (Class::UFirst, 2.0),
        Class::Decaying => {
            return Err(BubbleError::NoBracket(
                "beta = 1 decays without a sign change; cannot orient the search".into(),
            ))
        }
    };
    let start = b;
    for _ in 0..60 {
        b *= factor;
        let cb = classify(exps, b, gbs, opts)?;
        if cb == target {
            let (lo, hi) = if factor > 1.0 { (b / factor, b) } else { (b, b / factor) };
            return Ok((lo, hi));
        }
        if cb == Class::Decaying {
            return Err(BubbleError::NoBracket(format!(
                "beta = {b} decays without a sign change while searching from {start}"
            )));
        }
    }
    Err(BubbleError::NoBracket("beta search exhausted".into()))
}

pub fn trajectory<T: Real>(
    exps: &CriticalExponents,
    beta: T,
    gbs: Gbs,
    opts: &ShootOptions,
    ts: &[f64],
) -> Result<Vec<[T; 4]>, BubbleError> {
    let sys = system(exps);
    let y0 = initial_state(exps, beta, opts.r0);
    let mut st = Stepper::new(gbs, &sys, T::from_f64(ts[0]), y0, 0.02);
    let mut out = vec![y0];
    for &t in &ts[1..] {
        st.advance(T::from_f64(t), |_, _| false)?;
        out.push(st.y);
        if st.y[0].to_f64() <= 0.0 || st.y[2].to_f64() <= 0.0 {
            break;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShootDiagnostics {
    pub beta_lo: f64,
    pub beta_hi: f64,
    /// Relative width of the final beta bracket.
    pub bracket_width: f64,
    pub f64_rounds: usize,
    pub dd_rounds: usize,
    /// Largest radius where the bracketing trajectories agree to valid_tol.
    pub r_valid: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailConstants {
    pub a_np: f64,
    pub b_np: f64,
    /// Free log-log regression slopes over the fit window.
    pub slope_u: f64,
    pub slope_v: f64,
    pub fit_window: (f64, f64),
    pub rms_residual: f64,
    /// (exponent, coefficient) pairs of the fitted asymptotic series.
    pub u_terms: Vec<(f64, f64)>,
    pub v_terms: Vec<(f64, f64)>,
}

impl TailConstants {
    pub fn u(&self, r: f64) -> f64 {
        self.u_terms.iter().map(|&(e, c)| c * r.powf(e)).sum()
    }
    pub fn v(&self, r: f64) -> f64 {
        self.v_terms.iter().map(|&(e, c)| c * r.powf(e)).sum()
    }
    pub fn du(&self, r: f64) -> f64 {
        self.u_terms.iter().map(|&(e, c)| c * e * r.powf(e - 1.0)).sum()
    }
    pub fn dv(&self, r: f64) -> f64 {
        self.v_terms.iter().map(|&(e, c)| c * e * r.powf(e - 1.0)).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BubbleProfile {
    pub exps: CriticalExponents,
    /// Mesh is uniform in ln r: r[k] = exp(t0 + k dt).
    pub t0: f64,
    pub dt: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    pub psi0: Vec<f64>,
    pub phi0: Vec<f64>,
    pub beta: f64,
    /// Low word of beta when refined in double-double.
    pub beta_lo_word: f64,
    pub u0: f64,
    pub opts: ShootOptions,
    pub diagnostics: ShootDiagnostics,
    pub tail: TailConstants,
}

pub fn shoot_ground_state(
    exps: &CriticalExponents,
    opts: &ShootOptions,
) -> Result<BubbleProfile, BubbleError> {
    let g64 = Gbs::for_f64(opts.rtol * 0.1);
    let (lo, hi) = find_bracket(exps, g64, opts)?;
    let (lo, hi, f64_rounds) = multisect(exps, lo, hi, 1e-14, g64, opts)?;
    let t0 = opts.r0.ln();
    let t1 = opts.r_max.ln();
    let dt = 1.0 / opts.points_per_unit;
    let nt = ((t1 - t0) / dt).floor() as usize + 1;
    let ts: Vec<f64> = (0..nt).map(|k| t0 + k as f64 * dt).collect();

    let (beta_dd, beta_bounds, dd_rounds, trajs): (Dd, (f64, f64), usize, [Vec<[Dd; 4]>; 2]) =
        if opts.precise {
            let gdd = Gbs::for_dd(opts.dd_rtol);
            let c = (Dd::from(lo) + Dd::from(hi)) * 0.5;
            let mut w = 1e-12;
            let (mut blo, mut bhi);
            loop {
                blo = c * (1.0 - w);
                bhi = c * (1.0 + w);
                let cls = par::map_slice(opts.exec, &[blo, bhi], |&b| classify(exps, b, gdd, opts));
                let cl = cls[0].clone()?;
                let ch = cls[1].clone()?;
                if cl == Class::VFirst && ch == Class::UFirst {
                    break;
                }
                w *= 100.0;
                if w > 1e-3 {
                    return Err(BubbleError::Unresolved(
                        "double-double pass could not re-establish the f64 bracket".into(),
                    ));
                }
            }
            let (blo, bhi, rounds) = multisect(exps, blo, bhi, 1e-30, gdd, opts)?;
            let tr = par::map_slice(opts.exec, &[blo, bhi], |&b| trajectory(exps, b, gdd, opts, &ts));
            let mut it = tr.into_iter();
            let a = it.next().unwrap()?;
            let b = it.next().unwrap()?;
            ((blo + bhi) * 0.5, (blo.to_f64(), bhi.to_f64()), rounds, [a, b])
        } else {
            let g = Gbs::for_f64(opts.rtol * 0.1);
            let tr = par::map_slice(opts.exec, &[lo, hi], |&b| trajectory(exps, b, g, opts, &ts));
            let mut it = tr.into_iter();
            let conv = |v: Vec<[f64; 4]>| -> Vec<[Dd; 4]> {
                v.into_iter().map(|s| s.map(Dd::from)).collect()
            };
            let a = conv(it.next().unwrap()?);
            let b = conv(it.next().unwrap()?);
            ((Dd::from(lo) + Dd::from(hi)) * 0.5, (lo, hi), 0, [a, b])
        };

    let [ta, tb] = trajs;
    let m = ta.len().min(tb.len());
    let mut n_ok = 0;
    for k in 0..m {
        let (a, b) = (&ta[k], &tb[k]);
        let u = ((a[0] + b[0]) * 0.5).to_f64();
        let v = ((a[2] + b[2]) * 0.5).to_f64();
        let du = (a[0] - b[0]).to_f64().abs();
        let dv = (a[2] - b[2]).to_f64().abs();
        let pos = a[0].to_f64() > 0.0 && b[0].to_f64() > 0.0 && a[2].to_f64() > 0.0 && b[2].to_f64() > 0.0;
        let dec = a[1].to_f64() < 0.0 && a[3].to_f64() < 0.0;
        if !pos || !dec || du > opts.valid_tol * u || dv > opts.valid_tol * v {
            break;
        }
        n_ok = k + 1;
    }
    // Keep (count - 1) divisible by 4 for the Richardson-Simpson rule.
    let n_keep = if n_ok >= 9 { (n_ok - 1) / 4 * 4 + 1 } else { n_ok };
    if n_keep < 9 {
        return Err(BubbleError::Unresolved(format!(
            "bracketing trajectories disagree after {n_ok} mesh nodes"
        )));
    }
    let (af, vf) = (exps.alpha_u(), exps.alpha_v());
    let mut prof = BubbleProfile {
        exps: *exps,
        t0,
        dt,
        r: Vec::with_capacity(n_keep),
        u: Vec::with_capacity(n_keep),
        v: Vec::with_capacity(n_keep),
        du: Vec::with_capacity(n_keep),
        dv: Vec::with_capacity(n_keep),
        psi0: Vec::with_capacity(n_keep),
        phi0: Vec::with_capacity(n_keep),
        beta: beta_dd.hi(),
        beta_lo_word: beta_dd.lo(),
        u0: 1.0,
        opts: opts.clone(),
        diagnostics: ShootDiagnostics {
            beta_lo: beta_bounds.0,
            beta_hi: beta_bounds.1,
            bracket_width: (beta_bounds.1 - beta_bounds.0) / beta_bounds.1,
            f64_rounds,
            dd_rounds,
            r_valid: 0.0,
        },
        tail: TailConstants {
            a_np: 0.0,
            b_np: 0.0,
            slope_u: 0.0,
            slope_v: 0.0,
            fit_window: (0.0, 0.0),
            rms_residual: 0.0,
            u_terms: vec![],
            v_terms: vec![],
        },
    };
    for k in 0..n_keep {
        let s: [Dd; 4] = [0, 1, 2, 3].map(|i| (ta[k][i] + tb[k][i]) * 0.5);
        let r = Dd::from(ts[k]).exp();
        let rf = r.to_f64();
        prof.r.push(rf);
        prof.u.push(s[0].to_f64());
        prof.v.push(s[2].to_f64());
        prof.du.push((s[1] / r).to_f64());
        prof.dv.push((s[3] / r).to_f64());
        prof.psi0.push((s[1] + s[0] * af).to_f64());
        prof.phi0.push((s[3] + s[2] * vf).to_f64());
    }
    prof.diagnostics.r_valid = *prof.r.last().unwrap();
    prof.tail = tail_constants(&prof, None)?;
    Ok(prof)
}

fn ladder_u(e: &CriticalExponents) -> Vec<f64> {
    let (g, k, l) = (e.gamma_u, e.kappa(), e.lambda());
    vec![-g, -g - k, -g - l, -g - l - k, -g - l - 2.0 * k]
}

fn ladder_v(e: &CriticalExponents) -> Vec<f64> {
    let (k, l) = (e.kappa(), e.lambda());
    let c = 2.0 - e.nf();
    vec![c, c - l, c - l - k, c - l - 2.0 * k]
}

/// Weighted least squares of samples against the series sum c_j r^{e_j}.
/// Terms smaller than 1e-12 of the leading one over the window are dropped.
fn series_fit(r: &[f64], y: &[f64], ladder: &[f64]) -> (Vec<(f64, f64)>, f64) {
    let r_lo = r[0];
    let mut exps: Vec<f64> = Vec::new();
    for &e in ladder {
        if r_lo.powf(e - ladder[0]) < 1e-12 {
            continue;
        }
        if exps.iter().any(|&x| (x - e).abs() < 1e-9) {
            continue;
        }
        exps.push(e);
    }
    let rows = r.len();
    let cols = exps.len();
    let mut a = nalgebra::DMatrix::<f64>::zeros(rows, cols);
    let b = nalgebra::DVector::<f64>::from_element(rows, 1.0);
    for i in 0..rows {
        for j in 0..cols {
            a[(i, j)] = r[i].powf(exps[j]) / y[i];
        }
    }
    let mut norms = vec![0.0; cols];
    for j in 0..cols {
        norms[j] = a.column(j).norm();
        let nj = norms[j];
        a.column_mut(j).scale_mut(1.0 / nj);
    }
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-14).expect("svd solve");
    let res = &a * &x - &b;
    let rms = (res.norm_squared() / rows as f64).sqrt();
    let terms = exps.iter().enumerate().map(|(j, &e)| (e, x[j] / norms[j])).collect();
    (terms, rms)
}

fn log_slope(r: &[f64], y: &[f64]) -> f64 {
    let n = r.len() as f64;
    let xs: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = y.iter().map(|x| x.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Fit the tail laws U ~ a r^{-γ}, V ~ b r^{2-N} over `window` (absolute
/// radii). Defaults to the last two decades of the resolved mesh.
pub fn tail_constants(
    profile: &BubbleProfile,
    window: Option<(f64, f64)>,
) -> Result<TailConstants, BubbleError> {
    let r_end = *profile.r.last().unwrap();
    let (w0, w1) = window.unwrap_or((
        profile.opts.fit_window.0 * r_end,
        profile.opts.fit_window.1 * r_end,
    ));
    if !(w0 > 0.0 && w1 > w0) || w0 < profile.r[0] || w1 > r_end * (1.0 + 1e-12) {
        return Err(BubbleError::BadFit(format!(
            "fit window [{w0:e}, {w1:e}] is outside the sampled range [{:e}, {r_end:e}]",
            profile.r[0]
        )));
    }
    let idx: Vec<usize> = (0..profile.r.len())
        .filter(|&k| profile.r[k] >= w0 && profile.r[k] <= w1 * (1.0 + 1e-12))
        .collect();
    if idx.len() < 8 {
        return Err(BubbleError::BadFit(format!("only {} samples in the fit window", idx.len())));
    }
    let r: Vec<f64> = idx.iter().map(|&k| profile.r[k]).collect();
    let u: Vec<f64> = idx.iter().map(|&k| profile.u[k]).collect();
    let v: Vec<f64> = idx.iter().map(|&k| profile.v[k]).collect();
    let (u_terms, ru) = series_fit(&r, &u, &ladder_u(&profile.exps));
    let (v_terms, rv) = series_fit(&r, &v, &ladder_v(&profile.exps));
    let rms = ru.max(rv);
    let a = u_terms[0].1;
    let b = v_terms[0].1;
    if !(rms <= 1e-6) || a <= 0.0 || b <= 0.0 {
        return Err(BubbleError::BadFit(format!(
            "rms residual {rms:e} (a = {a:e}, b = {b:e}); increase R_max"
        )));
    }
    Ok(TailConstants {
        a_np: a,
        b_np: b,
        slope_u: log_slope(&r, &u),
        slope_v: log_slope(&r, &v),
        fit_window: (r[0], *r.last().unwrap()),
        rms_residual: rms,
        u_terms,
        v_terms,
    })
}

/// The identity b^p = a γ (N - (N-2)p) as a relative residual.
pub fn lss_residual(tails: &TailConstants, exps: &CriticalExponents) -> f64 {
    tails.b_np.powf(exps.p) / (tails.a_np * exps.gamma_u * exps.kappa()) - 1.0
}

#[derive(Clone, Copy, Debug)]
pub struct RadialSample {
    pub u: f64,
    pub v: f64,
    pub du: f64,
    pub dv: f64,
}

impl BubbleProfile {
    pub fn beta_dd(&self) -> Dd {
        Dd::new_add(self.beta, self.beta_lo_word)
    }

    pub fn r_end(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// U, V and their r-derivatives at radius `s` of the unscaled bubble.
    pub fn sample(&self, s: f64) -> RadialSample {
        let e = &self.exps;
        if s <= self.r[0] {
            let bp = self.beta.powf(e.p);
            let nf = e.nf();
            return RadialSample {
                u: 1.0 - bp * s * s / (2.0 * nf),
                v: self.beta - s * s / (2.0 * nf),
                du: -bp * s / nf,
                dv: -s / nf,
            };
        }
        if s > self.r_end() {
            let t = &self.tail;
            return RadialSample { u: t.u(s), v: t.v(s), du: t.du(s), dv: t.dv(s) };
        }
        let t = s.ln();
        let x = (t - self.t0) / self.dt;
        let k = (x.floor() as usize).min(self.r.len() - 2);
        let tau = x - k as f64;
        let dt = self.dt;
        let h = |f0: f64, f1: f64, d0: f64, d1: f64| -> (f64, f64) {
            let t2 = tau * tau;
            let t3 = t2 * tau;
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + tau;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            let val = h00 * f0 + h10 * dt * d0 + h01 * f1 + h11 * dt * d1;
            let dh00 = 6.0 * t2 - 6.0 * tau;
            let dh10 = 3.0 * t2 - 4.0 * tau + 1.0;
            let dh01 = -6.0 * t2 + 6.0 * tau;
            let dh11 = 3.0 * t2 - 2.0 * tau;
            let der = (dh00 * f0 + dh01 * f1) / dt + dh10 * d0 + dh11 * d1;
            (val, der)
        };
        let (r0, r1) = (self.r[k], self.r[k + 1]);
        let (u, ut) = h(self.u[k], self.u[k + 1], r0 * self.du[k], r1 * self.du[k + 1]);
        let (v, vt) = h(self.v[k], self.v[k + 1], r0 * self.dv[k], r1 * self.dv[k + 1]);
        RadialSample { u, v, du: ut / s, dv: vt / s }
    }

    /// Maximum relative one-step defect: each mesh interval is re-integrated
    /// in f64 from the stored state and compared with the stored endpoint.
    pub fn ode_residual(&self) -> f64 {
        let sys = system(&self.exps);
        let gbs = Gbs::for_f64(1e-14);
        let n = self.r.len() - 1;
        let defects = par::map_range(self.opts.exec, n, |k| {
            let y0 = [
                self.u[k],
                self.r[k] * self.du[k],
                self.v[k],
                self.r[k] * self.dv[k],
            ];
            let t_a = self.t0 + k as f64 * self.dt;
            let t_b = self.t0 + (k + 1) as f64 * self.dt;
            let mut st = Stepper::new(gbs, &sys, t_a, y0, self.dt);
            if st.advance(t_b, |_, _| false).is_err() {
                return f64::INFINITY;
            }
            let y1 = [
                self.u[k + 1],
                self.r[k + 1] * self.du[k + 1],
                self.v[k + 1],
                self.r[k + 1] * self.dv[k + 1],
            ];
            let su = y1[0].abs().max(y1[1].abs());
            let sv = y1[2].abs().max(y1[3].abs());
            let du = (st.y[0] - y1[0]).abs().max((st.y[1] - y1[1]).abs()) / su;
            let dv = (st.y[2] - y1[2]).abs().max((st.y[3] - y1[3]).abs()) / sv;
            du.max(dv)
        });
        defects.into_iter().fold(0.0, f64::max)
    }

    /// Relative residual of the linearized system
    ///   -ΔΨ = p V^{p-1} Φ,  -ΔΦ = q U^{q-1} Ψ
    /// for (Ψ⁰, Φ⁰) at radius `r`, by fourth-order central differences in
    /// ln r applied to a double-double re-integration of the bubble.
    pub fn kernel_residual_at(&self, r: f64) -> Result<f64, BubbleError> {
        let e = self.exps;
        // A power-of-two spacing and a centre on its lattice make the five
        // abscissae exact in f64.
        let delta = 2f64.powi(-13);
        let tc = (r.ln() / delta).round() * delta;
        let ts: Vec<f64> = std::iter::once(self.opts.r0.ln())
            .chain((-2..=2).map(|j| tc + j as f64 * delta))
            .collect();
        let gdd = Gbs::for_dd(self.opts.dd_rtol);
        let tr = trajectory(&e, self.beta_dd(), gdd, &self.opts, &ts)?;
        let delta_dd = Dd::from(12.0 * delta);
        if tr.len() < 6 {
            return Err(BubbleError::Unresolved(format!("trajectory left the positive cone before r = {r}")));
        }
        let (au, av) = (e.alpha_u(), e.alpha_v());
        let psi: Vec<Dd> = tr[1..].iter().map(|y| y[1] + y[0] * au).collect();
        let phi: Vec<Dd> = tr[1..].iter().map(|y| y[3] + y[2] * av).collect();
        let lap = |f: &[Dd]| -> Dd {
            let d1 = (f[3] * 8.0 - f[1] * 8.0 - f[4] + f[0]) / delta_dd;
            let d2 = (-f[4] + f[3] * 16.0 - f[2] * 30.0 + f[1] * 16.0 - f[0]) / delta_dd / delta;
            let rr = Dd::from(tc).exp();
            (d2 + d1 * (e.nf() - 2.0)) / (rr * rr)
        };
        let y = tr[3];
        let lp = lap(&psi);
        let lf = lap(&phi);
        let sp = signed_pow(y[2], e.p - 1.0) * phi[2] * e.p;
        let sq = signed_pow(y[0], e.q - 1.0) * psi[2] * e.q;
        let r1 = ((lp + sp).abs() / (lp.abs() + sp.abs())).to_f64();
        let r2 = ((lf + sq).abs() / (lf.abs() + sq.abs())).to_f64();
        Ok(r1.max(r2))
    }

    /// Kernel samples (Ψ⁰, Φ⁰, Ψ^r = U', Φ^r = V') on the mesh.
    pub fn kernel_profiles(&self) -> KernelProfiles {
        KernelProfiles {
            psi0: self.psi0.clone(),
            phi0: self.phi0.clone(),
            psi_r: self.du.clone(),
            phi_r: self.dv.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct KernelProfiles {
    pub psi0: Vec<f64>,
    pub phi0: Vec<f64>,
    pub psi_r: Vec<f64>,
    pub phi_r: Vec<f64>,
}

/// (U_{μ,ξ}(x), V_{μ,ξ}(x)) for points in R^N.
pub fn evaluate_bubble(profile: &BubbleProfile, mu: f64, xi: &[f64], x: &[f64]) -> (f64, f64) {
    let d2: f64 = xi.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    evaluate_bubble_radial(profile, mu, d2.sqrt())
}

/// Same as [`evaluate_bubble`] with the distance |x - ξ| given directly.
pub fn evaluate_bubble_radial(profile: &BubbleProfile, mu: f64, dist: f64) -> (f64, f64) {
    let e = &profile.exps;
    let s = profile.sample(dist / mu);
    (mu.powf(-e.alpha_u()) * s.u, mu.powf(-e.alpha_v()) * s.v)
}

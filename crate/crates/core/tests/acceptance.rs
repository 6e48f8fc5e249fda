//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{rngs::StdRng, Rng, SeedableRng};

use lane_emden::bubble::{shoot_ground_state, BubbleProfile, ShootOptions};
use lane_emden::constants::{check_lss, check_orthogonality, compute_constants, ReductionConstants};
use lane_emden::direct::{
    branch_scaling, continuation, growth_suite, scaling_check, synthetic_branch, ContinuationOptions, Nonlinearity,
};
use common::trapezoid_constants;
use lane_emden::exponents::{gamma_n, p_lower, p_upper};
use lane_emden::greens::{
    ball_green, htilde_config, regular_part_h, tau_tilde, tau_tilde_ball_center, Ball, DomainSpec, GreenOptions,
    MeridianField,
};
use lane_emden::make_exponents;
use lane_emden::reduced::{
    distinct_minima, eps_from_mu, lobe_seeds, minimize, mu_from_eps, LambdaBox, MinimizeOptions, ReducedModel,
    TableOptions, TauModel,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let out = run();
    let dt = t0.elapsed();
    let pass = out.pass && dt <= limit;
    let time = if dt <= limit { String::new() } else { format!(" over the {limit:?} budget") };
    println!(
        "criterion {id} [{name}]: {} ({:.1?}{time}) {}",
        if pass { "PASS" } else { "FAIL" },
        dt,
        out.detail
    );
    pass
}

fn profile(n: usize, p: f64) -> BubbleProfile {
    let e = make_exponents(n, p).unwrap();
    shoot_ground_state(&e, &ShootOptions::default()).unwrap()
}

fn exponent_algebra() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(4..=12);
        let (lo, hi) = (p_lower(n), p_upper(n));
        let p = lo + (hi - lo) * rng.gen_range(0.01..0.99);
        let e = make_exponents(n, p).unwrap();
        let nf = n as f64;
        let hyper = 1.0 / (e.p + 1.0) + 1.0 / (e.q + 1.0) - (nf - 2.0) / nf;
        let ident = (nf - 2.0) * p - 2.0 - nf * (p + 1.0) / (e.q + 1.0);
        worst = worst.max(hyper.abs()).max(ident.abs());
    }
    let rejected = make_exponents(3, 1.5).is_err();
    Outcome { pass: worst < 1e-12 && rejected, detail: format!("max identity residual {worst:.1e}, N=3 rejected: {rejected}") }
}

fn ground_states(profiles: &mut Vec<BubbleProfile>) -> Outcome {
    let mut pass = true;
    let mut parts = vec![];
    for (n, p) in [(4, 1.25), (5, 1.3), (6, 1.2)] {
        let t0 = Instant::now();
        let pr = profile(n, p);
        let dt = &t0.elapsed();
        let e = &pr.exps;
        let su = (pr.tail.slope_u / -e.gamma_u - 1.0).abs();
        let sv = (pr.tail.slope_v / -(e.n as f64 - 2.0) - 1.0).abs();
        let lss = check_lss(&pr.tail, e).abs();
        let ok = su < 0.01 && sv < 0.01 && lss < 1e-3 && *dt < Duration::from_secs(30) && pr.u0 == 1.0;
        pass &= ok;
        parts.push(format!(
            "({},{}) beta={:.6} slope err {su:.1e}/{sv:.1e} lss {lss:.1e} {:.1?}",
            e.n, e.p, pr.beta, dt
        ));
        profiles.push(pr);
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn reduction_constants(pr: &BubbleProfile, c: &ReductionConstants) -> Outcome {
    let orth = check_orthogonality(pr).unwrap().abs();
    let oracle = trapezoid_constants(pr);
    let lib = [c.a1, c.a1_tilde, c.a2, c.a3, c.a4];
    let agree = lib.iter().zip(&oracle).map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max);
    let signs = c.a1 > 0.0 && c.a1_tilde > 0.0;
    Outcome {
        pass: signs && orth < 1e-6 && agree < 1e-6,
        detail: format!(
            "A1={:.6e} A1~={:.6e} (positivity required: {}), orthogonality {orth:.1e}, quadrature agreement {agree:.1e}",
            c.a1,
            c.a1_tilde,
            if signs { "holds" } else { "violated" }
        ),
    }
}

fn weighted_l2(f: &MeridianField, n: usize, exact: &dyn Fn(f64, f64) -> f64) -> f64 {
    let g = f.grid;
    let (mut s, mut vol) = (0.0, 0.0);
    for j in 0..g.nr {
        for i in 0..g.nx {
            let v = f.at(i, j);
            if v.is_nan() {
                continue;
            }
            let w = g.rho(j).powi(n as i32 - 2);
            let d = v - exact(g.x(i), g.rho(j));
            s += w * d * d;
            vol += w;
        }
    }
    (s / vol).sqrt()
}

fn fitted_order(nx: &[usize], err: &[f64]) -> f64 {
    let xs: Vec<f64> = nx.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -sxy / sxx
}

/// The singularity-subtracted remainder of G̃ for a source at the centre
/// of the unit ball, by direct radial integration.
fn radial_remainder(n: usize, p: f64, rc: f64) -> impl Fn(f64) -> f64 {
    let nf = n as f64;
    let gn = gamma_n(n);
    let gam = (nf - 2.0) * p - 2.0;
    let amp = gn.powf(p) / (gam * (nf - gam - 2.0));
    let beta = 2.0 - (nf - 2.0) * (p - 1.0);
    let bco = p * gn.powf(p) / (beta * (beta + nf - 2.0));
    // (G^p - γ_N^p r^{-(N-2)p}) with G = γ_N(r^{2-N} - 1).
    let w = move |t: f64| gn.powf(p) * t.powf(-(nf - 2.0) * p) * (p * (-t.powf(nf - 2.0)).ln_1p()).exp_m1();
    move |r: f64| {
        let inner = if r > 0.0 { quadrature::integrate(|t| w(t) * t.powf(nf - 1.0), 0.0, r, 1e-16).integral } else { 0.0 };
        let outer = quadrature::integrate(|t| w(t) * (t - t.powf(nf - 1.0)), r, 1.0, 1e-16).integral;
        let u = (if r > 0.0 { (r.powf(2.0 - nf) - 1.0) * inner } else { 0.0 } + outer) / (nf - 2.0);
        let half = 0.5 * rc;
        let chi = if r <= half {
            1.0
        } else if r >= rc {
            0.0
        } else {
            let s = (r - half) / half;
            1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
        };
        let (sing, subtracted) =
            if r > 0.0 { (amp * r.powf(-gam), chi * (amp * r.powf(-gam) + bco * r.powf(beta))) } else { (0.0, 0.0) };
        sing - amp + u - subtracted
    }
}

fn green_machinery() -> Outcome {
    let n = 6;
    let p = 1.2;
    let e = make_exponents(n, p).unwrap();
    let unit = Ball::new(0.0, 1.0);
    let mut rng = StdRng::seed_from_u64(11);
    let mut point = || loop {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if x.iter().map(|a| a * a).sum::<f64>() < 0.95 {
            return x;
        }
    };
    let mut sym: f64 = 0.0;
    for _ in 0..200 {
        let (x, y) = (point(), point());
        let (a, b) = (ball_green(&x, &y, &unit).unwrap(), ball_green(&y, &x, &unit).unwrap());
        sym = sym.max((a - b).abs() / a.abs().max(b.abs()));
    }

    let dom = DomainSpec::unit_ball(n);
    let nxs = [64, 128, 256];
    let y = 0.3;
    let gn = gamma_n(n);
    let image = move |x: f64, rho: f64| gn * (y * ((x - 1.0 / y).powi(2) + rho * rho).sqrt()).powi(2 - n as i32);
    let mut eh = vec![];
    let mut er = vec![];
    for &nx in &nxs {
        let mut o = GreenOptions::with_nx(nx);
        o.solver.tol = 1e-12;
        let mut yv = vec![0.0; n];
        yv[0] = y;
        eh.push(weighted_l2(&regular_part_h(&dom, &yv, &o).unwrap(), n, &image));
        let res = htilde_config(&dom, &[1.0], &[0.0], &e, &o).unwrap();
        let oracle = radial_remainder(n, p, res.cutoffs[0]);
        er.push(weighted_l2(&res.remainders[0], n, &|x, rho| oracle(x.hypot(rho))));
    }
    let (oh, or) = (fitted_order(&nxs, &eh), fitted_order(&nxs, &er));
    let reference = tau_tilde_ball_center(&e, 1.0);
    let tau = tau_tilde(&dom, 0.0, &e, &GreenOptions::with_nx(512)).unwrap();
    let rel = (tau / reference - 1.0).abs();
    let in_band = |o: f64| (1.8..=2.2).contains(&o);
    Outcome {
        pass: sym < 1e-12 && in_band(oh) && in_band(or) && rel < 1e-3,
        detail: format!(
            "symmetry {sym:.1e}, order H {oh:.2} (L2 {:.1e}..{:.1e}), order G~ remainder {or:.2} (L2 {:.1e}..{:.1e}), tau~ {tau:.7e} vs {reference:.7e} rel {rel:.1e}",
            eh[0], eh[2], er[0], er[2]
        ),
    }
}

fn scaling_law() -> Outcome {
    let e = make_exponents(6, 1.2).unwrap();
    let mut worst: f64 = 0.0;
    for mu in [1e-6, 1e-4, 1e-3, 0.01, 0.1] {
        let eps = eps_from_mu(mu, e.gamma_u);
        worst = worst.max((mu_from_eps(eps, &e).unwrap() / mu - 1.0).abs());
    }
    let mus: Vec<f64> = (0..8).map(|i| 0.05 * 0.5f64.powi(i)).collect();
    let eps = synthetic_branch(&mus, e.gamma_u);
    let fit = scaling_check(&eps, &mus, e.gamma_u).unwrap();
    let slope = (fit.with_log.slope - 1.0).abs();
    Outcome {
        pass: worst < 1e-10 && slope < 1e-12,
        detail: format!("round trip {worst:.1e}, synthetic slope - 1 = {slope:.1e}"),
    }
}

fn unit_ball_model(pr: &BubbleProfile, c: &ReductionConstants) -> ReducedModel {
    let e = pr.exps;
    let g = GreenOptions::with_nx(256);
    let dom = DomainSpec::unit_ball(e.n);
    let tau = TauModel::build(&dom, &e, &g, &TableOptions::default()).unwrap();
    ReducedModel::new(e, c.clone(), &pr.tail, dom, g, tau)
}

fn single_peak(model: &ReducedModel) -> Outcome {
    let lam = LambdaBox { delta1: 0.01, delta2: 0.2 };
    let seeds = lobe_seeds(model, 1).unwrap();
    let found = minimize(model, &seeds, &lam, &MinimizeOptions::default()).unwrap();
    let best = found.iter().min_by(|a, b| a.value.total_cmp(&b.value)).unwrap();
    let h = model.grid_spacing();
    let xi = best.config.xi[0];
    let grad = best.grad_log_d[0].abs();
    Outcome {
        pass: best.interior && xi.abs() <= h && grad < 1e-6,
        detail: format!(
            "d*={:.6} xi*={xi:.2e} (cell {h:.2e}), |dJ/dln d|={grad:.1e}, interior {}",
            best.config.d[0], best.interior
        ),
    }
}

fn counting(unit: &ReducedModel) -> Outcome {
    let TauModel::Balls { unit: table, .. } = &unit.tau else { unreachable!("ball model") };
    let lam = LambdaBox { delta1: 0.01, delta2: 0.2 };
    let mut pass = true;
    let mut parts = vec![];
    for (l, k) in [(2usize, 1usize), (2, 2), (3, 2), (4, 2)] {
        let balls = (0..l).map(|i| Ball::new(i as f64 * 2.5, 1.0)).collect();
        let dom = DomainSpec::disjoint_union(unit.exps.n, balls);
        let tau = TauModel::Balls { unit: table.clone(), balls: dom.balls() };
        let model = ReducedModel {
            domain: dom.normalized(),
            green: GreenOptions::with_nx(256 * l),
            tau,
            ..unit.clone()
        };
        let seeds = lobe_seeds(&model, k).unwrap();
        let found = minimize(&model, &seeds, &lam, &MinimizeOptions::default()).unwrap();
        let interior: Vec<_> = found.iter().filter(|m| m.interior).cloned().collect();
        let count = distinct_minima(&interior, 10.0 * model.grid_spacing()).len();
        let expect = binomial(l, k);
        pass &= count == expect;
        parts.push(format!("(l={l},k={k}) {count}/{expect}"));
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn direct_branch(pr: &BubbleProfile, model: &ReducedModel) -> Outcome {
    let e = pr.exps;
    let tau = tau_tilde_ball_center(&e, 1.0);
    let d = model.coefficients().single_peak_d(tau, e.gamma_u).unwrap();
    let eps: Vec<f64> = (0..30).map(|i| 0.05 * 0.75f64.powi(i)).collect();
    let opts = ContinuationOptions { mu_scale: d, ..Default::default() };
    let branch = continuation(pr, &eps, 1.0, &opts).unwrap();
    match branch_scaling(&branch, e.gamma_u) {
        Ok(fit) => {
            let s = fit.with_log.slope;
            Outcome {
                pass: fit.mu_span >= 10.0 && (0.9..=1.1).contains(&s),
                detail: format!(
                    "{} points, mu_num span {:.1}, slope {s:.4} (r2 {:.6}), pure-power slope {:.4}",
                    fit.points, fit.mu_span, fit.with_log.r2, fit.pure_power.slope
                ),
            }
        }
        Err(err) => Outcome { pass: false, detail: format!("{err}; stopped: {:?}", branch.truncated) },
    }
}

fn growth_inequalities() -> Outcome {
    let e = make_exponents(6, 1.2).unwrap();
    let mut total = 0;
    let mut samples = 0;
    for eps in [1e-3, 1e-2, 5e-2] {
        let v = growth_suite(&Nonlinearity::new(e, eps), 100_000);
        total += v.total();
        samples += v.samples;
    }
    Outcome { pass: total == 0, detail: format!("{total} violations in {samples} checks") }
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= report(1, "exponent algebra", Duration::from_secs(1), exponent_algebra);

    let mut profiles = vec![];
    // The 30 s budget applies per parameter point and is checked inside.
    ok &= report(2, "ground state", Duration::from_secs(90), || ground_states(&mut profiles));

    let main = &profiles[2];
    let constants = compute_constants(main).unwrap();
    ok &= report(3, "reduction constants", Duration::from_secs(10), || reduction_constants(main, &constants));
    ok &= report(4, "green machinery", Duration::from_secs(120), green_machinery);
    ok &= report(5, "scaling law", Duration::from_secs(1), scaling_law);

    let t0 = Instant::now();
    let model = unit_ball_model(main, &constants);
    let table_time = t0.elapsed();
    ok &= report(6, "single peak on the ball", Duration::from_secs(300) - table_time, || single_peak(&model));
    ok &= report(7, "multi-peak counting", Duration::from_secs(600), || counting(&model));
    ok &= report(8, "direct branch scaling", Duration::from_secs(900), || direct_branch(main, &model));
    ok &= report(9, "growth inequalities", Duration::from_secs(60), growth_inequalities);

    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! The subcommands. Each writes `<out>/<command>.json`, and bulk tables as
//! CSV next to it, and returns whether its checks passed.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use lane_emden::bubble::{shoot_ground_state, BubbleProfile, ShootOptions};
use lane_emden::constants::{check_lss, check_orthogonality, compute_constants, ReductionConstants};
use lane_emden::direct::{branch_scaling, continuation, scaling_check, synthetic_branch, ContinuationOptions, NewtonOptions};
use lane_emden::greens::{
    ball_green, ball_regular, ball_robin, regular_part_h, robin, tau_tilde, tau_tilde_ball_center, Ball, DomainKind,
    DomainSpec, GreenOptions, SolverOptions,
};
use lane_emden::reduced::{
    eps_from_mu, lobe_seeds, mu_from_eps, report, LambdaBox, MinimizeOptions, ReducedModel, Seed, TableOptions, TauModel,
};
use lane_emden::{make_exponents, CriticalExponents};
use rand::{rngs::StdRng, Rng, SeedableRng};
use serde::Serialize;

use crate::cache::Cache;
use crate::error::AppError;
use crate::scenario::Scenario;

pub struct Context {
    pub scenario: Scenario,
    pub hash: String,
    pub out: PathBuf,
    pub cache: Cache,
    pub strict: bool,
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    command: &'a str,
    scenario_hash: &'a str,
    library_version: &'a str,
    result: &'a T,
}

impl Context {
    fn write_json<T: Serialize>(&self, command: &str, result: &T) -> Result<PathBuf, AppError> {
        let env = Envelope { command, scenario_hash: &self.hash, library_version: lane_emden::VERSION, result };
        let mut text = serde_json::to_string_pretty(&env).expect("serializable");
        text.push('\n');
        let path = self.out.join(format!("{command}.json"));
        write_file(&path, text.as_bytes())?;
        Ok(path)
    }

    fn write_csv(&self, name: &str, header: &str, rows: &[String]) -> Result<PathBuf, AppError> {
        let mut text = format!("# scenario_hash={} library_version={}\n{header}\n", self.hash, lane_emden::VERSION);
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        let path = self.out.join(name);
        write_file(&path, text.as_bytes())?;
        Ok(path)
    }

    fn exponents(&self) -> Result<CriticalExponents, AppError> {
        let e = &self.scenario.exponents;
        Ok(make_exponents(e.n, e.p)?)
    }

    fn profile(&self) -> Result<BubbleProfile, AppError> {
        let e = self.exponents()?;
        let opts = ShootOptions::default();
        let key = (&self.scenario.exponents, &opts);
        Ok(self.cache.get_or_compute("bubble", &key, || shoot_ground_state(&e, &opts))?)
    }

    fn constants(&self, pr: &BubbleProfile) -> Result<ReductionConstants, AppError> {
        let key = (&self.scenario.exponents, &pr.opts);
        Ok(self.cache.get_or_compute("constants", &key, || compute_constants(pr))?)
    }

    fn green_options(&self) -> GreenOptions {
        let g = &self.scenario.green;
        GreenOptions { nx: g.nx, solver: SolverOptions { tol: g.tol, ..Default::default() } }
    }

    fn tau_model(&self, e: &CriticalExponents) -> Result<TauModel, AppError> {
        let g = &self.scenario.green;
        let table = TableOptions { nodes: g.table_nodes, reach: g.table_reach };
        let dom = self.scenario.domain_spec();
        let key = (&self.scenario.exponents, &dom, g);
        Ok(self.cache.get_or_compute("tau", &key, || TauModel::build(&dom, e, &self.green_options(), &table))?)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), AppError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| AppError::Io(dir.display().to_string(), e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| AppError::Io(path.display().to_string(), e))?;
    f.write_all(bytes).map_err(|e| AppError::Io(path.display().to_string(), e))
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    residual: f64,
    tolerance: f64,
    pass: bool,
    detail: String,
}

impl Check {
    fn below(name: &'static str, residual: f64, tolerance: f64, detail: String) -> Check {
        Check { name, residual, tolerance, pass: residual.abs() <= tolerance, detail }
    }
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        let tag = if c.pass { "ok  " } else { "FAIL" };
        println!("{tag} {:<22} {:>10.3e} (tol {:.0e}) {}", c.name, c.residual, c.tolerance, c.detail);
    }
}

pub fn exponents(ctx: &Context) -> Result<bool, AppError> {
    #[derive(Serialize)]
    struct Out {
        exponents: CriticalExponents,
        alpha_u: f64,
        alpha_v: f64,
        gamma_n: f64,
        gamma_tilde: f64,
        hyperbola_residual: f64,
    }
    let e = ctx.exponents()?;
    let out = Out {
        exponents: e,
        alpha_u: e.alpha_u(),
        alpha_v: e.alpha_v(),
        gamma_n: e.gamma_n(),
        gamma_tilde: e.gamma_tilde(),
        hyperbola_residual: e.hyperbola_residual(),
    };
    println!("N = {}, p = {}, q = {}, gamma = {}", e.n, e.p, e.q, e.gamma_u);
    println!("{}", ctx.write_json("exponents", &out)?.display());
    Ok(true)
}

pub fn bubble(ctx: &Context) -> Result<bool, AppError> {
    #[derive(Serialize)]
    struct Out<'a> {
        beta: f64,
        beta_lo_word: f64,
        u0: f64,
        tail: &'a lane_emden::bubble::TailConstants,
        lss_residual: f64,
        ode_residual: f64,
        diagnostics: &'a lane_emden::bubble::ShootDiagnostics,
        mesh_points: usize,
    }
    let pr = ctx.profile()?;
    let out = Out {
        beta: pr.beta,
        beta_lo_word: pr.beta_lo_word,
        u0: pr.u0,
        tail: &pr.tail,
        lss_residual: check_lss(&pr.tail, &pr.exps),
        ode_residual: pr.ode_residual(),
        diagnostics: &pr.diagnostics,
        mesh_points: pr.r.len(),
    };
    let rows: Vec<String> = (0..pr.r.len())
        .map(|k| format!("{:e},{:e},{:e},{:e},{:e}", pr.r[k], pr.u[k], pr.v[k], pr.psi0[k], pr.phi0[k]))
        .collect();
    println!("beta = {:.12}, a = {:.8}, b = {:.8}", pr.beta, pr.tail.a_np, pr.tail.b_np);
    println!("{}", ctx.write_json("bubble", &out)?.display());
    println!("{}", ctx.write_csv("bubble.csv", "r,u,v,psi0,phi0", &rows)?.display());
    Ok(true)
}

pub fn constants(ctx: &Context) -> Result<bool, AppError> {
    #[derive(Serialize)]
    struct Out {
        constants: ReductionConstants,
        sign_violations: Vec<&'static str>,
        orthogonality_residual: f64,
    }
    let pr = ctx.profile()?;
    let c = ctx.constants(&pr)?;
    let out = Out { sign_violations: c.sign_violations(), orthogonality_residual: check_orthogonality(&pr)?, constants: c };
    let c = &out.constants;
    println!("A1 = {:.8e}, A1~ = {:.8e}, A2 = {:.8e}, A3 = {:.8e}, A4 = {:.8e}", c.a1, c.a1_tilde, c.a2, c.a3, c.a4);
    if !out.sign_violations.is_empty() {
        println!("sign violations: {}", out.sign_violations.join(", "));
    }
    println!("{}", ctx.write_json("constants", &out)?.display());
    Ok(true)
}

/// Sample points in the meridian half-plane of a ball, away from its boundary.
fn ball_samples(b: &Ball) -> Vec<(f64, f64)> {
    let mut v = vec![];
    for i in 0..5 {
        for j in 0..3 {
            let x = b.center + b.radius * (-0.6 + 0.3 * i as f64);
            let rho = b.radius * 0.25 * j as f64;
            if ((x - b.center).powi(2) + rho * rho).sqrt() < 0.75 * b.radius {
                v.push((x, rho));
            }
        }
    }
    v
}

fn point(n: usize, x: f64, rho: f64) -> Vec<f64> {
    let mut p = vec![0.0; n];
    p[0] = x;
    if n > 1 {
        p[1] = rho;
    }
    p
}

fn green_checks(dom: &DomainSpec, e: &CriticalExponents, opts: &GreenOptions) -> Result<Vec<Check>, AppError> {
    let n = dom.n;
    let balls = dom.balls();
    let exact = matches!(dom.kind, DomainKind::Ball(_) | DomainKind::DisjointUnion { .. });
    let b = balls[0];
    let mut checks = vec![];

    // Closed-form symmetry of the ball Green function.
    let pts = ball_samples(&b);
    let mut sym: f64 = 0.0;
    for (i, &(x1, r1)) in pts.iter().enumerate() {
        for &(x2, r2) in &pts[i + 1..] {
            let (p, q) = (point(n, x1, r1), point(n, x2, -r2));
            let (a, c) = (ball_green(&p, &q, &b)?, ball_green(&q, &p, &b)?);
            sym = sym.max((a - c).abs() / a.abs());
        }
    }
    checks.push(Check::below("green symmetry", sym, 1e-12, format!("{} point pairs", pts.len() * (pts.len() - 1) / 2)));

    // Symmetry of the numerical regular part between two axial sources.
    let (y1, y2) = (b.center + 0.2 * b.radius, b.center - 0.35 * b.radius);
    let h1 = regular_part_h(dom, &point(n, y1, 0.0), opts)?;
    let h2 = regular_part_h(dom, &point(n, y2, 0.0), opts)?;
    let (a, c) = (h1.eval(y2, 0.0)?, h2.eval(y1, 0.0)?);
    checks.push(Check::below("regular part symmetry", (a - c).abs() / a.abs(), 1e-2, format!("nx = {}", opts.nx)));

    if exact {
        let mut worst: f64 = 0.0;
        for &(x, rho) in &pts {
            let want = ball_regular(&point(n, x, rho), &point(n, y1, 0.0), &b);
            worst = worst.max((h1.eval(x, rho)? - want).abs() / want.abs());
        }
        checks.push(Check::below("regular part vs closed form", worst, 1e-2, format!("{} samples", pts.len())));
        let want = ball_robin(&point(n, y1, 0.0), &b);
        let got = robin(&h1)?;
        checks.push(Check::below("robin vs closed form", (got - want).abs() / want, 1e-2, format!("{got:.6e} vs {want:.6e}")));
        let want = tau_tilde_ball_center(e, b.radius);
        let got = tau_tilde(dom, b.center, e, opts)?;
        checks.push(Check::below("tau at centre vs radial", (got - want).abs() / want, 1e-2, format!("{got:.6e} vs {want:.6e}")));
    }
    Ok(checks)
}

pub fn green_validate(ctx: &Context) -> Result<bool, AppError> {
    let e = ctx.exponents()?;
    let dom = ctx.scenario.domain_spec();
    let checks = green_checks(&dom, &e, &ctx.green_options())?;
    print_checks(&checks);
    let pass = checks.iter().all(|c| c.pass);
    println!("{}", ctx.write_json("green-validate", &checks)?.display());
    Ok(pass)
}

fn model(ctx: &Context, with_table: bool) -> Result<ReducedModel, AppError> {
    let e = ctx.exponents()?;
    let pr = ctx.profile()?;
    let c = ctx.constants(&pr)?;
    let tau = if with_table { ctx.tau_model(&e)? } else { TauModel::Solve };
    Ok(ReducedModel::new(e, c, &pr.tail, ctx.scenario.domain_spec(), ctx.green_options(), tau))
}

fn jittered(seeds: &[Seed], model: &ReducedModel, count: usize, width: f64, seed: u64) -> Vec<Seed> {
    let mut rng = StdRng::seed_from_u64(seed);
    let balls = model.domain.balls();
    let mut out = seeds.to_vec();
    for s in seeds {
        for _ in 0..count {
            let mut t = s.clone();
            for (i, &l) in s.lobes.iter().enumerate() {
                t.config.d[i] *= (width * rng.gen_range(-1.0..1.0)).exp();
                t.config.xi[i] += width * balls[l].radius * rng.gen_range(-1.0..1.0);
            }
            out.push(t);
        }
    }
    out
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";")
}

pub fn reduce(ctx: &Context) -> Result<bool, AppError> {
    let cfg = &ctx.scenario.reduce;
    let model = model(ctx, true)?;
    let base = LambdaBox::default_for(&model);
    let lam = LambdaBox { delta1: cfg.delta1.unwrap_or(base.delta1), delta2: cfg.delta2.unwrap_or(base.delta2) };
    let seeds = lobe_seeds(&model, cfg.k)?;
    let seeds = jittered(&seeds, &model, cfg.jitter_starts, cfg.jitter, cfg.seed);
    let opts = MinimizeOptions { xtol: cfg.xtol, ..Default::default() };
    let rep = report(&model, cfg.k, &seeds, &lam, &cfg.epsilons, &opts)?;
    let mut rows = vec![];
    for pe in &rep.per_epsilon {
        for (m, at) in rep.minima.iter().zip(&pe.minima) {
            rows.push(format!(
                "{},{:e},{},{},{},{:e}",
                m.seed,
                pe.epsilon,
                m.converged,
                join(&m.config.d),
                join(&m.config.xi),
                at.g0.value
            ));
        }
    }
    for &i in &rep.distinct {
        let m = &rep.minima[i];
        let edge = if m.interior { "" } else { " (on the edge of the admissible box)" };
        println!("minimum from seed {}: d = [{}], xi = [{}], J = {:.6e}{edge}", m.seed, join(&m.config.d), join(&m.config.xi), m.value);
    }
    println!("{}", ctx.write_json("reduce", &rep)?.display());
    println!("{}", ctx.write_csv("reduce.csv", "seed,epsilon,converged,d,xi,g0", &rows)?.display());
    let warned: Vec<f64> = rep.per_epsilon.iter().filter(|p| p.remainder_warning).map(|p| p.epsilon).collect();
    if !warned.is_empty() {
        let msg = format!("dropped remainder is large at epsilon = {warned:?}");
        if ctx.strict {
            return Err(AppError::Strict(msg));
        }
        eprintln!("warning: {msg}");
    }
    Ok(true)
}

pub fn solve(ctx: &Context) -> Result<bool, AppError> {
    #[derive(Serialize)]
    struct Out<'a> {
        epsilons: &'a [f64],
        mu_scale: f64,
        branch: &'a lane_emden::direct::Branch,
        scaling: Option<lane_emden::direct::ScalingFit>,
        scaling_error: Option<String>,
    }
    let sc = &ctx.scenario;
    let DomainKind::Ball(ball) = sc.domain_spec().kind else {
        return Err(AppError::Config(crate::scenario::ConfigError::Field {
            path: "domain.kind".into(),
            message: "the radial solver needs a ball".into(),
        }));
    };
    let e = ctx.exponents()?;
    let pr = ctx.profile()?;
    let coeff = model(ctx, false)?.coefficients();
    let mu_scale = coeff.single_peak_d(tau_tilde_ball_center(&e, ball.radius), e.gamma_u).unwrap_or(1.0);
    let s = &sc.solve;
    let newton = NewtonOptions { cells: s.cells, tol: s.tol, max_iter: s.max_iter, ..Default::default() };
    let opts = ContinuationOptions { newton, mu_scale, ..Default::default() };
    let eps = s.epsilon_list();
    let branch = continuation(&pr, &eps, ball.radius, &opts)?;
    let (scaling, scaling_error) = match branch_scaling(&branch, e.gamma_u) {
        Ok(f) => (Some(f), None),
        Err(err) => (None, Some(err.to_string())),
    };
    let rows: Vec<String> = branch
        .points
        .iter()
        .map(|p| format!("{:e},{:e},{:e},{}", p.epsilon, p.mu_num, p.peak_height, p.iterations))
        .collect();
    println!("{} of {} points solved", branch.points.len(), eps.len());
    if let Some(t) = &branch.truncated {
        println!("stopped {t}");
    }
    if let Some(f) = &scaling {
        println!("slope with log factor {:.4} (r2 {:.6}), pure power {:.4}", f.with_log.slope, f.with_log.r2, f.pure_power.slope);
    }
    let out = Out { epsilons: &eps, mu_scale, branch: &branch, scaling, scaling_error };
    println!("{}", ctx.write_json("solve", &out)?.display());
    println!("{}", ctx.write_csv("solve.csv", "epsilon,mu_num,u0,iterations", &rows)?.display());
    Ok(true)
}

pub fn verify(ctx: &Context) -> Result<bool, AppError> {
    let e = ctx.exponents()?;
    let pr = ctx.profile()?;
    let c = ctx.constants(&pr)?;
    let mut checks = vec![
        Check::below("lss", check_lss(&pr.tail, &e), 1e-3, format!("a = {:.8}, b = {:.8}", pr.tail.a_np, pr.tail.b_np)),
        Check::below("orthogonality", check_orthogonality(&pr)?, 1e-6, String::new()),
        Check {
            name: "A1 positivity",
            residual: c.a1.min(c.a1_tilde),
            tolerance: 0.0,
            pass: c.a1 > 0.0 && c.a1_tilde > 0.0,
            detail: format!("A1 = {:.6e}, A1~ = {:.6e}", c.a1, c.a1_tilde),
        },
    ];
    let dom = ctx.scenario.domain_spec();
    let green = green_checks(&dom, &e, &ctx.green_options())?;
    checks.extend(green.into_iter().filter(|c| c.name.contains("symmetry")));
    let mut worst: f64 = 0.0;
    for mu in [1e-6, 1e-4, 1e-3, 0.01, 0.1] {
        worst = worst.max((mu_from_eps(eps_from_mu(mu, e.gamma_u), &e)? / mu - 1.0).abs());
    }
    let mus: Vec<f64> = (0..8).map(|i| 0.05 * 0.5f64.powi(i)).collect();
    let fit = scaling_check(&synthetic_branch(&mus, e.gamma_u), &mus, e.gamma_u)?;
    checks.push(Check::below("scaling round trip", worst, 1e-10, format!("synthetic slope {:.15}", fit.with_log.slope)));
    print_checks(&checks);
    let pass = checks.iter().all(|c| c.pass);
    println!("{}", ctx.write_json("verify", &checks)?.display());
    Ok(pass)
}

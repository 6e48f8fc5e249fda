//! Fields solved on the meridian grid: the regular part H(·, y), the
//! harmonic extension Ĥ of |x - y|^{-γ}, and the p-power regular part H̃
//! of a configuration of axis sources.
//!
//! For H̃ the singular behaviour of G̃ at each source is removed before
//! solving. Near ξ_i, with c_i = d_i^{N/(q+1)} and W = Σ c_j G(·, ξ_j),
//!
//!   W = c_i γ_N r^{2-N} - K_i,   K_i smooth,
//!   W^p = (c_i γ_N)^p r^{-(N-2)p} - p (c_i γ_N)^{p-1} K_i(ξ_i) r^{-(N-2)(p-1)} + …
//!
//! and both leading terms have explicit radial preimages under -Δ:
//! A_i r^{-γ} with A_i = c_i^p γ̃ and B_i r^β with β = 2 - (N-2)(p-1).
//! Their sum, cut off smoothly inside the domain, is subtracted, and the
//! remainder R solves a Poisson problem with a bounded right-hand side.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::GreensError;
use crate::exponents::{gamma_n, CriticalExponents};
use crate::greens::ball::ball_regular_axis;
use crate::greens::domain::{Ball, DomainKind, DomainSpec, Lobe};
use crate::greens::grid::{interpolate_grid, GridSpec, MeridianGrid, SolveStats, SolverOptions};
use crate::par::{self, Exec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenOptions {
    /// Cells along the axial extent of the domain; ρ uses the same spacing.
    pub nx: usize,
    pub solver: SolverOptions,
}

impl Default for GreenOptions {
    fn default() -> Self {
        GreenOptions { nx: 512, solver: SolverOptions::default() }
    }
}

impl GreenOptions {
    pub fn with_nx(nx: usize) -> Self {
        GreenOptions { nx, ..Default::default() }
    }

    pub fn exec(&self) -> Exec {
        self.solver.exec
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeridianField {
    pub grid: GridSpec,
    pub n: usize,
    /// Row-major samples (ρ index outer), NaN outside the domain.
    pub values: Vec<f64>,
    pub source_points: Vec<f64>,
    pub singular_coefficients: Vec<f64>,
    pub stats: SolveStats,
}

impl MeridianField {
    pub fn eval(&self, x: f64, rho: f64) -> Result<f64, GreensError> {
        let g = &self.grid;
        interpolate_grid(g, x, rho, |i, j| {
            let v = self.values[g.cell(i, j)];
            (!v.is_nan()).then_some(v)
        })
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.cell(i, j)]
    }

    /// Little-endian f64 samples, row-major with ρ outer.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    /// Values along the axis row closest to ρ = 0, as (x, value).
    pub fn axis_slice(&self) -> Vec<(f64, f64)> {
        (0..self.grid.nx)
            .filter_map(|i| {
                let v = self.at(i, 0);
                (!v.is_nan()).then(|| (self.grid.x(i), self.eval(self.grid.x(i), 0.0).unwrap_or(v)))
            })
            .collect()
    }
}

/// Points are given in R^N with the axis as first coordinate.
fn axis_coordinate(y: &[f64]) -> Result<f64, GreensError> {
    if y.iter().skip(1).any(|&c| c != 0.0) {
        return Err(GreensError::Unsupported(
            "sources must lie on the symmetry axis (x₂ = … = x_N = 0)".into(),
        ));
    }
    Ok(y[0])
}

fn check_inside(dom: &DomainSpec, y: f64) -> Result<(), GreensError> {
    if dom.contains(y, 0.0) {
        Ok(())
    } else {
        Err(GreensError::OutsideDomain { x: y, rho: 0.0 })
    }
}

/// Harmonic function on the domain with boundary values g.
pub fn solve_harmonic(
    dom: &DomainSpec,
    g: &(dyn Fn(f64, f64) -> f64 + Sync),
    opts: &GreenOptions,
) -> Result<MeridianField, GreensError> {
    let grid = MeridianGrid::with_cells(dom, opts.nx)?;
    solve_on(&grid, &vec![0.0; grid.unknowns()], g, opts)
}

/// -Δu = f with u = g on the boundary; `f` is sampled per unknown.
pub fn solve_on(
    grid: &MeridianGrid,
    f: &[f64],
    g: &(dyn Fn(f64, f64) -> f64 + Sync),
    opts: &GreenOptions,
) -> Result<MeridianField, GreensError> {
    let b = grid.rhs(f, g);
    let (u, stats) = grid.solve(&b, &opts.solver)?;
    Ok(MeridianField {
        grid: grid.spec,
        n: grid.n,
        values: grid.to_full(&u),
        source_points: vec![],
        singular_coefficients: vec![],
        stats,
    })
}

/// Poisson problem -Δu = f(x, ρ), u = g on the boundary.
pub fn solve_meridian_poisson(
    dom: &DomainSpec,
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    g: &(dyn Fn(f64, f64) -> f64 + Sync),
    opts: &GreenOptions,
) -> Result<MeridianField, GreensError> {
    let grid = MeridianGrid::with_cells(dom, opts.nx)?;
    let fv = par::map_range(opts.exec(), grid.unknowns(), |k| {
        let (x, r) = grid.point(k);
        f(x, r)
    });
    solve_on(&grid, &fv, g, opts)
}

/// H(·, y): harmonic with boundary data γ_N |x - y|^{2-N}.
pub fn regular_part_h(dom: &DomainSpec, y: &[f64], opts: &GreenOptions) -> Result<MeridianField, GreensError> {
    let y1 = axis_coordinate(y)?;
    check_inside(dom, y1)?;
    let n = dom.n;
    let gn = gamma_n(n);
    let g = move |x: f64, r: f64| gn * ((x - y1).powi(2) + r * r).powf(0.5 * (2.0 - n as f64));
    let mut f = solve_harmonic(dom, &g, opts)?;
    f.source_points = vec![y1];
    Ok(f)
}

/// Robin function H(y, y) from a solved H field.
pub fn robin(field: &MeridianField) -> Result<f64, GreensError> {
    let y = *field.source_points.first().ok_or_else(|| GreensError::Unsupported("field has no source".into()))?;
    field.eval(y, 0.0)
}

/// Ĥ(·, y): harmonic with boundary data |x - y|^{-γ}, γ = (N-2)p - 2.
pub fn hhat(dom: &DomainSpec, y: &[f64], exps: &CriticalExponents, opts: &GreenOptions) -> Result<MeridianField, GreensError> {
    let y1 = axis_coordinate(y)?;
    check_inside(dom, y1)?;
    let gam = exps.gamma_u;
    let g = move |x: f64, r: f64| ((x - y1).powi(2) + r * r).powf(-0.5 * gam);
    let mut f = solve_harmonic(dom, &g, opts)?;
    f.source_points = vec![y1];
    Ok(f)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HtildeResult {
    /// H̃_{d,ξ}(ξ_i) for each source.
    pub values: Vec<f64>,
    /// τ̃ = H̃_{d,ξ}(ξ) when there is a single source.
    pub tau: Option<f64>,
    /// Cutoff radius used around each source.
    pub cutoffs: Vec<f64>,
    /// Coefficients B_i of the r^β correction.
    pub beta_coefficients: Vec<f64>,
    /// Remainder fields, one per connected component that holds sources.
    pub remainders: Vec<MeridianField>,
}

/// (1 - t)^p - 1 + p t without cancellation for small t.
fn second_order_rest(t: f64, p: f64) -> f64 {
    if t.abs() < 1e-3 {
        let mut coef = p * (p - 1.0) / 2.0;
        let mut pow = t * t;
        let mut s = 0.0;
        for m in 2..9 {
            s += coef * pow;
            coef *= -(p - m as f64) / (m as f64 + 1.0);
            pow *= t;
        }
        // Σ binom(p, m) (-t)^m with the sign folded into coef.
        s
    } else {
        (1.0 - t).max(0.0).powf(p) - 1.0 + p * t
    }
}

/// C² cutoff equal to 1 on [0, rc/2] and 0 beyond rc, with its first and
/// second radial derivatives.
fn cutoff(r: f64, rc: f64) -> (f64, f64, f64) {
    let half = 0.5 * rc;
    if r <= half {
        return (1.0, 0.0, 0.0);
    }
    if r >= rc {
        return (0.0, 0.0, 0.0);
    }
    let s = (r - half) / half;
    let sm = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    let d1 = 30.0 * s * s * (s - 1.0) * (s - 1.0);
    let d2 = 60.0 * s * (1.0 - 3.0 * s + 2.0 * s * s);
    (1.0 - sm, -d1 / half, -d2 / (half * half))
}

/// Regular parts H(·, ξ_j) at the unknowns and at the sources.
struct RegularParts {
    nodes: Vec<Vec<f64>>,
    at_sources: Vec<Vec<f64>>,
}

fn regular_parts(dom: &DomainSpec, grid: &MeridianGrid, xi: &[f64], opts: &GreenOptions) -> Result<RegularParts, GreensError> {
    let n = dom.n;
    match &dom.kind {
        DomainKind::Ball(b) => {
            let nodes = xi
                .iter()
                .map(|&y| {
                    par::map_range(opts.exec(), grid.unknowns(), |k| {
                        let (x, r) = grid.point(k);
                        ball_regular_axis(n, x, r, y, b)
                    })
                })
                .collect();
            let at_sources =
                xi.iter().map(|&y| xi.iter().map(|&x| ball_regular_axis(n, x, 0.0, y, b)).collect()).collect();
            Ok(RegularParts { nodes, at_sources })
        }
        _ => {
            let gn = gamma_n(n);
            let mut nodes = Vec::with_capacity(xi.len());
            let mut at_sources = Vec::with_capacity(xi.len());
            for &y in xi {
                let g = move |x: f64, r: f64| gn * ((x - y).powi(2) + r * r).powf(0.5 * (2.0 - n as f64));
                let b = grid.rhs(&vec![0.0; grid.unknowns()], &g);
                let (u, _) = grid.solve(&b, &opts.solver)?;
                let row = xi.iter().map(|&x| grid.interpolate(&u, x, 0.0)).collect::<Result<Vec<_>, _>>()?;
                nodes.push(u);
                at_sources.push(row);
            }
            Ok(RegularParts { nodes, at_sources })
        }
    }
}

fn boundary_distance(dom: &DomainSpec, grid: &MeridianGrid, x: f64) -> f64 {
    dom.axis_boundary_distance(x).unwrap_or_else(|| {
        grid.boundary_points().iter().map(|&(bx, br)| (bx - x).hypot(br)).fold(f64::INFINITY, f64::min)
    })
}

/// H̃_{d,ξ} at the sources. All ξ_i must lie on the axis (given by their
/// axial coordinate) and inside the domain.
pub fn htilde_config(
    dom: &DomainSpec,
    d: &[f64],
    xi: &[f64],
    exps: &CriticalExponents,
    opts: &GreenOptions,
) -> Result<HtildeResult, GreensError> {
    assert_eq!(d.len(), xi.len());
    if xi.is_empty() {
        return Err(GreensError::Unsupported("no sources".into()));
    }
    let dom = dom.normalized();
    if exps.n != dom.n {
        return Err(GreensError::InvalidDomain(format!("domain dimension {} but exponents for N = {}", dom.n, exps.n)));
    }
    for &x in xi {
        check_inside(&dom, x)?;
    }
    let (lo, hi, _) = dom.bounding_box();
    let h = (hi - lo) / opts.nx as f64;
    let comps = dom.components();
    if comps.len() == 1 {
        return htilde_connected(&dom, h, d, xi, exps, opts);
    }
    // Disconnected: sources only see their own component.
    let mut values = vec![0.0; xi.len()];
    let mut cutoffs = vec![0.0; xi.len()];
    let mut betas = vec![0.0; xi.len()];
    let mut remainders = Vec::new();
    for c in &comps {
        let idx: Vec<usize> = (0..xi.len()).filter(|&i| c.contains(xi[i], 0.0)).collect();
        if idx.is_empty() {
            continue;
        }
        let dd: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
        let xx: Vec<f64> = idx.iter().map(|&i| xi[i]).collect();
        let r = htilde_connected(c, h, &dd, &xx, exps, opts)?;
        for (k, &i) in idx.iter().enumerate() {
            values[i] = r.values[k];
            cutoffs[i] = r.cutoffs[k];
            betas[i] = r.beta_coefficients[k];
        }
        remainders.extend(r.remainders);
    }
    let tau = (xi.len() == 1).then(|| values[0]);
    Ok(HtildeResult { values, tau, cutoffs, beta_coefficients: betas, remainders })
}

fn htilde_connected(
    dom: &DomainSpec,
    h: f64,
    d: &[f64],
    xi: &[f64],
    exps: &CriticalExponents,
    opts: &GreenOptions,
) -> Result<HtildeResult, GreensError> {
    let grid = MeridianGrid::build(dom, h)?;
    let h = grid.spec.h;
    let n = dom.n;
    let nf = n as f64;
    let k = xi.len();
    let p = exps.p;
    let gn = gamma_n(n);
    let gam = exps.gamma_u;
    let gt = exps.gamma_tilde();
    let beta = 2.0 - (nf - 2.0) * (p - 1.0);
    let c: Vec<f64> = d.iter().map(|d| d.powf(nf / (exps.q + 1.0))).collect();

    let mut rc = vec![0.0; k];
    for i in 0..k {
        let mut r = 0.75 * boundary_distance(dom, &grid, xi[i]);
        for j in 0..k {
            if j != i {
                r = r.min(0.25 * (xi[i] - xi[j]).abs());
            }
        }
        if r < 8.0 * h {
            return Err(GreensError::SingularOverlap { xi: xi[i], cutoff: r, h });
        }
        rc[i] = r;
    }

    let reg = regular_parts(dom, &grid, xi, opts)?;
    let green_src = |j: usize, i: usize| -> f64 {
        // G(ξ_i, ξ_j), i ≠ j
        gn * (xi[i] - xi[j]).abs().powf(2.0 - nf) - reg.at_sources[j][i]
    };
    let k0: Vec<f64> = (0..k)
        .map(|i| {
            let mut s = c[i] * reg.at_sources[i][i];
            for j in 0..k {
                if j != i {
                    s -= c[j] * green_src(j, i);
                }
            }
            s
        })
        .collect();
    let a_coef: Vec<f64> = c.iter().map(|c| c.powf(p) * gt).collect();
    let b_coef: Vec<f64> =
        (0..k).map(|i| p * (c[i] * gn).powf(p - 1.0) * k0[i] / (beta * (beta + nf - 2.0))).collect();

    let rhs = par::map_range(opts.exec(), grid.unknowns(), |m| {
        let (x, rho) = grid.point(m);
        let r: Vec<f64> = xi.iter().map(|&y| (x - y).hypot(rho)).collect();
        let g_at = |j: usize| gn * r[j].powf(2.0 - nf) - reg.nodes[j][m];
        let w: f64 = (0..k).map(|j| c[j] * g_at(j)).sum();
        let near = (0..k).find(|&i| r[i] < rc[i]);
        let Some(i) = near else {
            return w.max(0.0).powf(p);
        };
        let ri = r[i];
        let s = c[i] * gn * ri.powf(2.0 - nf);
        let mut kx = c[i] * reg.nodes[i][m];
        for j in 0..k {
            if j != i {
                kx -= c[j] * g_at(j);
            }
        }
        let sp = s.powf(p);
        let sp1 = s.powf(p - 1.0);
        if ri <= 0.5 * rc[i] {
            sp * second_order_rest(kx / s, p) - p * sp1 * (kx - k0[i])
        } else {
            let (chi, d1, d2) = cutoff(ri, rc[i]);
            let lap_chi = d2 + (nf - 1.0) / ri * d1;
            let phi = a_coef[i] * ri.powf(-gam) + b_coef[i] * ri.powf(beta);
            let dphi = -gam * a_coef[i] * ri.powf(-gam - 1.0) + beta * b_coef[i] * ri.powf(beta - 1.0);
            let core = sp - p * sp1 * k0[i];
            w.max(0.0).powf(p) - chi * core + 2.0 * d1 * dphi + phi * lap_chi
        }
    });
    let b = grid.rhs(&rhs, &|_, _| 0.0);
    let (u, stats) = grid.solve(&b, &opts.solver)?;
    let mut values = Vec::with_capacity(k);
    for i in 0..k {
        let mut v = -grid.interpolate(&u, xi[i], 0.0)?;
        for j in 0..k {
            if j != i {
                v += a_coef[j] * (xi[i] - xi[j]).abs().powf(-gam);
            }
        }
        values.push(v);
    }
    let field = MeridianField {
        grid: grid.spec,
        n,
        values: grid.to_full(&u),
        source_points: xi.to_vec(),
        singular_coefficients: a_coef,
        stats,
    };
    Ok(HtildeResult {
        tau: (k == 1).then(|| values[0]),
        values,
        cutoffs: rc,
        beta_coefficients: b_coef,
        remainders: vec![field],
    })
}

/// τ̃(y) = H̃_{1,y}(y) for a single unit-weight source.
pub fn tau_tilde(dom: &DomainSpec, y: f64, exps: &CriticalExponents, opts: &GreenOptions) -> Result<f64, GreensError> {
    Ok(htilde_config(dom, &[1.0], &[y], exps, opts)?.values[0])
}

/// Ball of a domain component containing the axis point y, if any.
pub fn component_ball(dom: &DomainSpec, y: f64) -> Option<Ball> {
    dom.balls().into_iter().find(|b| (y - b.center).abs() < b.radius)
}

/// Dumbbell with the given lobes and neck radius, and its meridian grid at
/// spacing `h`. A zero neck gives the disjoint union of the lobes.
pub fn build_dumbbell(
    lobes: &[Lobe],
    eta: f64,
    n: usize,
    h: f64,
) -> Result<(DomainSpec, MeridianGrid), GreensError> {
    let dom = DomainSpec { n, kind: DomainKind::Dumbbell { lobes: lobes.to_vec(), eta } }.normalized();
    let grid = MeridianGrid::build(&dom, h)?;
    Ok((dom, grid))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub n: usize,
    pub grid: GridSpec,
    pub domain: DomainSpec,
    pub domain_hash: String,
    pub source_points: Vec<f64>,
    pub singular_coefficients: Vec<f64>,
    pub stats: SolveStats,
    /// Layout of the binary file.
    pub layout: String,
}

/// Writes `<stem>.bin` (raw f64 samples) and `<stem>.json`.
pub fn write_field(stem: &Path, field: &MeridianField, dom: &DomainSpec) -> std::io::Result<()> {
    std::fs::write(stem.with_extension("bin"), field.to_bytes())?;
    let side = FieldSidecar {
        n: field.n,
        grid: field.grid,
        domain: dom.clone(),
        domain_hash: dom.hash(),
        source_points: field.source_points.clone(),
        singular_coefficients: field.singular_coefficients.clone(),
        stats: field.stats,
        layout: format!("f64 little-endian, {} x {} (rho outer), NaN outside", field.grid.nr, field.grid.nx),
    };
    std::fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&side)?)
}

pub fn read_field(stem: &Path) -> std::io::Result<(MeridianField, FieldSidecar)> {
    let side: FieldSidecar = serde_json::from_slice(&std::fs::read(stem.with_extension("json"))?)?;
    let bytes = std::fs::read(stem.with_extension("bin"))?;
    let values: Vec<f64> =
        bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    if values.len() != side.grid.nx * side.grid.nr {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "sample count does not match grid"));
    }
    let field = MeridianField {
        grid: side.grid,
        n: side.n,
        values,
        source_points: side.source_points.clone(),
        singular_coefficients: side.singular_coefficients.clone(),
        stats: side.stats,
    };
    Ok((field, side))
}

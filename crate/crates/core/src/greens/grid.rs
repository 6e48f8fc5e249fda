//! Meridian-plane discretization of the axisymmetric Laplacian
//!
//!   Δu = ∂²_x u + ∂²_ρ u + (N-2)/ρ ∂_ρ u
//!
//! on a cell-centred grid covering [x0, x0 + nx h] × [0, nr h]. The scheme
//! is the finite-volume form of ∇·(ρ^{N-2}∇u) with exact cell measures, so
//! the matrix is symmetric and the axis face carries no flux. Neighbours
//! outside the domain are replaced by the Dirichlet value at the boundary
//! crossing on the grid line, with the flux taken over the shortened
//! distance θh; this keeps the matrix symmetric and is second order.

use serde::{Deserialize, Serialize};

use crate::error::GreensError;
use crate::greens::domain::{DomainKind, DomainSpec};
use crate::par::{self, Exec};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub h: f64,
    pub nx: usize,
    pub nr: usize,
}

impl GridSpec {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.h
    }
    pub fn rho(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h
    }
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

/// A Dirichlet contribution to one row.
#[derive(Clone, Copy, Debug)]
struct Link {
    row: u32,
    coef: f64,
    x: f64,
    rho: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub exec: Exec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 50_000, exec: Exec::Parallel }
    }
}

pub struct MeridianGrid {
    pub spec: GridSpec,
    pub n: usize,
    /// Unknown index per cell, NONE outside the domain.
    unknown: Vec<u32>,
    /// (i, j) per unknown.
    pub cells: Vec<(u32, u32)>,
    /// ∫ ρ^{N-2} dx dρ over each cell.
    pub vol: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<[(u32, f64); 4]>,
    links: Vec<Link>,
}

/// θ in (0, 1] with φ(P + θ(Q - P)) = 0, given φ(P) < 0 ≤ φ(Q).
fn crossing(dom: &DomainSpec, p: (f64, f64), q: (f64, f64)) -> f64 {
    let at = |t: f64| dom.phi(p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1));
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl MeridianGrid {
    /// Grid of spacing `h` over the bounding box of `dom`.
    pub fn build(dom: &DomainSpec, h: f64) -> Result<MeridianGrid, GreensError> {
        dom.validate()?;
        let (lo, hi, rmax) = dom.bounding_box();
        let nx = ((hi - lo) / h).round().max(1.0) as usize;
        let h = (hi - lo) / nx as f64;
        if let DomainKind::Dumbbell { eta, .. } = dom.kind {
            if eta > 0.0 && eta < 4.0 * h {
                return Err(GreensError::ResolutionTooCoarse { eta, h });
            }
        }
        let nr = (rmax / h).ceil() as usize;
        let spec = GridSpec { x0: lo, h, nx, nr };
        let n = dom.n;
        let w = |rho: f64| rho.powi(n as i32 - 2);
        let mut unknown = vec![NONE; nx * nr];
        let mut cells = Vec::new();
        for j in 0..nr {
            for i in 0..nx {
                if dom.contains(spec.x(i), spec.rho(j)) {
                    unknown[spec.cell(i, j)] = cells.len() as u32;
                    cells.push((i as u32, j as u32));
                }
            }
        }
        if cells.is_empty() {
            return Err(GreensError::InvalidDomain("no grid cell inside the domain".into()));
        }
        let m = cells.len();
        let nm1 = (n - 1) as f64;
        // Cell measure in ρ: (ρ_{j+1/2}^{N-1} - ρ_{j-1/2}^{N-1})/(N-1).
        let vrho = |j: usize| ((j as f64 + 1.0) * h).powi(n as i32 - 1) / nm1 - (j as f64 * h).powi(n as i32 - 1) / nm1;
        let mut vol = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut off = vec![[(NONE, 0.0); 4]; m];
        let mut links = Vec::new();
        for (k, &(i, j)) in cells.iter().enumerate() {
            let (i, j) = (i as usize, j as usize);
            let (xp, rp) = (spec.x(i), spec.rho(j));
            vol[k] = h * vrho(j);
            // (di, dj, coefficient for a full-length face)
            let faces: [(i64, i64, f64); 4] = [
                (1, 0, vrho(j) / h),
                (-1, 0, vrho(j) / h),
                (0, 1, w((j as f64 + 1.0) * h)),
                (0, -1, w(j as f64 * h)),
            ];
            for (slot, &(di, dj, c)) in faces.iter().enumerate() {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if jj < 0 {
                    // axis: zero weight, no flux
                    continue;
                }
                let inside = ii >= 0
                    && (ii as usize) < nx
                    && (jj as usize) < nr
                    && unknown[spec.cell(ii as usize, jj as usize)] != NONE;
                if inside {
                    let q = unknown[spec.cell(ii as usize, jj as usize)];
                    off[k][slot] = (q, c);
                    diag[k] += c;
                } else {
                    let q = (xp + di as f64 * h, rp + dj as f64 * h);
                    let theta = crossing(dom, (xp, rp), q).max(1e-8);
                    let (bx, br) = (xp + theta * di as f64 * h, rp + theta * dj as f64 * h);
                    let cb = if dj != 0 {
                        // ρ-weight at the midpoint of the shortened segment
                        w(rp + 0.5 * theta * dj as f64 * h) / theta
                    } else {
                        c / theta
                    };
                    diag[k] += cb;
                    links.push(Link { row: k as u32, coef: cb, x: bx, rho: br });
                }
            }
        }
        Ok(MeridianGrid { spec, n, unknown, cells, vol, diag, off, links })
    }

    /// Grid with `nx` cells along the axis extent of `dom`.
    pub fn with_cells(dom: &DomainSpec, nx: usize) -> Result<MeridianGrid, GreensError> {
        let (lo, hi, _) = dom.bounding_box();
        Self::build(dom, (hi - lo) / nx as f64)
    }

    pub fn unknowns(&self) -> usize {
        self.cells.len()
    }

    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        let u = self.unknown[self.spec.cell(i, j)];
        (u != NONE).then_some(u as usize)
    }

    pub fn point(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.cells[k];
        (self.spec.x(i as usize), self.spec.rho(j as usize))
    }

    /// Points where grid lines cross the boundary.
    pub fn boundary_points(&self) -> Vec<(f64, f64)> {
        self.links.iter().map(|l| (l.x, l.rho)).collect()
    }

    pub fn apply(&self, exec: Exec, x: &[f64], y: &mut [f64]) {
        par::for_each_mut(exec, y, |k, out| {
            let mut s = self.diag[k] * x[k];
            for &(q, c) in &self.off[k] {
                if q != NONE {
                    s -= c * x[q as usize];
                }
            }
            *out = s;
        });
    }

    /// Right-hand side of the discrete problem -Δu = f, u = g on the boundary.
    pub fn rhs(&self, f: &[f64], g: &(dyn Fn(f64, f64) -> f64 + Sync)) -> Vec<f64> {
        let mut b: Vec<f64> = f.iter().zip(&self.vol).map(|(f, v)| f * v).collect();
        for l in &self.links {
            b[l.row as usize] += l.coef * g(l.x, l.rho);
        }
        b
    }

    /// Jacobi-preconditioned conjugate gradients.
    pub fn solve(&self, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats), GreensError> {
        let m = self.unknowns();
        let exec = opts.exec;
        let bnorm = par::dot(exec, b, b).sqrt();
        let mut x = vec![0.0; m];
        if bnorm == 0.0 {
            return Ok((x, SolveStats::default()));
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; m];
        let mut rz = par::dot(exec, &r, &z);
        let mut res = 1.0;
        for it in 1..=opts.max_iter {
            self.apply(exec, &p, &mut ap);
            let alpha = rz / par::dot(exec, &p, &ap);
            par::for_each_mut(exec, &mut x, |k, v| *v += alpha * p[k]);
            par::for_each_mut(exec, &mut r, |k, v| *v -= alpha * ap[k]);
            res = par::dot(exec, &r, &r).sqrt() / bnorm;
            if res <= opts.tol {
                // Report the true residual, not the recurrence one.
                let mut ax = vec![0.0; m];
                self.apply(exec, &x, &mut ax);
                let true_res = par::sum(exec, m, |k| (b[k] - ax[k]).powi(2)).sqrt() / bnorm;
                return Ok((x, SolveStats { iterations: it, rel_residual: true_res }));
            }
            par::for_each_mut(exec, &mut z, |k, v| *v = r[k] / self.diag[k]);
            let rz_new = par::dot(exec, &r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            par::for_each_mut(exec, &mut p, |k, v| *v = z[k] + beta * *v);
        }
        Err(GreensError::NotConverged { iterations: opts.max_iter, residual: res })
    }

    /// Number of 4-connected components of the interior mask.
    pub fn mask_components(&self) -> usize {
        let m = self.unknowns();
        let mut seen = vec![false; m];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..m {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(k) = stack.pop() {
                for &(q, _) in &self.off[k] {
                    if q != NONE && !seen[q as usize] {
                        seen[q as usize] = true;
                        stack.push(q as usize);
                    }
                }
            }
        }
        count
    }

    /// Expand unknown values to the full grid, NaN outside the domain.
    pub fn to_full(&self, u: &[f64]) -> Vec<f64> {
        let mut full = vec![f64::NAN; self.spec.nx * self.spec.nr];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            full[self.spec.cell(i as usize, j as usize)] = u[k];
        }
        full
    }

    /// Biquadratic interpolation of unknown values at (x, ρ).
    pub fn interpolate(&self, u: &[f64], x: f64, rho: f64) -> Result<f64, GreensError> {
        interpolate_grid(&self.spec, x, rho, |i, j| self.index(i, j).map(|k| u[k]))
    }
}

/// Biquadratic interpolation at (x, ρ) from cell values, using even
/// reflection across the axis. `value` returns None outside the domain;
/// the 3×3 stencil is moved inwards when it would reach such a cell.
pub fn interpolate_grid(
    s: &GridSpec,
    x: f64,
    rho: f64,
    value: impl Fn(usize, usize) -> Option<f64>,
) -> Result<f64, GreensError> {
    let fi = (x - s.x0) / s.h - 0.5;
    let fj = rho.abs() / s.h - 0.5;
    let ic0 = fi.round() as i64;
    let jc0 = fj.round() as i64;
    let at = |i: i64, j: i64| -> Option<f64> {
        let j = if j < 0 { -1 - j } else { j };
        if i < 0 || i as usize >= s.nx || j as usize >= s.nr {
            return None;
        }
        value(i as usize, j as usize)
    };
    // Lagrange weights for nodes at -1, 0, 1.
    let lag = |t: f64| -> [f64; 3] { [0.5 * t * (t - 1.0), (1.0 - t) * (1.0 + t), 0.5 * t * (t + 1.0)] };
    let mut shifts = vec![(0i64, 0i64)];
    for d in 1..=2i64 {
        for sh in [(d, 0), (-d, 0), (0, d), (0, -d), (d, d), (d, -d), (-d, d), (-d, -d)] {
            shifts.push(sh);
        }
    }
    'outer: for (si, sj) in shifts {
        let (ic, jc) = (ic0 + si, jc0 + sj);
        let wx = lag(fi - ic as f64);
        let wr = lag(fj - jc as f64);
        let mut acc = 0.0;
        for (a, wa) in wx.iter().enumerate() {
            for (b, wb) in wr.iter().enumerate() {
                match at(ic + a as i64 - 1, jc + b as i64 - 1) {
                    Some(v) => acc += wa * wb * v,
                    None => continue 'outer,
                }
            }
        }
        return Ok(acc);
    }
    Err(GreensError::OutsideDomain { x, rho })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_boundary_data_is_reproduced() {
        let d = DomainSpec::unit_ball(5);
        let g = MeridianGrid::with_cells(&d, 32).unwrap();
        let b = g.rhs(&vec![0.0; g.unknowns()], &|_, _| 2.5);
        let (u, _) = g.solve(&b, &SolverOptions { tol: 1e-13, ..Default::default() }).unwrap();
        assert!(u.iter().all(|v| (v - 2.5).abs() < 1e-10));
    }

    #[test]
    fn operator_is_symmetric() {
        let d = DomainSpec::unit_ball(6);
        let g = MeridianGrid::with_cells(&d, 16).unwrap();
        for k in 0..g.unknowns() {
            for &(q, c) in &g.off[k] {
                if q != NONE {
                    let back = g.off[q as usize].iter().find(|e| e.0 == k as u32).unwrap();
                    assert_eq!(back.1, c);
                }
            }
        }
    }
}

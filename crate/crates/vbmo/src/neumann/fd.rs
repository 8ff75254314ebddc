//! Embedded-boundary finite difference Neumann solver.
//!
//! The domain is cut out of a uniform grid; cells with d >= 0 carry
//! unknowns and the 5-point Laplacian is closed near the boundary with
//! ghost values built from the mirror principle
//!   u(Q) = u(Q*) + 2 |d_Q| g(pi Q),
//! Q* the reflection of the outside cell Q across the boundary and g the
//! outward normal derivative. The mirror value is bilinear in the inside
//! unknowns, so the whole operator stays a sparse matrix; the constant
//! nullspace is handled with a rank-one shift and a final mean projection.

use rayon::prelude::*;

use crate::error::{NeumannError, Result};
use crate::fields::ScalarField;
use crate::geometry::Domain;
use crate::grid::Grid;

use super::BoundaryFunction;

struct SparseOp {
    /// Row pointers into cols/vals, one row per inside cell.
    rows: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseOp {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let mut acc = 0.0;
            for k in self.rows[r]..self.rows[r + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *out = acc;
        });
    }
}

pub struct NeumannSolver<'a> {
    pub domain: &'a Domain,
    pub grid: Grid,
    /// Grid index per unknown.
    inside: Vec<usize>,
    /// Unknown id per grid cell, usize::MAX outside.
    slot: Vec<usize>,
    op: SparseOp,
    /// Constant ghost contribution per unknown, scaled by 1/h^2, to be
    /// multiplied against the boundary data at the stored arclengths.
    ghost_rhs: Vec<(usize, f64, f64)>,
    /// Signed distance snapshot.
    pub dist: ScalarField,
}

pub struct NeumannReport {
    pub iterations: usize,
    pub residual: f64,
    pub compat_defect: f64,
}

impl<'a> NeumannSolver<'a> {
    pub fn new(domain: &'a Domain, grid: Grid) -> Result<Self> {
        let n = grid.n;
        let h = grid.h();
        let dist_data: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let (x, y) = grid.point(k % n, k / n);
                domain.signed_distance(x, y)
            })
            .collect();
        let dist = ScalarField { grid, data: dist_data };

        let mut slot = vec![usize::MAX; n * n];
        let mut inside = Vec::new();
        for k in 0..n * n {
            if dist.data[k] >= 0.0 {
                slot[k] = inside.len();
                inside.push(k);
            }
        }
        if inside.is_empty() {
            return Err(NeumannError::QuadratureDegenerate(format!("grid spacing {h} cannot resolve the boundary")).into());
        }

        // Assemble rows. Each inside cell gets the 5-point Laplacian;
        // outside neighbors are eliminated through the mirror formula.
        let mut rows = vec![0usize];
        let mut cols: Vec<u32> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut ghost_rhs: Vec<(usize, f64, f64)> = Vec::new();
        let inv_h2 = 1.0 / (h * h);

        let mut row_accum: Vec<(u32, f64)> = Vec::new();
        for (r, &k) in inside.iter().enumerate() {
            let (i, j) = (k % n, k / n);
            row_accum.clear();
            row_accum.push((r as u32, 4.0 * inv_h2));
            let neighbors =
                [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
            for &(ni, nj) in &neighbors {
                if ni >= n || nj >= n {
                    // Grid must contain the domain with margin; a missing
                    // neighbor of an inside cell means it does not.
                    return Err(NeumannError::QuadratureDegenerate(format!("grid spacing {h} cannot resolve the boundary")).into());
                }
                let nk = grid.idx(ni, nj);
                if slot[nk] != usize::MAX {
                    row_accum.push((slot[nk] as u32, -inv_h2));
                    continue;
                }
                // Ghost neighbor: quadratic extrapolation along the normal
                // line through two interior points at depths t1 < t2 whose
                // bilinear stencils stay inside, with the known slope
                // du/d(tau) = -g at the boundary absorbed into the data:
                //   u(Q) = (1 - a) u(t1) + a u(t2)
                //          + g [(t1 + |d|) + a (t2 - t1)],
                //   a = (d^2 - t1^2) / (t2^2 - t1^2).
                let (qx, qy) = grid.point(ni, nj);
                let (_, s, d) = domain.project_raw(qx, qy);
                let nu = domain.normal_at_s(s);
                let depth = d.abs();
                let (t1, t2) = (2.0 * h, 4.0 * h);
                let a = (depth * depth - t1 * t1) / (t2 * t2 - t1 * t1);
                let p = domain.point_at_s(s);
                let w1 = inside_bilinear(&grid, &slot, p.0 + t1 * nu.0, p.1 + t1 * nu.1, nu)?;
                let w2 = inside_bilinear(&grid, &slot, p.0 + t2 * nu.0, p.1 + t2 * nu.1, nu)?;
                for &(c, w) in &w1 {
                    row_accum.push((c, -w * (1.0 - a) * inv_h2));
                }
                for &(c, w) in &w2 {
                    row_accum.push((c, -w * a * inv_h2));
                }
                ghost_rhs.push((r, s, ((t1 + depth) + a * (t2 - t1)) * inv_h2));
            }
            // Merge duplicate columns.
            row_accum.sort_unstable_by_key(|e| e.0);
            let mut last: Option<u32> = None;
            for &(c, v) in row_accum.iter() {
                if last == Some(c) {
                    let t = vals.len() - 1;
                    vals[t] += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            rows.push(cols.len());
        }

        Ok(NeumannSolver {
            domain,
            grid,
            inside,
            slot,
            op: SparseOp { rows, cols, vals },
            ghost_rhs,
            dist,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.inside.len()
    }

    /// Solve -Lap u = f in the domain with du/dn_out = g, up to an
    /// additive constant (returned with mean zero over the inside cells).
    pub fn solve(
        &self,
        f: &ScalarField,
        g: &BoundaryFunction,
        compat_tol: f64,
    ) -> Result<(ScalarField, NeumannReport)> {
        let h = self.grid.h();
        let m = self.inside.len();
        let mut b = vec![0.0f64; m];
        for (r, &k) in self.inside.iter().enumerate() {
            b[r] = f.data[k];
        }
        for &(r, s, w) in &self.ghost_rhs {
            b[r] += w * g.at(s);
        }

        // Continuum compatibility: integral of f over the domain plus the
        // boundary integral of g must vanish for -Lap u = f, du/dn_out = g.
        let f_mass: f64 = self.inside.iter().map(|&k| f.data[k]).sum::<f64>() * h * h;
        let g_mass = g.integral();
        let scale = {
            let fs: f64 = self.inside.iter().map(|&k| f.data[k].abs()).sum::<f64>() * h * h;
            (fs + g.sup() * self.domain.length).max(1e-300)
        };
        let defect = (f_mass + g_mass).abs();
        if defect > compat_tol * scale {
            return Err(NeumannError::CompatibilityViolation(defect / scale, compat_tol).into());
        }
        // Remove the residual incompatibility uniformly so the discrete
        // system is as close to the operator range as the data allows.
        let shift = (f_mass + g_mass) / (m as f64 * h * h);
        for v in b.iter_mut() {
            *v -= shift;
        }

        let (u, iterations, residual) = bicgstab(&self.op, &b, 1e-10, 40_000)?;
        let mean = u.iter().sum::<f64>() / m as f64;
        let mut field = ScalarField::zeros(self.grid);
        for v in field.data.iter_mut() {
            *v = f64::NAN;
        }
        for (r, &k) in self.inside.iter().enumerate() {
            field.data[k] = u[r] - mean;
        }
        // Outside cells: fill with nearest-boundary mirror so downstream
        // interpolation near the boundary sees smooth data.
        let n = self.grid.n;
        for k in 0..n * n {
            if self.slot[k] == usize::MAX {
                let (x, y) = self.grid.point(k % n, k / n);
                let (_, s, d) = self.domain.project_raw(x, y);
                if d > -4.0 * h {
                    let nu = self.domain.normal_at_s(s);
                    let depth = d.abs();
                    let t = (2.0 * depth).max(2.0 * h);
                    let p = self.domain.point_at_s(s);
                    let (mx, my) = (p.0 + t * nu.0, p.1 + t * nu.1);
                    if let Ok(ws) = inside_bilinear(&self.grid, &self.slot, mx, my, nu)
                    {
                        let mut acc = (t + depth) * g.at(s);
                        for &(c, w) in &ws {
                            acc += w * (u[c as usize] - mean);
                        }
                        field.data[k] = acc;
                    } else {
                        field.data[k] = 0.0;
                    }
                } else {
                    field.data[k] = 0.0;
                }
            }
        }
        Ok((field, NeumannReport { iterations, residual, compat_defect: defect / scale }))
    }
}

/// Bilinear weights at (x, y) over inside cells only: outside stencil
/// members lose their weight to the inside ones (renormalized). If the
/// whole stencil is outside, step inward along nu until it is not.
fn inside_bilinear(
    grid: &Grid,
    slot: &[usize],
    x: f64,
    y: f64,
    nu: (f64, f64),
) -> Result<Vec<(u32, f64)>> {
    let h = grid.h();
    let mut px = x;
    let mut py = y;
    for _ in 0..8 {
        let (fi, fj) = grid.frac_index(px, py);
        let i0 = (fi.floor().max(0.0) as usize).min(grid.n - 2);
        let j0 = (fj.floor().max(0.0) as usize).min(grid.n - 2);
        let tx = (fi - i0 as f64).clamp(0.0, 1.0);
        let ty = (fj - j0 as f64).clamp(0.0, 1.0);
        let stencil = [
            (grid.idx(i0, j0), (1.0 - tx) * (1.0 - ty)),
            (grid.idx(i0 + 1, j0), tx * (1.0 - ty)),
            (grid.idx(i0, j0 + 1), (1.0 - tx) * ty),
            (grid.idx(i0 + 1, j0 + 1), tx * ty),
        ];
        let mut total = 0.0;
        let mut out: Vec<(u32, f64)> = Vec::with_capacity(4);
        for &(k, w) in &stencil {
            if slot[k] != usize::MAX && w > 0.0 {
                total += w;
                out.push((slot[k] as u32, w));
            }
        }
        if total > 0.25 {
            for e in out.iter_mut() {
                e.1 /= total;
            }
            return Ok(out);
        }
        px += 0.75 * h * nu.0;
        py += 0.75 * h * nu.1;
    }
    Err(NeumannError::QuadratureDegenerate(format!("grid spacing {h} cannot resolve the boundary")).into())
}

fn bicgstab(op: &SparseOp, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
    let m = b.len();
    let dot = |a: &[f64], c: &[f64]| -> f64 { a.par_iter().zip(c).map(|(x, y)| x * y).sum() };
    let norm = |a: &[f64]| -> f64 { dot(a, a).sqrt() };
    let demean = |a: &mut [f64]| {
        let mu = a.iter().sum::<f64>() / m as f64;
        a.iter_mut().for_each(|v| *v -= mu);
    };

    let bnorm = norm(b).max(1e-300);
    let mut x = vec![0.0f64; m];
    let mut r = b.to_vec();
    demean(&mut r);
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0f64; m];
    let mut p = vec![0.0f64; m];
    let mut tmp = vec![0.0f64; m];
    let mut res = norm(&r);

    for it in 0..max_iter {
        if res <= tol * bnorm {
            return Ok((x, it, res / bnorm));
        }
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..m {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        op.apply(&p, &mut v);
        demean(&mut v);
        alpha = rho / dot(&r0, &v);
        let s: Vec<f64> = (0..m).map(|k| r[k] - alpha * v[k]).collect();
        op.apply(&s, &mut tmp);
        demean(&mut tmp);
        let t_dot = dot(&tmp, &tmp);
        omega = if t_dot > 0.0 { dot(&tmp, &s) / t_dot } else { 0.0 };
        for k in 0..m {
            x[k] += alpha * p[k] + omega * s[k];
            r[k] = s[k] - omega * tmp[k];
        }
        res = norm(&r);
        if !res.is_finite() {
            return Err(NeumannError::SolverDivergence(res, max_iter).into());
        }
    }
    if res <= 1e-7 * bnorm {
        return Ok((x, max_iter, res / bnorm));
    }
    Err(NeumannError::SolverDivergence(res / bnorm, max_iter).into())
}

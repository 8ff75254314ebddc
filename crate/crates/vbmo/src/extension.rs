//! Parity extension across the boundary.
//!
//! Scalars extend evenly: f_bar(x) = f(x*) with x* the mirror of x across
//! the boundary along the normal line. Vector fields split into normal and
//! tangential parts through the projection pair P = grad d (x) grad d and
//! Q = I - P; the normal part extends oddly, the tangential part evenly,
//! which is exactly the structure the frozen solver needs.

use crate::error::{ExtensionError, Result};
use crate::fields::{ScalarField, VectorField};
use crate::geometry::{ChartFrame, Domain};
use crate::grid::Grid;

/// Mirror of a collar point across the boundary: x* = pi(x) - d * nu.
pub fn reflect(domain: &Domain, x: f64, y: f64) -> Result<(f64, f64)> {
    let (theta, s, d) = domain.project_raw(x, y);
    let _ = theta;
    if d.abs() >= domain.reach {
        return Err(ExtensionError::OutOfReach(d.abs(), domain.reach).into());
    }
    let nu = domain.normal_at_s(s);
    let p = domain.point_at_s(s);
    Ok((p.0 - d * nu.0, p.1 - d * nu.1))
}

/// Normal/tangential projection pair at a collar point.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionPair {
    /// Inward normal at the projected boundary point.
    pub nu: (f64, f64),
}

impl ProjectionPair {
    pub fn at(domain: &Domain, x: f64, y: f64) -> Result<Self> {
        let (_, s, d) = domain.project_raw(x, y);
        if d.abs() >= domain.reach {
            return Err(ExtensionError::OutOfReach(d.abs(), domain.reach).into());
        }
        Ok(ProjectionPair { nu: domain.normal_at_s(s) })
    }

    /// P v: normal part.
    pub fn normal(&self, v: (f64, f64)) -> (f64, f64) {
        let c = self.nu.0 * v.0 + self.nu.1 * v.1;
        (c * self.nu.0, c * self.nu.1)
    }

    /// Q v: tangential part.
    pub fn tangential(&self, v: (f64, f64)) -> (f64, f64) {
        let (nx, ny) = self.normal(v);
        (v.0 - nx, v.1 - ny)
    }
}

/// Pointwise evaluator for the parity extension of a chart-supported vector
/// field. Evaluating through the functional form (rather than a resampled
/// grid) keeps the parity identity exact up to the projection tolerance.
pub struct ParityExtension<'a> {
    pub domain: &'a Domain,
    pub chart: ChartFrame,
    vx: ScalarField,
    vy: ScalarField,
}

impl<'a> ParityExtension<'a> {
    /// Checks that the field is supported in the chart cylinder intersected
    /// with the closed domain before building the evaluator.
    pub fn new(domain: &'a Domain, field: &'a VectorField, chart: ChartFrame) -> Result<Self> {
        let grid = field.grid;
        let rho = chart.rho;
        let mut leak: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..grid.n {
            for i in 0..grid.n {
                let k = grid.idx(i, j);
                let mag = (field.x[k] * field.x[k] + field.y[k] * field.y[k]).sqrt();
                scale = scale.max(mag);
                if mag == 0.0 {
                    continue;
                }
                let (x, y) = grid.point(i, j);
                let (_, s, d) = domain.project_raw(x, y);
                let ds = domain.wrap_arc(s - chart.s_center);
                if d < -1e-12 || d.abs() >= rho || ds.abs() >= rho {
                    leak = leak.max(mag);
                }
            }
        }
        if leak > 1e-12 * scale.max(1e-300) {
            return Err(ExtensionError::SupportViolation(leak).into());
        }
        let vx = ScalarField { grid, data: field.x.clone() };
        let vy = ScalarField { grid, data: field.y.clone() };
        Ok(ParityExtension { domain, chart, vx, vy })
    }

    /// v_bar(x): the field itself inside, the parity reflection outside.
    pub fn eval(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (_, s, d) = self.domain.project_raw(x, y);
        if d >= 0.0 {
            return Ok((self.vx.sample_cubic(x, y), self.vy.sample_cubic(x, y)));
        }
        if d.abs() >= self.chart.rho {
            return Ok((0.0, 0.0));
        }
        let nu = self.domain.normal_at_s(s);
        let p = self.domain.point_at_s(s);
        let (mx, my) = (p.0 - d * nu.0, p.1 - d * nu.1);
        let v = (self.vx.sample_cubic(mx, my), self.vy.sample_cubic(mx, my));
        let pair = ProjectionPair { nu };
        let (pnx, pny) = pair.normal(v);
        let (qtx, qty) = pair.tangential(v);
        // Odd normal part, even tangential part.
        Ok((qtx - pnx, qty - pny))
    }

    /// Sample the extension on a grid.
    pub fn to_grid(&self, grid: Grid) -> Result<VectorField> {
        let mut out = VectorField::zeros(grid);
        for j in 0..grid.n {
            for i in 0..grid.n {
                let (x, y) = grid.point(i, j);
                let (a, b) = self.eval(x, y)?;
                let k = grid.idx(i, j);
                out.x[k] = a;
                out.y[k] = b;
            }
        }
        Ok(out)
    }
}

/// Even extension of a scalar field into the exterior collar: outside
/// points within the collar take the value at their mirror point; other
/// points are left untouched.
pub fn extend_even_scalar(domain: &Domain, f: &ScalarField) -> ScalarField {
    let grid = f.grid;
    let mut out = f.clone();
    for j in 0..grid.n {
        for i in 0..grid.n {
            let (x, y) = grid.point(i, j);
            let (_, s, d) = domain.project_raw(x, y);
            if d < 0.0 && d.abs() < domain.reach * 0.95 {
                let nu = domain.normal_at_s(s);
                let p = domain.point_at_s(s);
                out.data[grid.idx(i, j)] = f.sample_cubic(p.0 - d * nu.0, p.1 - d * nu.1);
            }
        }
    }
    out
}

//! Boundary data, layer potentials and the interior Neumann solve.
//!
//! Two independent routes to the single layer potential live here: direct
//! arclength quadrature against the fundamental solution, and a collar
//! volume formulation that trades the line integral for free-space
//! convolutions with a mollified surface measure. The finite-difference
//! Neumann solver is in `fd`.

pub mod fd;

use serde::{Deserialize, Serialize};

use crate::error::{NeumannError, Result};
use crate::fields::{ScalarField, VectorField};
use crate::geometry::{smoothstep, Domain};
use crate::grid::cubic_weights;
use crate::singular::SpectralBox;

/// Samples of a function on the boundary at equispaced arclength nodes
/// s_k = k * length / m.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryFunction {
    pub length: f64,
    pub samples: Vec<f64>,
}

impl BoundaryFunction {
    pub fn from_fn(domain: &Domain, m: usize, f: impl Fn(f64) -> f64) -> Self {
        let length = domain.length;
        let samples = (0..m).map(|k| f(k as f64 * length / m as f64)).collect();
        BoundaryFunction { length, samples }
    }

    /// Periodic cubic interpolation in arclength.
    pub fn at(&self, s: f64) -> f64 {
        let m = self.samples.len();
        let t = (s / self.length * m as f64).rem_euclid(m as f64);
        let i0 = t.floor() as usize % m;
        let w = cubic_weights(t - t.floor());
        let mut acc = 0.0;
        for (k, &wk) in w.iter().enumerate() {
            let idx = (i0 + m + k - 1) % m;
            acc += wk * self.samples[idx];
        }
        acc
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Trapezoid integral over the boundary (exact for the equispaced
    /// periodic rule: mean times length).
    pub fn integral(&self) -> f64 {
        self.mean() * self.length
    }

    pub fn sup(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }
}

/// Single layer potential (E * g dS)(x) by periodic trapezoid quadrature,
/// refining the rule when x approaches the boundary so the node spacing
/// stays well under the distance to the singularity.
pub fn single_layer(domain: &Domain, g: &BoundaryFunction, x: f64, y: f64) -> f64 {
    let dist = domain.signed_distance(x, y).abs().max(1e-6);
    let m = quad_nodes(domain, dist);
    let ds = domain.length / m as f64;
    let mut acc = 0.0;
    for k in 0..m {
        let s = k as f64 * ds;
        let p = domain.point_at_s(s);
        let r2 = (x - p.0) * (x - p.0) + (y - p.1) * (y - p.1);
        acc += -0.5 * r2.ln() / (2.0 * std::f64::consts::PI) * g.at(s) * ds;
    }
    acc
}

/// Gradient of the single layer at an off-boundary point, same rule.
pub fn single_layer_gradient(domain: &Domain, g: &BoundaryFunction, x: f64, y: f64) -> (f64, f64) {
    let dist = domain.signed_distance(x, y).abs().max(1e-6);
    let m = quad_nodes(domain, dist);
    let ds = domain.length / m as f64;
    let mut ax = 0.0;
    let mut ay = 0.0;
    for k in 0..m {
        let s = k as f64 * ds;
        let p = domain.point_at_s(s);
        let (zx, zy) = (x - p.0, y - p.1);
        let r2 = zx * zx + zy * zy;
        let w = -g.at(s) * ds / (2.0 * std::f64::consts::PI * r2);
        ax += w * zx;
        ay += w * zy;
    }
    (ax, ay)
}

/// Flux of the fundamental solution through the boundary, seen from x:
/// integral of nu_out . grad_y E(x - y) over the boundary. Equals -1 for
/// interior points and 0 outside.
pub fn gauss_flux(domain: &Domain, x: f64, y: f64) -> f64 {
    let dist = domain.signed_distance(x, y).abs().max(1e-6);
    let m = quad_nodes(domain, dist);
    let ds = domain.length / m as f64;
    let mut acc = 0.0;
    for k in 0..m {
        let s = k as f64 * ds;
        let p = domain.point_at_s(s);
        let nu_in = domain.normal_at_s(s);
        let (zx, zy) = (x - p.0, y - p.1);
        let r2 = zx * zx + zy * zy;
        // grad_y E(x - y) = (x - y)/(2 pi r^2); outward normal = -nu_in.
        acc += -(nu_in.0 * zx + nu_in.1 * zy) / (2.0 * std::f64::consts::PI * r2) * ds;
    }
    acc
}

/// Upper Riemann estimate of the absolute double layer kernel mass
/// integral of |nu_out . grad E| ds, seen from x.
pub fn abs_kernel_mass(domain: &Domain, x: f64, y: f64) -> f64 {
    let dist = domain.signed_distance(x, y).abs().max(1e-6);
    let m = quad_nodes(domain, dist);
    let ds = domain.length / m as f64;
    let mut acc = 0.0;
    for k in 0..m {
        let s = k as f64 * ds;
        let p = domain.point_at_s(s);
        let nu_in = domain.normal_at_s(s);
        let (zx, zy) = (x - p.0, y - p.1);
        let r2 = zx * zx + zy * zy;
        acc += (nu_in.0 * zx + nu_in.1 * zy).abs() / (2.0 * std::f64::consts::PI * r2) * ds;
    }
    acc
}

fn quad_nodes(domain: &Domain, dist: f64) -> usize {
    let base = 2048usize;
    let needed = (10.0 * domain.length / dist).ceil() as usize;
    base.max(needed.min(1 << 17))
}

/// Collar fields realizing the single layer as a volume potential. The
/// surface measure g dS is mollified into g_e(x) H'(d(x)/delta)/delta with
/// g_e constant along normal lines, and the normal-line structure turns
/// the layer gradient into two free-space convolutions supported in the
/// collar band.
pub struct CollarExtension {
    pub delta: f64,
    /// g_e(x) = g(s(pi x)) on the collar band, zero outside it.
    pub g_collar: ScalarField,
    /// m = H(d) c(d): smoothed interior indicator times the deep cutoff.
    pub mask: ScalarField,
    /// H'(d) c(d): the mollified surface measure weight.
    pub layer_w: ScalarField,
    /// H(d) c'(d): derivative mass of the deep cutoff alone.
    pub deep_w: ScalarField,
    /// grad d on the band.
    pub grad_d: VectorField,
    /// Lap d = -kappa / (1 - d kappa) on the band.
    pub lap_d: ScalarField,
}

impl CollarExtension {
    pub fn build(
        domain: &Domain,
        g: &BoundaryFunction,
        grid: crate::grid::Grid,
        delta: f64,
    ) -> Result<Self> {
        if delta <= 0.0 || delta > domain.rho / 2.0 {
            return Err(NeumannError::QuadratureDegenerate(format!("mollification width {delta} outside (0, rho/2]")).into());
        }
        let rho = domain.rho;
        let mut g_collar = ScalarField::zeros(grid);
        let mut mask = ScalarField::zeros(grid);
        let mut layer_w = ScalarField::zeros(grid);
        let mut deep_w = ScalarField::zeros(grid);
        let mut grad_d = VectorField::zeros(grid);
        let mut lap_d = ScalarField::zeros(grid);
        for j in 0..grid.n {
            for i in 0..grid.n {
                let (x, y) = grid.point(i, j);
                let (_, s, d) = domain.project_raw(x, y);
                if d <= -2.0 * delta || d >= rho {
                    continue;
                }
                let k = grid.idx(i, j);
                // Smoothed Heaviside of the interior, width delta.
                let hv = smoothstep(0.5 * (d / delta + 1.0));
                let hp = smoothstep_deriv(0.5 * (d / delta + 1.0)) * 0.5 / delta;
                // Deep cutoff: 1 for d <= rho/2, 0 for d >= rho.
                let c = 1.0 - smoothstep((d - rho / 2.0) / (rho / 2.0));
                let cp = -smoothstep_deriv((d - rho / 2.0) / (rho / 2.0)) / (rho / 2.0);
                g_collar.data[k] = g.at(s);
                mask.data[k] = hv * c;
                layer_w.data[k] = hp * c;
                deep_w.data[k] = hv * cp;
                let nu = domain.normal_at_s(s);
                grad_d.x[k] = nu.0;
                grad_d.y[k] = nu.1;
                let kap = domain.kappa_at_s(s);
                lap_d.data[k] = domain.laplacian_d(d, kap);
            }
        }
        Ok(CollarExtension { delta, g_collar, mask, layer_w, deep_w, grad_d, lap_d })
    }

    /// Mollified surface source g_e H'(d) c(d): what E is convolved
    /// against to approximate the single layer as a volume potential.
    pub fn layer_source(&self) -> ScalarField {
        let grid = self.g_collar.grid;
        let mut out = ScalarField::zeros(grid);
        for k in 0..out.data.len() {
            out.data[k] = self.g_collar.data[k] * self.layer_w.data[k];
        }
        out
    }

    /// grad(E * g dS), mollified: the identity
    ///   div(g_e m grad d) = g_e m Lap d + g_e (H' c + H c')
    /// (g_e is constant along normals, m = H c) isolates the layer source
    ///   g_e H' c = div(g_e m grad d) - g_e m Lap d - g_e H c',
    /// turning its potential gradient into two free-space convolutions
    /// supported in the collar band.
    pub fn gradient(&self, sb: &SpectralBox) -> Result<VectorField> {
        let grid = self.g_collar.grid;
        let mut flux = VectorField::zeros(grid);
        let mut rem = ScalarField::zeros(grid);
        for k in 0..flux.x.len() {
            let gm = self.g_collar.data[k] * self.mask.data[k];
            flux.x[k] = gm * self.grad_d.x[k];
            flux.y[k] = gm * self.grad_d.y[k];
            rem.data[k] = gm * self.lap_d.data[k] + self.g_collar.data[k] * self.deep_w.data[k];
        }
        let a = sb.grad_e_conv(&flux)?;
        let b = sb.newtonian_gradient(&rem)?;
        Ok(a.sub(&b))
    }
}

fn smoothstep_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

/// Inward normal derivative of a grid function along the boundary, by a
/// two-point inward difference at offsets 1.5h and 3h.
pub fn normal_trace(domain: &Domain, u: &ScalarField, m: usize) -> BoundaryFunction {
    let h = u.grid.h();
    BoundaryFunction::from_fn(domain, m, |s| {
        let p = domain.point_at_s(s);
        let nu = domain.normal_at_s(s);
        let u1 = u.sample_cubic(p.0 + 1.5 * h * nu.0, p.1 + 1.5 * h * nu.1);
        let u2 = u.sample_cubic(p.0 + 3.0 * h * nu.0, p.1 + 3.0 * h * nu.1);
        (u2 - u1) / (1.5 * h)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainKind;
    use crate::grid::Grid;

    fn disk() -> Domain {
        Domain::new(DomainKind::Disk { radius: 1.0 }, 0.05).unwrap()
    }

    #[test]
    fn gauss_flux_is_minus_one_inside() {
        let dom = disk();
        for &(x, y) in &[(0.0, 0.0), (0.5, 0.3), (0.9, 0.0), (0.0, 0.97)] {
            let f = gauss_flux(&dom, x, y);
            assert!((f + 1.0).abs() < 1e-3, "flux at ({x},{y}) = {f}");
        }
        assert!(gauss_flux(&dom, 1.5, 0.0).abs() < 1e-3);
    }

    #[test]
    fn single_layer_of_constant_on_unit_circle() {
        // S 1 (x) = -ln max(|x|, 1) for the unit circle (mean of -ln r
        // over the circle), times the circumference handled by the rule.
        let dom = disk();
        let g = BoundaryFunction::from_fn(&dom, 512, |_| 1.0);
        let inside = single_layer(&dom, &g, 0.3, 0.2);
        assert!(inside.abs() < 1e-6, "inside: {inside}");
        let outside = single_layer(&dom, &g, 2.0, 0.0);
        assert!((outside + 2.0f64.ln()).abs() < 1e-6, "outside: {outside}");
    }

    #[test]
    fn boundary_function_interpolates() {
        let dom = disk();
        let g = BoundaryFunction::from_fn(&dom, 256, |s| (3.0 * s).sin());
        let s = 1.2345;
        assert!((g.at(s) - (3.0 * s).sin()).abs() < 1e-4);
        assert!(g.integral().abs() < 1e-9);
    }

    #[test]
    fn collar_gradient_matches_quadrature_far_from_boundary() {
        let dom = disk();
        let grid = Grid::centered(512, 1.3);
        let sb = SpectralBox::new(grid);
        let g = BoundaryFunction::from_fn(&dom, 512, |s| (2.0 * std::f64::consts::PI * s / dom.length).cos());
        let ext = CollarExtension::build(&dom, &g, grid, dom.rho / 4.0).unwrap();
        let grad = ext.gradient(&sb).unwrap();
        let gx = ScalarField { grid, data: grad.x.clone() };
        let gy = ScalarField { grid, data: grad.y.clone() };
        let mut worst: f64 = 0.0;
        for &(x, y) in &[(0.0, 0.0), (0.4, 0.1), (-0.3, 0.5), (0.6, -0.2), (0.0, 0.65)] {
            let want = single_layer_gradient(&dom, &g, x, y);
            let got = (gx.sample_cubic(x, y), gy.sample_cubic(x, y));
            worst = worst.max((got.0 - want.0).abs()).max((got.1 - want.1).abs());
        }
        assert!(worst < 1e-3, "worst deviation {worst}");
    }
}

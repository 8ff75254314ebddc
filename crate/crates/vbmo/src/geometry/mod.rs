//! Smooth bounded planar domains given by an analytic radius function
//! r(theta) about the origin, with the boundary calculus the rest of the
//! pipeline relies on: signed distance (positive inside), nearest-point
//! projection, curvature, arc length, reach, boundary charts and the
//! partition of unity subordinate to them.

pub mod chart;
pub mod partition;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::fields::ScalarField;
use crate::grid::Grid;

pub use chart::{ChartFrame, MetricCoefficients, NormalCoordMap};

/// One Fourier term of a star-shaped radius function.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StarTerm {
    pub k: u32,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Star { r0: f64, terms: Vec<StarTerm> },
}

impl DomainKind {
    /// Radius function and its first two theta derivatives.
    pub fn radius(&self, theta: f64) -> (f64, f64, f64) {
        match self {
            DomainKind::Disk { radius } => (*radius, 0.0, 0.0),
            DomainKind::Ellipse { a, b } => {
                let (c, s) = (theta.cos(), theta.sin());
                let w = b * b * c * c + a * a * s * s;
                let wp = (a * a - b * b) * (2.0 * theta).sin();
                let wpp = 2.0 * (a * a - b * b) * (2.0 * theta).cos();
                let ab = a * b;
                let r = ab / w.sqrt();
                let rp = -0.5 * ab * wp / w.powf(1.5);
                let rpp = ab * (0.75 * wp * wp / w.powf(2.5) - 0.5 * wpp / w.powf(1.5));
                (r, rp, rpp)
            }
            DomainKind::Star { r0, terms } => {
                let mut r = *r0;
                let mut rp = 0.0;
                let mut rpp = 0.0;
                for t in terms {
                    let k = t.k as f64;
                    let (sk, ck) = (k * theta).sin_cos();
                    r += t.cos_amp * ck + t.sin_amp * sk;
                    rp += k * (-t.cos_amp * sk + t.sin_amp * ck);
                    rpp += k * k * (-t.cos_amp * ck - t.sin_amp * sk);
                }
                (r, rp, rpp)
            }
        }
    }
}

/// Precomputed boundary sample: used to seed Newton projections and for
/// boundary quadrature.
#[derive(Debug, Clone, Copy)]
pub struct BoundarySample {
    pub theta: f64,
    /// Cumulative arc length from theta = 0.
    pub s: f64,
    pub point: (f64, f64),
    pub tangent: (f64, f64),
    /// Inward unit normal (the direction of increasing signed distance).
    pub normal_in: (f64, f64),
    pub kappa: f64,
    /// Speed |d gamma / d theta|.
    pub speed: f64,
}

#[derive(Debug, Clone)]
pub struct Domain {
    pub kind: DomainKind,
    pub samples: Vec<BoundarySample>,
    /// Total boundary length.
    pub length: f64,
    /// Reach of the boundary: normal lines do not cross within this margin.
    pub reach: f64,
    pub kappa_max: f64,
    /// Chart half-width rho.
    pub rho: f64,
    /// Arc-length positions of the chart centers.
    pub chart_s: Vec<f64>,
}

const BOUNDARY_SAMPLES: usize = 2048;

impl Domain {
    pub fn new(kind: DomainKind, rho: f64) -> Result<Self> {
        Self::with_charts(kind, rho, None)
    }

    /// `num_charts` overrides the default chart count (boundary length / rho,
    /// which guarantees partition coverage through the bump plateau).
    pub fn with_charts(kind: DomainKind, rho: f64, num_charts: Option<usize>) -> Result<Self> {
        let m = BOUNDARY_SAMPLES;
        let mut samples = Vec::with_capacity(m);
        let mut s_acc = 0.0;
        let mut prev_speed = 0.0;
        let dtheta = 2.0 * std::f64::consts::PI / m as f64;
        for i in 0..m {
            let theta = i as f64 * dtheta;
            let (r, rp, rpp) = kind.radius(theta);
            if r <= 0.0 {
                return Err(GeometryError::BadDomain(format!(
                    "radius function nonpositive at theta = {theta:.4}"
                ))
                .into());
            }
            let (st, ct) = theta.sin_cos();
            let point = (r * ct, r * st);
            let gx = rp * ct - r * st;
            let gy = rp * st + r * ct;
            let speed = (gx * gx + gy * gy).sqrt();
            let tangent = (gx / speed, gy / speed);
            let normal_in = (-tangent.1, tangent.0);
            let kappa = (r * r + 2.0 * rp * rp - r * rpp) / speed.powi(3);
            if i > 0 {
                s_acc += 0.5 * (speed + prev_speed) * dtheta;
            }
            prev_speed = speed;
            samples.push(BoundarySample { theta, s: s_acc, point, tangent, normal_in, kappa, speed });
        }
        let last = samples.last().unwrap();
        let (r0s, _, _) = kind.radius(2.0 * std::f64::consts::PI);
        let _ = r0s;
        let length = last.s + 0.5 * (last.speed + samples[0].speed) * dtheta;

        let kappa_max = samples.iter().fold(0.0f64, |m, s| m.max(s.kappa));
        let kappa_min = samples.iter().fold(f64::INFINITY, |m, s| m.min(s.kappa));
        if kappa_min < 0.0 {
            // Nonconvex boundaries are fine for the pipeline but the reach
            // estimate below assumes normal crossings are curvature- or
            // width-limited; very wild shapes should be rejected early.
            if kappa_min < -20.0 {
                return Err(GeometryError::BadDomain(format!(
                    "boundary curvature too negative: {kappa_min:.3}"
                ))
                .into());
            }
        }

        // Reach: curvature bound combined with a facing-pair width estimate.
        let curv_reach = if kappa_max > 0.0 { 1.0 / kappa_max } else { f64::INFINITY };
        let stride = 8;
        let mut width_reach = f64::INFINITY;
        for i in (0..m).step_by(stride) {
            let pi = samples[i].point;
            let si = samples[i].s;
            for j in (0..m).step_by(stride) {
                if i == j {
                    continue;
                }
                let pj = samples[j].point;
                let chord = ((pi.0 - pj.0).powi(2) + (pi.1 - pj.1).powi(2)).sqrt();
                let arc = {
                    let d = (si - samples[j].s).abs();
                    d.min(length - d)
                };
                if arc > 1.5 * chord {
                    width_reach = width_reach.min(chord / 2.0);
                }
            }
        }
        let reach = curv_reach.min(width_reach);
        if !reach.is_finite() || reach <= 0.0 {
            return Err(GeometryError::BadDomain("could not estimate a positive reach".into()).into());
        }
        if rho <= 0.0 || 4.0 * rho >= reach {
            return Err(GeometryError::BadDomain(format!(
                "chart half-width rho = {rho} must satisfy 0 < 4 rho < reach = {reach:.4}"
            ))
            .into());
        }

        let n_charts = num_charts.unwrap_or_else(|| (length / rho).ceil() as usize);
        let chart_s = (0..n_charts)
            .map(|j| j as f64 * length / n_charts as f64)
            .collect();

        Ok(Domain { kind, samples, length, reach, kappa_max, rho, chart_s })
    }

    pub fn boundary_point(&self, theta: f64) -> (f64, f64) {
        let (r, _, _) = self.kind.radius(theta);
        (r * theta.cos(), r * theta.sin())
    }

    fn gamma_derivs(&self, theta: f64) -> ((f64, f64), (f64, f64), f64, f64) {
        let (r, rp, rpp) = self.kind.radius(theta);
        let (st, ct) = theta.sin_cos();
        let g1 = (rp * ct - r * st, rp * st + r * ct);
        let g2 = ((rpp - r) * ct - 2.0 * rp * st, (rpp - r) * st + 2.0 * rp * ct);
        let speed = (g1.0 * g1.0 + g1.1 * g1.1).sqrt();
        let kappa = (r * r + 2.0 * rp * rp - r * rpp) / speed.powi(3);
        (g1, g2, speed, kappa)
    }

    pub fn inside(&self, x: f64, y: f64) -> bool {
        let theta = y.atan2(x);
        let (r, _, _) = self.kind.radius(theta);
        x * x + y * y < r * r
    }

    /// Nearest-point projection: returns (theta*, arc length s*, signed
    /// distance d) with d > 0 inside. Seeded from the dense boundary table
    /// and polished by Newton iteration on the orthogonality condition.
    pub fn project_raw(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let m = self.samples.len();
        let mut best = 0usize;
        let mut best_d2 = f64::INFINITY;
        for (i, smp) in self.samples.iter().enumerate() {
            let dx = x - smp.point.0;
            let dy = y - smp.point.1;
            let d2 = dx * dx + dy * dy;
            if d2 < best_d2 {
                best_d2 = d2;
                best = i;
            }
        }
        let dtheta = 2.0 * std::f64::consts::PI / m as f64;
        let mut theta = self.samples[best].theta;
        for _ in 0..30 {
            let p = self.boundary_point(theta);
            let (g1, g2, _, _) = self.gamma_derivs(theta);
            let ex = x - p.0;
            let ey = y - p.1;
            let f = ex * g1.0 + ey * g1.1;
            let fp = -(g1.0 * g1.0 + g1.1 * g1.1) + ex * g2.0 + ey * g2.1;
            if fp.abs() < 1e-300 {
                break;
            }
            let mut step = -f / fp;
            // Keep Newton inside the seeded sample cell.
            step = step.clamp(-2.0 * dtheta, 2.0 * dtheta);
            theta += step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        let p = self.boundary_point(theta);
        let dist = ((x - p.0).powi(2) + (y - p.1).powi(2)).sqrt();
        let d = if self.inside(x, y) { dist } else { -dist };
        (theta, self.arclength_of_theta(theta), d)
    }

    pub fn signed_distance(&self, x: f64, y: f64) -> f64 {
        self.project_raw(x, y).2
    }

    /// Projection restricted to the collar |d| < reach, as used by the
    /// reflection and chart machinery.
    pub fn project_to_boundary(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (theta, _, d) = self.project_raw(x, y);
        if d.abs() >= self.reach {
            return Err(GeometryError::OutOfReach(x, y, self.reach).into());
        }
        Ok(self.boundary_point(theta))
    }

    /// Unit inward normal (= grad d on the collar) at arc length s.
    pub fn normal_at_s(&self, s: f64) -> (f64, f64) {
        let theta = self.theta_of_arclength(s);
        let (g1, _, speed, _) = self.gamma_derivs(theta);
        let t = (g1.0 / speed, g1.1 / speed);
        (-t.1, t.0)
    }

    pub fn tangent_at_s(&self, s: f64) -> (f64, f64) {
        let theta = self.theta_of_arclength(s);
        let (g1, _, speed, _) = self.gamma_derivs(theta);
        (g1.0 / speed, g1.1 / speed)
    }

    pub fn point_at_s(&self, s: f64) -> (f64, f64) {
        self.boundary_point(self.theta_of_arclength(s))
    }

    pub fn kappa_at_s(&self, s: f64) -> f64 {
        let theta = self.theta_of_arclength(s);
        self.gamma_derivs(theta).3
    }

    /// Laplacian of the signed distance at a collar point with projection
    /// curvature kappa: the curvature of the level set through the point.
    pub fn laplacian_d(&self, d: f64, kappa: f64) -> f64 {
        -kappa / (1.0 - d * kappa)
    }

    pub fn arclength_of_theta(&self, theta: f64) -> f64 {
        // Periodic Catmull-Rom through the cumulative table; the winding is
        // removed before interpolation so that the interpolated values stay
        // monotone across the wrap.
        let m = self.samples.len() as isize;
        let two_pi = 2.0 * std::f64::consts::PI;
        let t = theta.rem_euclid(two_pi);
        let ft = t / two_pi * m as f64;
        let i = (ft.floor() as isize).clamp(0, m - 1);
        let w = crate::grid::cubic_weights(ft - i as f64);
        let mut acc = 0.0;
        for (a, wa) in w.iter().enumerate() {
            let raw = i - 1 + a as isize;
            let wrapped = raw.rem_euclid(m) as usize;
            let winding = (raw - wrapped as isize) / m;
            acc += wa * (self.samples[wrapped].s + winding as f64 * self.length);
        }
        acc.rem_euclid(self.length)
    }

    pub fn theta_of_arclength(&self, s: f64) -> f64 {
        let m = self.samples.len();
        let s = s.rem_euclid(self.length);
        // Binary search in the monotone cumulative table.
        let mut lo = 0usize;
        let mut hi = m; // sample m is virtual (s = length)
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let smid = if mid < m { self.samples[mid].s } else { self.length };
            if smid <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s_lo = self.samples[lo].s;
        let s_hi = if lo + 1 < m { self.samples[lo + 1].s } else { self.length };
        let dtheta = 2.0 * std::f64::consts::PI / m as f64;
        let frac = if s_hi > s_lo { (s - s_lo) / (s_hi - s_lo) } else { 0.0 };
        let mut theta = self.samples[lo].theta + frac * dtheta;
        // Newton polish on the arc-length integral using the local speed.
        for _ in 0..4 {
            let cur = self.arclength_of_theta(theta);
            let mut ds = cur - s;
            if ds > self.length / 2.0 {
                ds -= self.length;
            } else if ds < -self.length / 2.0 {
                ds += self.length;
            }
            let (_, _, speed, _) = self.gamma_derivs(theta);
            theta -= ds / speed;
        }
        theta
    }

    /// Wrap an arc-length offset into (-length/2, length/2].
    pub fn wrap_arc(&self, ds: f64) -> f64 {
        let l = self.length;
        let mut d = ds.rem_euclid(l);
        if d > l / 2.0 {
            d -= l;
        }
        d
    }

    pub fn chart(&self, j: usize) -> ChartFrame {
        ChartFrame { index: j, s_center: self.chart_s[j], rho: self.rho }
    }

    pub fn num_charts(&self) -> usize {
        self.chart_s.len()
    }

    /// Signed distance sampled on a grid (rayon-parallel).
    pub fn distance_field(&self, grid: Grid) -> ScalarField {
        let n = grid.n;
        let data: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % n, k / n);
                let (x, y) = grid.point(i, j);
                self.signed_distance(x, y)
            })
            .collect();
        ScalarField { grid, data }
    }

    /// Collar geometry on a grid: signed distance and the arc length of the
    /// projection, valid where |d| < frac * reach.
    pub fn collar_field(&self, grid: Grid, frac: f64) -> CollarGeometry {
        let n = grid.n;
        let rows: Vec<(f64, f64, f64)> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % n, k / n);
                let (x, y) = grid.point(i, j);
                let (theta, s, d) = self.project_raw(x, y);
                let _ = theta;
                (d, s, self.kappa_at_s(s))
            })
            .collect();
        let mut d = Vec::with_capacity(rows.len());
        let mut s = Vec::with_capacity(rows.len());
        let mut kappa = Vec::with_capacity(rows.len());
        let mut valid = Vec::with_capacity(rows.len());
        for (dv, sv, kv) in rows {
            valid.push(dv.abs() < frac * self.reach);
            d.push(dv);
            s.push(sv);
            kappa.push(kv);
        }
        CollarGeometry { grid, d, s, kappa, valid }
    }

    /// Sharp interior indicator.
    pub fn mask_sharp(&self, grid: Grid) -> ScalarField {
        let d = self.distance_field(grid);
        d.map(|v| if v > 0.0 { 1.0 } else { 0.0 })
    }

    /// Mollified interior indicator: smooth Heaviside of d with half-width w.
    pub fn mask_smooth(&self, grid: Grid, w: f64) -> ScalarField {
        let d = self.distance_field(grid);
        d.map(|v| smoothstep(0.5 * (v / w + 1.0)))
    }
}

/// Quintic smoothstep, C^2, with s(t) + s(1-t) = 1.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// Plateau bump: 1 on [0, 1/2], quintic decay to 0 at 1.
pub fn bump(t: f64) -> f64 {
    let t = t.abs();
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        smoothstep((1.0 - t) / 0.5)
    }
}

/// Per-grid collar geometry shared by the partition, traces and extension.
#[derive(Debug, Clone)]
pub struct CollarGeometry {
    pub grid: Grid,
    pub d: Vec<f64>,
    pub s: Vec<f64>,
    pub kappa: Vec<f64>,
    pub valid: Vec<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> Domain {
        Domain::new(DomainKind::Disk { radius: 1.0 }, 0.05).unwrap()
    }

    #[test]
    fn disk_distance_and_projection() {
        let d = disk();
        assert!((d.signed_distance(0.5, 0.0) - 0.5).abs() < 1e-10);
        assert!((d.signed_distance(0.0, -1.25) + 0.25).abs() < 1e-10);
        let p = d.project_to_boundary(0.3, 0.4).unwrap();
        assert!((p.0 - 0.6).abs() < 1e-9 && (p.1 - 0.8).abs() < 1e-9);
        assert!((d.reach - 1.0).abs() < 2e-2);
        assert!((d.length - 2.0 * std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn ellipse_curvature_and_reach() {
        let e = Domain::new(DomainKind::Ellipse { a: 1.5, b: 1.0 }, 0.05).unwrap();
        // kappa_max = a / b^2 at the ends of the major axis.
        assert!((e.kappa_max - 1.5).abs() < 1e-3);
        assert!((e.reach - 1.0 / 1.5).abs() < 2e-2);
        let d = e.signed_distance(1.5 - 0.2, 0.0);
        assert!((d - 0.2).abs() < 1e-8);
    }

    #[test]
    fn eikonal_on_grid() {
        let dom = disk();
        let grid = Grid::centered(128, 1.3);
        let d = dom.distance_field(grid);
        let g = d.gradient();
        // Check |grad d| = 1 away from the center (the distance cusp) and
        // away from the box edge.
        let mut worst: f64 = 0.0;
        for j in 4..124 {
            for i in 4..124 {
                let (x, y) = grid.point(i, j);
                let r = (x * x + y * y).sqrt();
                if r < 0.2 {
                    continue;
                }
                let k = grid.idx(i, j);
                let mag = (g.x[k] * g.x[k] + g.y[k] * g.y[k]).sqrt();
                worst = worst.max((mag - 1.0).abs());
            }
        }
        assert!(worst < 5e-3, "eikonal defect {worst}");
    }

    #[test]
    fn arclength_roundtrip() {
        let e = Domain::new(DomainKind::Ellipse { a: 1.5, b: 1.0 }, 0.05).unwrap();
        for &s in &[0.0, 1.0, 2.5, e.length * 0.9] {
            let theta = e.theta_of_arclength(s);
            let back = e.arclength_of_theta(theta);
            let diff = e.wrap_arc(back - s).abs();
            assert!(diff < 1e-8, "s = {s}: diff {diff}");
        }
    }

    #[test]
    fn rejects_rho_beyond_reach() {
        assert!(Domain::new(DomainKind::Disk { radius: 1.0 }, 0.3).is_err());
    }

    #[test]
    fn star_domain_builds() {
        let star = Domain::new(
            DomainKind::Star { r0: 1.0, terms: vec![StarTerm { k: 3, cos_amp: 0.08, sin_amp: 0.0 }] },
            0.03,
        )
        .unwrap();
        assert!(star.reach > 0.12);
        // Signed distance sign convention.
        assert!(star.signed_distance(0.0, 0.0) > 0.0);
        assert!(star.signed_distance(2.0, 0.0) < 0.0);
    }
}

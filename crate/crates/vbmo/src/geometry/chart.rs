//! Boundary charts in normal coordinates.
//!
//! A chart is centered at arc length s_j. Chart coordinates are
//! eta = (s, r) with s the arc-length offset along the boundary and
//! r the signed distance (positive inside), so the map is
//!     psi(s, r) = gamma(s_j + s) + r * nu(s_j + s)
//! with nu the inward unit normal. The coordinate frame is orthogonal with
//! tangential scale factor J(s, r) = 1 - r * kappa(s_j + s); in these
//! coordinates
//!     -Lap_x = L0 + M,
//!     L0 = -Lap_eta - d_s( b d_s . ),      b = 1/J^2 - 1,
//!     M  = c_s d_s + c_r d_r,              c_s = -J_s / J^3,  c_r = kappa / J.
//! The zeroth-order coefficient b is extended evenly across r = 0 (J is
//! evaluated at |r|), which preserves the parity structure the frozen
//! solver depends on; b vanishes on the boundary itself.

use crate::error::{GeometryError, Result};

use super::Domain;

#[derive(Debug, Clone, Copy)]
pub struct ChartFrame {
    pub index: usize,
    pub s_center: f64,
    pub rho: f64,
}

pub struct NormalCoordMap<'a> {
    pub domain: &'a Domain,
    pub frame: ChartFrame,
    /// Half-width of the admissible cylinder (4 rho by construction).
    pub half_width: f64,
}

impl Domain {
    pub fn normal_coordinates(&self, chart: ChartFrame) -> NormalCoordMap<'_> {
        NormalCoordMap { domain: self, frame: chart, half_width: 4.0 * chart.rho }
    }
}

impl<'a> NormalCoordMap<'a> {
    /// psi: chart cylinder -> physical plane.
    pub fn forward(&self, s: f64, r: f64) -> Result<(f64, f64)> {
        if s.abs() >= self.half_width || r.abs() >= self.half_width {
            return Err(GeometryError::OutOfChart(s, r, self.half_width).into());
        }
        Ok(self.forward_unchecked(s, r))
    }

    pub fn forward_unchecked(&self, s: f64, r: f64) -> (f64, f64) {
        let sa = self.frame.s_center + s;
        let p = self.domain.point_at_s(sa);
        let nu = self.domain.normal_at_s(sa);
        (p.0 + r * nu.0, p.1 + r * nu.1)
    }

    /// psi^{-1}: physical collar point -> chart coordinates.
    pub fn inverse(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (_, s_abs, d) = self.domain.project_raw(x, y);
        if d.abs() >= self.domain.reach {
            return Err(GeometryError::OutOfReach(x, y, self.domain.reach).into());
        }
        let s = self.domain.wrap_arc(s_abs - self.frame.s_center);
        if s.abs() >= self.half_width || d.abs() >= self.half_width {
            return Err(GeometryError::OutOfChart(s, d, self.half_width).into());
        }
        Ok((s, d))
    }

    /// Jacobian determinant of psi (the tangential scale factor J).
    pub fn jacobian_det(&self, s: f64, r: f64) -> f64 {
        let kappa = self.domain.kappa_at_s(self.frame.s_center + s);
        1.0 - r * kappa
    }

    /// Curvature along the chart, kappa(s_center + s).
    pub fn kappa(&self, s: f64) -> f64 {
        self.domain.kappa_at_s(self.frame.s_center + s)
    }

    /// Bound on |grad psi| and |grad psi^{-1}| over the cylinder.
    pub fn lipschitz_bound(&self) -> f64 {
        let mut jmin = f64::INFINITY;
        let mut jmax: f64 = 0.0;
        let w = self.half_width;
        let m = 64;
        for i in 0..=m {
            let s = -w + 2.0 * w * i as f64 / m as f64;
            let kappa = self.kappa(s);
            for &r in &[-w, 0.0, w] {
                let j = 1.0 - r * kappa;
                jmin = jmin.min(j);
                jmax = jmax.max(j);
            }
        }
        jmax.max(1.0 / jmin.max(1e-12)).max(1.0)
    }
}

/// Coefficients of the transformed Laplacian on a chart, evaluated
/// pointwise. `b` uses the even reflection J(s, |r|); the first-order
/// coefficients are exact for r > 0 (inside) and evenly reflected outside,
/// which is the only region where they are consumed.
pub struct MetricCoefficients<'a> {
    map: &'a NormalCoordMap<'a>,
}

impl<'a> MetricCoefficients<'a> {
    pub fn new(map: &'a NormalCoordMap<'a>) -> Result<Self> {
        // Reject charts whose cylinder leaves the diffeomorphic range.
        let w = map.half_width;
        let mut jmin = f64::INFINITY;
        for i in 0..=64 {
            let s = -w + 2.0 * w * i as f64 / 64.0;
            jmin = jmin.min(1.0 - w * map.kappa(s).abs());
        }
        if jmin < 1e-8 {
            return Err(GeometryError::SingularJacobian(jmin).into());
        }
        Ok(MetricCoefficients { map })
    }

    #[inline]
    pub fn j_even(&self, s: f64, r: f64) -> f64 {
        1.0 - r.abs() * self.map.kappa(s)
    }

    /// gamma_11 = 1/J^2 (the only nontrivial inverse-metric entry in 2-D).
    pub fn gamma11(&self, s: f64, r: f64) -> f64 {
        let j = self.j_even(s, r);
        1.0 / (j * j)
    }

    /// b = gamma_11 - 1, even in r, vanishing on the boundary.
    pub fn b(&self, s: f64, r: f64) -> f64 {
        self.gamma11(s, r) - 1.0
    }

    /// c_s = -J_s / J^3 (tangential first-order coefficient).
    pub fn c_s(&self, s: f64, r: f64) -> f64 {
        let ds = 1e-5;
        let jp = self.j_even(s + ds, r);
        let jm = self.j_even(s - ds, r);
        let j = self.j_even(s, r);
        -((jp - jm) / (2.0 * ds)) / (j * j * j)
    }

    /// c_r = kappa / J (normal first-order coefficient).
    pub fn c_r(&self, s: f64, r: f64) -> f64 {
        self.map.kappa(s) / self.j_even(s, r)
    }
}

impl<'a> NormalCoordMap<'a> {
    pub fn metric_coefficients(&'a self) -> Result<MetricCoefficients<'a>> {
        MetricCoefficients::new(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainKind;

    fn disk_map(rho: f64) -> (Domain, usize) {
        let d = Domain::new(DomainKind::Disk { radius: 1.0 }, rho).unwrap();
        (d, 0)
    }

    #[test]
    fn forward_follows_the_normal_line() {
        let (d, j) = disk_map(0.05);
        let map = d.normal_coordinates(d.chart(j));
        // Chart 0 of the disk is centered at (1, 0); eta = (0, t) must land
        // at (1 - t, 0).
        let (x, y) = map.forward(0.0, 0.1).unwrap();
        assert!((x - 0.9).abs() < 1e-9 && y.abs() < 1e-9);
        // d(psi(eta)) = eta_r on the inside half.
        let dd = d.signed_distance(x, y);
        assert!((dd - 0.1).abs() < 1e-9);
    }

    #[test]
    fn inverse_of_forward_is_identity() {
        let dom = Domain::new(DomainKind::Ellipse { a: 1.5, b: 1.0 }, 0.04).unwrap();
        let map = dom.normal_coordinates(dom.chart(3));
        for &(s, r) in &[(0.02, 0.03), (-0.1, -0.05), (0.12, 0.08)] {
            let (x, y) = map.forward(s, r).unwrap();
            let (s2, r2) = map.inverse(x, y).unwrap();
            assert!((s - s2).abs() < 1e-7 && (r - r2).abs() < 1e-9, "({s},{r}) -> ({s2},{r2})");
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let dom = Domain::new(DomainKind::Ellipse { a: 1.5, b: 1.0 }, 0.04).unwrap();
        let map = dom.normal_coordinates(dom.chart(5));
        let eps = 1e-6;
        for &(s, r) in &[(0.0, 0.0), (0.08, 0.05), (-0.06, -0.09)] {
            let p0 = map.forward_unchecked(s - eps, r);
            let p1 = map.forward_unchecked(s + eps, r);
            let q0 = map.forward_unchecked(s, r - eps);
            let q1 = map.forward_unchecked(s, r + eps);
            let a = ((p1.0 - p0.0) / (2.0 * eps), (p1.1 - p0.1) / (2.0 * eps));
            let b = ((q1.0 - q0.0) / (2.0 * eps), (q1.1 - q0.1) / (2.0 * eps));
            let det_fd = a.0 * b.1 - a.1 * b.0;
            let det = map.jacobian_det(s, r);
            assert!((det - det_fd).abs() < 1e-5, "det {det} vs fd {det_fd}");
        }
    }

    #[test]
    fn metric_on_disk_chart() {
        let (d, j) = disk_map(0.05);
        let map = d.normal_coordinates(d.chart(j));
        let met = map.metric_coefficients().unwrap();
        // Unit disk, inward offset r: the tangential scale factor is
        // J = 1 - r, so b = 1/(1-r)^2 - 1 and the even reflection makes
        // b(s, -r) = b(s, r).
        let b = met.b(0.0, 0.1);
        assert!((b - (1.0 / 0.81 - 1.0)).abs() < 1e-9, "b = {b}");
        assert!((met.b(0.0, -0.1) - b).abs() < 1e-12);
        assert!(met.b(0.03, 0.0).abs() < 1e-12);
        assert!((met.gamma11(0.0, 0.0) - 1.0).abs() < 1e-12);
        // c_r = kappa / J.
        assert!((met.c_r(0.0, 0.1) - 1.0 / 0.9).abs() < 1e-6);
        // Disk: kappa constant, so c_s = 0.
        assert!(met.c_s(0.05, 0.1).abs() < 1e-6);
    }

    #[test]
    fn nearly_flat_boundary_has_small_b() {
        let d = Domain::new(DomainKind::Disk { radius: 100.0 }, 0.02).unwrap();
        let map = d.normal_coordinates(d.chart(0));
        let met = map.metric_coefficients().unwrap();
        for i in 0..20 {
            let r = 0.1 * i as f64 / 19.0;
            assert!(met.b(0.0, r).abs() <= 2.1e-3);
        }
    }
}

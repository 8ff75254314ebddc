//! Frozen-coefficient boundary solver on a chart cylinder.
//!
//! On the periodic cylinder torus [-4 rho, 4 rho)^2 the leading part of the
//! transformed Laplacian splits as L0 = A - B, with A = -Lap and
//! B u = d_s (b^rho d_s u), where b^rho is the metric perturbation cut off
//! outside V_{4 rho}. Equations L0 q = d_eta f are solved by the Neumann
//! series q = sum_k A^{-1} (B A^{-1})^k d_eta f, which contracts because
//! b^rho is small (it vanishes on the boundary line and is Lipschitz in
//! the normal coordinate). The grid is cell-centered and symmetric about
//! r = 0, so the even/odd structure in the normal coordinate is preserved
//! exactly: A^{-1} is a radial Fourier multiplier and B only differentiates
//! tangentially.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{FreezingError, Result};
use crate::geometry::MetricCoefficients;

pub const SERIES_EPS: f64 = 1e-13;
pub const RESIDUAL_EPS: f64 = 1e-7;
pub const SERIES_MAX_TERMS: usize = 64;

/// Periodic cylinder grid: cell-centered, side 2w, m cells per axis.
/// Axis 0 is the tangential offset s, axis 1 the signed distance r.
#[derive(Debug, Clone, Copy)]
pub struct CylinderGrid {
    pub m: usize,
    /// Half-width (= 4 rho).
    pub w: f64,
}

impl CylinderGrid {
    pub fn new(m: usize, w: f64) -> Self {
        assert!(m % 2 == 0 && m >= 16);
        CylinderGrid { m, w }
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        2.0 * self.w / self.m as f64
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.w + (i as f64 + 0.5) * self.delta()
    }

    #[inline]
    pub fn idx(&self, i_s: usize, i_r: usize) -> usize {
        i_r * self.m + i_s
    }

    pub fn len(&self) -> usize {
        self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the mirror cell across r = 0.
    #[inline]
    pub fn mirror_r(&self, i_r: usize) -> usize {
        self.m - 1 - i_r
    }

    /// First r-derivative where each half-column only reads its own side
    /// of r = 0. Parity extensions are smooth per side but kinked or
    /// discontinuous across the line, so two-sided stencils would ring.
    pub fn deriv_r_onesided(&self, f: &[f64]) -> Vec<f64> {
        let m = self.m;
        let h = m / 2;
        let mut out = vec![0.0; f.len()];
        let mut col = vec![0.0; h];
        let mut der = vec![0.0; h];
        for i_s in 0..m {
            for (lo, _) in [(0usize, h), (h, m)] {
                for t in 0..h {
                    col[t] = f[self.idx(i_s, lo + t)];
                }
                d1_line(&col, self.delta(), &mut der);
                for t in 0..h {
                    out[self.idx(i_s, lo + t)] = der[t];
                }
            }
        }
        out
    }

    /// Second r-derivative, one-sided per half-column (see
    /// `deriv_r_onesided`).
    pub fn deriv_rr_onesided(&self, f: &[f64]) -> Vec<f64> {
        let m = self.m;
        let h = m / 2;
        let mut out = vec![0.0; f.len()];
        let mut col = vec![0.0; h];
        let mut der = vec![0.0; h];
        for i_s in 0..m {
            for (lo, _) in [(0usize, h), (h, m)] {
                for t in 0..h {
                    col[t] = f[self.idx(i_s, lo + t)];
                }
                d2_line(&col, self.delta(), &mut der);
                for t in 0..h {
                    out[self.idx(i_s, lo + t)] = der[t];
                }
            }
        }
        out
    }

    /// Interpolation that never reads across r = 0: periodic Catmull-Rom
    /// in s, 4-point Lagrange in r restricted to the half containing r.
    pub fn sample_onesided(&self, data: &[f64], s: f64, r: f64) -> f64 {
        let m = self.m as isize;
        let fs = (s + self.w) / self.delta() - 0.5;
        let i = fs.floor() as isize;
        let ws = crate::grid::cubic_weights(fs - i as f64);
        let (lo, hi) = if r >= 0.0 { (self.m / 2, self.m) } else { (0, self.m / 2) };
        let u = (r + self.w) / self.delta() - 0.5;
        let base = ((u.floor() as isize) - 1).clamp(lo as isize, hi as isize - 4) as usize;
        let mut acc = 0.0;
        for b in 0..4 {
            let row = base + b;
            // Lagrange weight of this row's node at the target r.
            let mut wgt = 1.0;
            let pb = self.coord(row);
            for c in 0..4 {
                if c != b {
                    let pc = self.coord(base + c);
                    wgt *= (r - pc) / (pb - pc);
                }
            }
            let mut line = 0.0;
            for (a, wsa) in ws.iter().enumerate() {
                let ii = (i - 1 + a as isize).rem_euclid(m) as usize;
                line += wsa * data[row * self.m + ii];
            }
            acc += wgt * line;
        }
        acc
    }

    /// Periodic Catmull-Rom interpolation.
    pub fn sample_cubic(&self, data: &[f64], s: f64, r: f64) -> f64 {
        let m = self.m as isize;
        let fs = (s + self.w) / self.delta() - 0.5;
        let fr = (r + self.w) / self.delta() - 0.5;
        let i = fs.floor() as isize;
        let j = fr.floor() as isize;
        let ws = crate::grid::cubic_weights(fs - i as f64);
        let wr = crate::grid::cubic_weights(fr - j as f64);
        let mut acc = 0.0;
        for (b, wrb) in wr.iter().enumerate() {
            let jj = (j - 1 + b as isize).rem_euclid(m) as usize;
            let mut row = 0.0;
            for (a, wsa) in ws.iter().enumerate() {
                let ii = (i - 1 + a as isize).rem_euclid(m) as usize;
                row += wsa * data[jj * self.m + ii];
            }
            acc += wrb * row;
        }
        acc
    }
}

/// Fourth-order first derivative on a uniform line, one-sided at the
/// ends.
fn d1_line(v: &[f64], delta: f64, out: &mut [f64]) {
    let n = v.len();
    debug_assert!(n >= 5);
    let c = 1.0 / (12.0 * delta);
    out[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) * c;
    out[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) * c;
    for i in 2..n - 2 {
        out[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) * c;
    }
    out[n - 2] =
        (3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5]) * c;
    out[n - 1] =
        (25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4] + 3.0 * v[n - 5])
            * c;
}

/// Second derivative on a uniform line: fourth-order centered, third-order
/// one-sided at the ends.
fn d2_line(v: &[f64], delta: f64, out: &mut [f64]) {
    let n = v.len();
    debug_assert!(n >= 5);
    let c = 1.0 / (12.0 * delta * delta);
    out[0] = (35.0 * v[0] - 104.0 * v[1] + 114.0 * v[2] - 56.0 * v[3] + 11.0 * v[4]) * c;
    out[1] = (11.0 * v[0] - 20.0 * v[1] + 6.0 * v[2] + 4.0 * v[3] - v[4]) * c;
    for i in 2..n - 2 {
        out[i] = (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) * c;
    }
    out[n - 2] =
        (11.0 * v[n - 1] - 20.0 * v[n - 2] + 6.0 * v[n - 3] + 4.0 * v[n - 4] - v[n - 5]) * c;
    out[n - 1] =
        (35.0 * v[n - 1] - 104.0 * v[n - 2] + 114.0 * v[n - 3] - 56.0 * v[n - 4] + 11.0 * v[n - 5])
            * c;
}

/// Input field with a declared parity in the normal coordinate; the
/// constructor verifies both the parity and the support constraint
/// (nonzero values only inside V_rho).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

pub struct ParityInput {
    pub data: Vec<f64>,
    pub parity: Parity,
}

impl ParityInput {
    pub fn new(cyl: &CylinderGrid, data: Vec<f64>, parity: Parity) -> Result<Self> {
        assert_eq!(data.len(), cyl.len());
        let scale = data.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
        let mut defect: f64 = 0.0;
        for i_r in 0..cyl.m / 2 {
            let j_r = cyl.mirror_r(i_r);
            for i_s in 0..cyl.m {
                let a = data[cyl.idx(i_s, i_r)];
                let b = data[cyl.idx(i_s, j_r)];
                let d = match parity {
                    Parity::Odd => (a + b).abs(),
                    Parity::Even => (a - b).abs(),
                };
                defect = defect.max(d);
            }
        }
        if defect > 1e-10 * scale {
            return Err(FreezingError::ConvergenceFailure(defect / scale, 0).into());
        }
        Ok(ParityInput { data, parity })
    }

    /// Symmetrize and wrap, for data assembled from interpolation where the
    /// parity holds only up to interpolation error.
    pub fn symmetrized(cyl: &CylinderGrid, data: &[f64], parity: Parity) -> Self {
        let mut out = vec![0.0; cyl.len()];
        for i_r in 0..cyl.m {
            let j_r = cyl.mirror_r(i_r);
            for i_s in 0..cyl.m {
                let a = data[cyl.idx(i_s, i_r)];
                let b = data[cyl.idx(i_s, j_r)];
                out[cyl.idx(i_s, i_r)] = match parity {
                    Parity::Odd => 0.5 * (a - b),
                    Parity::Even => 0.5 * (a + b),
                };
            }
        }
        ParityInput { data: out, parity }
    }
}

#[derive(Debug, Clone)]
pub struct SeriesDiagnostics {
    pub term_norms: Vec<f64>,
    /// Per-term contraction ratios |u_{k+1}| / |u_k|.
    pub ratios: Vec<f64>,
    /// Relative residual of (A - B) q = forcing on the inner cylinder V_{2 rho}.
    pub residual_rel: f64,
    pub converged: bool,
}

impl SeriesDiagnostics {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().cloned().fold(0.0, f64::max)
    }
}

pub struct SeriesSolution {
    pub q: Vec<f64>,
    pub diagnostics: SeriesDiagnostics,
}

pub struct FrozenOperator {
    pub cyl: CylinderGrid,
    pub rho: f64,
    /// Cut-off metric perturbation b^rho on the cylinder.
    pub b: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    freqs: Vec<f64>,
}

impl FrozenOperator {
    /// Sample b^rho = b * theta_rho from the chart metric. theta_rho is 1 on
    /// V_{2 rho} and vanishes outside V_{4 rho}.
    pub fn new(cyl: CylinderGrid, rho: f64, met: &MetricCoefficients<'_>) -> Result<Self> {
        assert!((cyl.w - 4.0 * rho).abs() < 1e-12, "cylinder must span V_{{4 rho}}");
        let mut b = vec![0.0; cyl.len()];
        let mut jmin = f64::INFINITY;
        for i_r in 0..cyl.m {
            let r = cyl.coord(i_r);
            for i_s in 0..cyl.m {
                let s = cyl.coord(i_s);
                let t = (s * s + r * r).sqrt() / rho;
                let theta = cutoff_2_4(t);
                if theta > 0.0 {
                    jmin = jmin.min(met.j_even(s, r));
                    b[cyl.idx(i_s, i_r)] = met.b(s, r) * theta;
                }
            }
        }
        if jmin < 0.05 {
            return Err(FreezingError::DegenerateCoefficients(jmin).into());
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(cyl.m);
        let inv = planner.plan_fft_inverse(cyl.m);
        let freqs = (0..cyl.m)
            .map(|k| {
                let kk = if k <= cyl.m / 2 { k as f64 } else { k as f64 - cyl.m as f64 };
                std::f64::consts::PI * kk / cyl.w
            })
            .collect();
        Ok(FrozenOperator { cyl, rho, b, fwd, inv, freqs })
    }

    /// Construct directly from a sampled perturbation (used by tests).
    pub fn from_raw(cyl: CylinderGrid, rho: f64, b: Vec<f64>) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(cyl.m);
        let inv = planner.plan_fft_inverse(cyl.m);
        let freqs = (0..cyl.m)
            .map(|k| {
                let kk = if k <= cyl.m / 2 { k as f64 } else { k as f64 - cyl.m as f64 };
                std::f64::consts::PI * kk / cyl.w
            })
            .collect();
        FrozenOperator { cyl, rho, b, fwd, inv, freqs }
    }

    fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let m = self.cyl.m;
        let plan = if inverse { &self.inv } else { &self.fwd };
        for row in data.chunks_exact_mut(m) {
            plan.process(row);
        }
        transpose(data, m);
        for row in data.chunks_exact_mut(m) {
            plan.process(row);
        }
        transpose(data, m);
        if inverse {
            let scale = 1.0 / (m * m) as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    fn apply_multiplier(&self, f: &[f64], mult: impl Fn(f64, f64) -> Complex64) -> Vec<f64> {
        let m = self.cyl.m;
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut buf, false);
        for j in 0..m {
            for i in 0..m {
                buf[j * m + i] *= mult(self.freqs[i], self.freqs[j]);
            }
        }
        self.fft2(&mut buf, true);
        buf.iter().map(|c| c.re).collect()
    }

    /// A^{-1}: inverse Laplacian on the torus, mean gauged to zero.
    pub fn inv_lap(&self, f: &[f64]) -> Vec<f64> {
        self.apply_multiplier(f, |ks, kr| {
            let k2 = ks * ks + kr * kr;
            Complex64::new(if k2 == 0.0 { 0.0 } else { 1.0 / k2 }, 0.0)
        })
    }

    /// A = -Lap, spectral.
    pub fn neg_lap(&self, f: &[f64]) -> Vec<f64> {
        self.apply_multiplier(f, |ks, kr| Complex64::new(ks * ks + kr * kr, 0.0))
    }

    /// Gaussian mollification at scale sigma (spectral, periodic).
    pub fn mollify(&self, f: &[f64], sigma: f64) -> Vec<f64> {
        let s2 = 0.5 * sigma * sigma;
        self.apply_multiplier(f, |ks, kr| {
            Complex64::new((-s2 * (ks * ks + kr * kr)).exp(), 0.0)
        })
    }

    pub fn deriv_s(&self, f: &[f64]) -> Vec<f64> {
        self.apply_multiplier(f, |ks, _| Complex64::new(0.0, ks))
    }

    pub fn deriv_r(&self, f: &[f64]) -> Vec<f64> {
        self.apply_multiplier(f, |_, kr| Complex64::new(0.0, kr))
    }

    /// Flux-form perturbation B u = D^-_s (b^rho D^+_s u).
    pub fn apply_b(&self, u: &[f64]) -> Vec<f64> {
        let m = self.cyl.m;
        let d = self.cyl.delta();
        let mut flux = vec![0.0; self.cyl.len()];
        for j in 0..m {
            for i in 0..m {
                let ip = (i + 1) % m;
                // b on the staggered face (average of cell values).
                let bf = 0.5 * (self.b[j * m + i] + self.b[j * m + ip]);
                flux[j * m + i] = bf * (u[j * m + ip] - u[j * m + i]) / d;
            }
        }
        let mut out = vec![0.0; self.cyl.len()];
        for j in 0..m {
            for i in 0..m {
                let im = (i + m - 1) % m;
                out[j * m + i] = (flux[j * m + i] - flux[j * m + im]) / d;
            }
        }
        out
    }

    fn l2(&self, f: &[f64]) -> f64 {
        let d = self.cyl.delta();
        (f.iter().map(|v| v * v).sum::<f64>() * d * d).sqrt()
    }

    fn l2_core(&self, f: &[f64]) -> f64 {
        let d = self.cyl.delta();
        let r2 = (2.0 * self.rho).powi(2);
        let mut acc = 0.0;
        for j in 0..self.cyl.m {
            let r = self.cyl.coord(j);
            for i in 0..self.cyl.m {
                let s = self.cyl.coord(i);
                if s * s + r * r < r2 {
                    let v = f[j * self.cyl.m + i];
                    acc += v * v;
                }
            }
        }
        (acc * d * d).sqrt()
    }

    /// Neumann series for L0 q = d_eta f, with the forcing direction chosen
    /// by the parity class: odd data is differentiated in r, even data
    /// in s. Both produce q even in r.
    pub fn solve(&self, input: &ParityInput) -> Result<SeriesSolution> {
        let forcing = match input.parity {
            Parity::Odd => self.deriv_r(&input.data),
            Parity::Even => self.deriv_s(&input.data),
        };
        self.solve_forcing(&forcing)
    }

    /// Series driven by an explicit forcing (must have zero mean).
    pub fn solve_forcing(&self, forcing: &[f64]) -> Result<SeriesSolution> {
        // The torus solve only sees the mean-free part; remove the small
        // discretization mean up front so the residual is measured against
        // the problem actually solved.
        let mean = forcing.iter().sum::<f64>() / forcing.len() as f64;
        let forcing: Vec<f64> = forcing.iter().map(|v| v - mean).collect();
        let forcing = &forcing[..];
        let mut q = vec![0.0; self.cyl.len()];
        let mut u = self.inv_lap(forcing);
        let first = self.l2(&u).max(1e-300);
        let fnorm = self.l2_core(forcing).max(1e-300);
        let mut term_norms = vec![first];
        let mut ratios = Vec::new();
        let mut converged = false;
        let mut growth_streak = 0usize;
        for _k in 0..SERIES_MAX_TERMS {
            for (a, b) in q.iter_mut().zip(&u) {
                *a += *b;
            }
            let w = self.apply_b(&u);
            // The truncation residual of the summed series is exactly the
            // forcing carried by the dropped tail, so stop on its core norm
            // rather than on the (unamplified) term norms.
            if self.l2_core(&w) <= RESIDUAL_EPS * fnorm {
                converged = true;
                break;
            }
            u = self.inv_lap(&w);
            let norm = self.l2(&u);
            let ratio = norm / term_norms.last().unwrap();
            ratios.push(ratio);
            term_norms.push(norm);
            if ratio >= 1.0 {
                growth_streak += 1;
                if growth_streak >= 3 {
                    return Err(
                        FreezingError::ConvergenceFailure(ratio, term_norms.len()).into()
                    );
                }
            } else {
                growth_streak = 0;
            }
            // Safety net only: the residual check above is the real stop.
            if norm <= SERIES_EPS * first {
                converged = true;
                break;
            }
        }
        if !converged {
            let last = *ratios.last().unwrap_or(&f64::NAN);
            if !(last < 1.0) {
                return Err(FreezingError::ConvergenceFailure(last, term_norms.len()).into());
            }
        }

        // Residual of (A - B) q = forcing, restricted to V_{2 rho}.
        let aq = self.apply_multiplier(&q, |ks, kr| Complex64::new(ks * ks + kr * kr, 0.0));
        let bq = self.apply_b(&q);
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..self.cyl.m {
            let r = self.cyl.coord(j);
            for i in 0..self.cyl.m {
                let s = self.cyl.coord(i);
                if s * s + r * r < (2.0 * self.rho).powi(2) {
                    let k = j * self.cyl.m + i;
                    num += (aq[k] - bq[k] - forcing[k]).powi(2);
                    den += forcing[k].powi(2);
                }
            }
        }
        let residual_rel = (num / den.max(1e-300)).sqrt();
        Ok(SeriesSolution {
            q,
            diagnostics: SeriesDiagnostics { term_norms, ratios, residual_rel, converged },
        })
    }
}

/// Radial cutoff: 1 for t <= 2, 0 for t >= 4, quintic in between.
pub fn cutoff_2_4(t: f64) -> f64 {
    crate::geometry::smoothstep((4.0 - t) / 2.0)
}

fn transpose(data: &mut [Complex64], n: usize) {
    for j in 0..n {
        for i in 0..j {
            data.swap(j * n + i, i * n + j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, DomainKind};

    fn odd_test_input(cyl: &CylinderGrid, rho: f64) -> ParityInput {
        // Smooth odd source supported in V_rho.
        let mut data = vec![0.0; cyl.len()];
        for j in 0..cyl.m {
            let r = cyl.coord(j);
            for i in 0..cyl.m {
                let s = cyl.coord(i);
                let t2 = (s * s + r * r) / (0.8 * rho * rho);
                if t2 < 1.0 {
                    data[cyl.idx(i, j)] =
                        r * (1.0 - 1.0 / (1.0 - t2)).exp() * (3.0 * s / rho).cos();
                }
            }
        }
        ParityInput::new(cyl, data, Parity::Odd).unwrap()
    }

    fn disk_operator(rho: f64, m: usize) -> (Domain, CylinderGrid) {
        let dom = Domain::new(DomainKind::Disk { radius: 1.0 }, rho).unwrap();
        let cyl = CylinderGrid::new(m, 4.0 * rho);
        (dom, cyl)
    }

    #[test]
    fn series_contracts_and_solves_on_disk_chart() {
        let rho = 0.05;
        let (dom, cyl) = disk_operator(rho, 96);
        let map = dom.normal_coordinates(dom.chart(0));
        let met = map.metric_coefficients().unwrap();
        let op = FrozenOperator::new(cyl, rho, &met).unwrap();
        let input = odd_test_input(&cyl, rho);
        let sol = op.solve(&input).unwrap();
        let d = &sol.diagnostics;
        assert!(d.converged);
        assert!(d.max_ratio() < 0.5, "max ratio {}", d.max_ratio());
        assert!(d.residual_rel < 1e-6, "residual {}", d.residual_rel);
        // q is even in r, exactly at the grid level.
        let scale = sol.q.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for j in 0..cyl.m / 2 {
            for i in 0..cyl.m {
                let a = sol.q[cyl.idx(i, j)];
                let b = sol.q[cyl.idx(i, cyl.mirror_r(j))];
                assert!((a - b).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn flat_boundary_gives_single_term() {
        // b = 0: the series must terminate after the free solve.
        let rho = 0.05;
        let cyl = CylinderGrid::new(64, 4.0 * rho);
        let op = FrozenOperator::from_raw(cyl, rho, vec![0.0; cyl.len()]);
        let input = odd_test_input(&cyl, rho);
        let sol = op.solve(&input).unwrap();
        assert_eq!(sol.diagnostics.term_norms.len(), 1);
        assert!(sol.diagnostics.residual_rel < 1e-10);
    }

    #[test]
    fn halving_rho_roughly_halves_the_ratio() {
        let ratios: Vec<f64> = [0.05, 0.025]
            .iter()
            .map(|&rho| {
                let (dom, cyl) = disk_operator(rho, 96);
                let map = dom.normal_coordinates(dom.chart(0));
                let met = map.metric_coefficients().unwrap();
                let op = FrozenOperator::new(cyl, rho, &met).unwrap();
                let input = odd_test_input(&cyl, rho);
                let sol = op.solve(&input).unwrap();
                // First-term ratio is the cleanest contraction probe.
                sol.diagnostics.ratios[0]
            })
            .collect();
        let shrink = ratios[1] / ratios[0];
        assert!(
            (0.35..=0.65).contains(&shrink),
            "ratios {ratios:?}, shrink factor {shrink}"
        );
    }

    #[test]
    fn divergent_coefficients_are_reported() {
        let rho = 0.05;
        let cyl = CylinderGrid::new(64, 4.0 * rho);
        // Absurdly large perturbation: |b| = 5 everywhere.
        let op = FrozenOperator::from_raw(cyl, rho, vec![5.0; cyl.len()]);
        let input = odd_test_input(&cyl, rho);
        assert!(matches!(
            op.solve(&input),
            Err(crate::error::Error::Freezing(FreezingError::ConvergenceFailure(_, _)))
        ));
    }

    #[test]
    fn parity_constructor_rejects_mixed_input() {
        let cyl = CylinderGrid::new(32, 0.2);
        let mut data = vec![0.0; cyl.len()];
        data[cyl.idx(5, 7)] = 1.0; // no mirror partner
        assert!(ParityInput::new(&cyl, data, Parity::Odd).is_err());
    }
}

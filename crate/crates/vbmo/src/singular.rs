//! Free-space convolution with the fundamental solution of -Lap on a
//! padded FFT box, and the second-derivative (Riesz-type) multipliers.
//!
//! The Newtonian solve uses a truncated kernel: E is cut off at a radius T
//! exceeding every source-to-target distance, so circular convolution on
//! the enlarged box reproduces the free-space operator exactly on the data
//! box, while the Fourier transform of the truncated kernel is known in
//! closed form (Bessel J0/J1), keeping the quadrature spectrally accurate.
//! The padded box side is 2.5x the data box: large enough that neither the
//! kernel support nor the truncation ring wraps back onto the data region.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Result, SingularError};
use crate::fields::{ScalarField, VectorField};
use crate::grid::Grid;

/// Fundamental solution of -Lap in n dimensions (n = 2 or 3).
pub fn fundamental_solution(n: usize, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(SingularError::SingularPoint.into());
    }
    match n {
        2 => Ok(-r.ln() / (2.0 * std::f64::consts::PI)),
        3 => Ok(1.0 / (4.0 * std::f64::consts::PI * r)),
        _ => panic!("fundamental_solution: unsupported dimension {n}"),
    }
}

const PAD_NUM: usize = 5;
const PAD_DEN: usize = 2;

pub struct SpectralBox {
    pub grid: Grid,
    pub n_pad: usize,
    /// Padded box side length.
    pub side_pad: f64,
    /// Kernel truncation radius.
    pub t_cut: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Closed-form Fourier transform of the truncated log kernel.
    khat: Vec<f64>,
    /// Angular wavenumbers per padded-axis index.
    freqs: Vec<f64>,
}

impl SpectralBox {
    pub fn new(grid: Grid) -> Self {
        assert!(grid.n % PAD_DEN == 0, "grid size must be even");
        let n_pad = grid.n * PAD_NUM / PAD_DEN;
        let side_pad = grid.side * PAD_NUM as f64 / PAD_DEN as f64;
        // Any two points of the data box are closer than the diagonal;
        // T = 1.45 * side leaves margin on both sides:
        //   sqrt(2) * side < T  and  side + T < side_pad.
        let t_cut = 1.45 * grid.side;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n_pad);
        let inv = planner.plan_fft_inverse(n_pad);
        let freqs: Vec<f64> = (0..n_pad)
            .map(|k| {
                let kk = if k <= n_pad / 2 { k as f64 } else { k as f64 - n_pad as f64 };
                2.0 * std::f64::consts::PI * kk / side_pad
            })
            .collect();
        let mut khat = vec![0.0; n_pad * n_pad];
        for (j, &ky) in freqs.iter().enumerate() {
            for (i, &kx) in freqs.iter().enumerate() {
                let s = (kx * kx + ky * ky).sqrt();
                khat[j * n_pad + i] = truncated_log_kernel_hat(s, t_cut);
            }
        }
        SpectralBox { grid, n_pad, side_pad, t_cut, fwd, inv, khat, freqs }
    }

    fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n_pad;
        let plan = if inverse { &self.inv } else { &self.fwd };
        for row in data.chunks_exact_mut(n) {
            plan.process(row);
        }
        // Transpose, transform rows, transpose back.
        transpose(data, n);
        for row in data.chunks_exact_mut(n) {
            plan.process(row);
        }
        transpose(data, n);
        if inverse {
            let scale = 1.0 / (n * n) as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    /// Reject sources whose support leaks into the outermost cells of the
    /// data box (their potential would be misrepresented by the padding).
    pub fn check_support(&self, f: &ScalarField) -> Result<()> {
        let n = self.grid.n;
        let mut leak: f64 = 0.0;
        let scale = f.linf();
        for j in 0..n {
            for i in 0..n {
                if i < 2 || j < 2 || i >= n - 2 || j >= n - 2 {
                    leak = leak.max(f.data[self.grid.idx(i, j)].abs());
                }
            }
        }
        if leak > 1e-9 * scale.max(1e-300) {
            return Err(SingularError::SupportLeak(leak).into());
        }
        Ok(())
    }

    fn embed(&self, f: &ScalarField) -> Vec<Complex64> {
        let n = self.grid.n;
        let np = self.n_pad;
        let mut buf = vec![Complex64::new(0.0, 0.0); np * np];
        for j in 0..n {
            for i in 0..n {
                buf[j * np + i] = Complex64::new(f.data[self.grid.idx(i, j)], 0.0);
            }
        }
        buf
    }

    fn extract(&self, buf: &[Complex64]) -> ScalarField {
        let n = self.grid.n;
        let np = self.n_pad;
        let mut out = ScalarField::zeros(self.grid);
        for j in 0..n {
            for i in 0..n {
                out.data[self.grid.idx(i, j)] = buf[j * np + i].re;
            }
        }
        out
    }

    fn convolve_with_multiplier(
        &self,
        f: &ScalarField,
        mult: impl Fn(usize, usize, f64, f64) -> Complex64 + Sync,
    ) -> ScalarField {
        let np = self.n_pad;
        let mut buf = self.embed(f);
        self.fft2(&mut buf, false);
        // DFT circular convolution already supplies one factor of h^2 per
        // sum relative to the integral, and sampling khat at the grid
        // frequencies absorbs it: no quadrature weight appears here.
        for j in 0..np {
            for i in 0..np {
                let m = mult(i, j, self.freqs[i], self.freqs[j]);
                buf[j * np + i] *= m;
            }
        }
        self.fft2(&mut buf, true);
        self.extract(&buf)
    }

    /// E * f: free-space Newtonian potential of a compactly supported
    /// source, gauged to mean zero over the data box.
    pub fn newtonian_potential(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check_support(f)?;
        let khat = &self.khat;
        let np = self.n_pad;
        let mut out =
            self.convolve_with_multiplier(f, |i, j, _, _| Complex64::new(khat[j * np + i], 0.0));
        let mean = out.mean();
        for v in out.data.iter_mut() {
            *v -= mean;
        }
        Ok(out)
    }

    /// E * div f for a compactly supported vector field, with the
    /// divergence taken in Fourier space.
    pub fn newtonian_potential_of_div(&self, f: &VectorField) -> Result<ScalarField> {
        let fx = ScalarField { grid: self.grid, data: f.x.clone() };
        let fy = ScalarField { grid: self.grid, data: f.y.clone() };
        self.check_support(&fx)?;
        self.check_support(&fy)?;
        let np = self.n_pad;
        let khat = &self.khat;
        let mut bx = self.embed(&fx);
        let mut by = self.embed(&fy);
        self.fft2(&mut bx, false);
        self.fft2(&mut by, false);
        for j in 0..np {
            let ky = self.freqs[j];
            for i in 0..np {
                let kx = self.freqs[i];
                let idx = j * np + i;
                let kdotf = bx[idx] * kx + by[idx] * ky;
                bx[idx] = Complex64::new(0.0, 1.0) * kdotf * khat[idx];
            }
        }
        self.fft2(&mut bx, true);
        let mut out = self.extract(&bx);
        let mean = out.mean();
        for v in out.data.iter_mut() {
            *v -= mean;
        }
        Ok(out)
    }

    /// Gradient of the Newtonian potential, computed in Fourier space.
    pub fn newtonian_gradient(&self, f: &ScalarField) -> Result<VectorField> {
        self.check_support(f)?;
        let khat = &self.khat;
        let np = self.n_pad;
        let gx = self.convolve_with_multiplier(f, |i, j, kx, _| {
            Complex64::new(0.0, kx * khat[j * np + i])
        });
        let gy = self.convolve_with_multiplier(f, |i, j, _, ky| {
            Complex64::new(0.0, ky * khat[j * np + i])
        });
        Ok(VectorField { grid: self.grid, x: gx.data, y: gy.data })
    }

    /// Second Riesz-type operator d_a d_b (-Lap)^{-1}: the pure Fourier
    /// multiplier -xi_a xi_b / |xi|^2 on the padded box. At xi = 0 the
    /// symbol is set to -delta_ab / 2 so that the trace identity
    /// sum_a R_aa f = -f holds exactly for every discrete f.
    pub fn riesz_second(&self, f: &ScalarField, a: usize, b: usize) -> ScalarField {
        assert!(a < 2 && b < 2);
        self.convolve_with_multiplier_unit(f, |kx, ky| {
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                if a == b {
                    -0.5
                } else {
                    0.0
                }
            } else {
                let ka = if a == 0 { kx } else { ky };
                let kb = if b == 0 { kx } else { ky };
                -ka * kb / k2
            }
        })
    }

    /// Multiplier without the quadrature weight h^2 (order-zero operators).
    fn convolve_with_multiplier_unit(
        &self,
        f: &ScalarField,
        mult: impl Fn(f64, f64) -> f64 + Sync,
    ) -> ScalarField {
        let np = self.n_pad;
        let mut buf = self.embed(f);
        self.fft2(&mut buf, false);
        for j in 0..np {
            for i in 0..np {
                buf[j * np + i] *= mult(self.freqs[i], self.freqs[j]);
            }
        }
        self.fft2(&mut buf, true);
        self.extract(&buf)
    }

    /// grad (E * div f), the free-space projection kernel applied to a
    /// compactly supported vector field; realized through the truncated
    /// kernel so it is the genuine free-space operator on the data box.
    pub fn grad_e_conv(&self, f: &VectorField) -> Result<VectorField> {
        let fx = ScalarField { grid: self.grid, data: f.x.clone() };
        let fy = ScalarField { grid: self.grid, data: f.y.clone() };
        self.check_support(&fx)?;
        self.check_support(&fy)?;
        let np = self.n_pad;
        let khat = &self.khat;

        let mut bx = self.embed(&fx);
        let mut by = self.embed(&fy);
        self.fft2(&mut bx, false);
        self.fft2(&mut by, false);
        // div: i k . f_hat ; E*: khat ; grad: i k  => -k_a (k . f_hat) khat.
        let mut outx = vec![Complex64::new(0.0, 0.0); np * np];
        let mut outy = vec![Complex64::new(0.0, 0.0); np * np];
        for j in 0..np {
            let ky = self.freqs[j];
            for i in 0..np {
                let kx = self.freqs[i];
                let idx = j * np + i;
                let kdotf = bx[idx] * kx + by[idx] * ky;
                outx[idx] = -kdotf * kx * khat[idx];
                outy[idx] = -kdotf * ky * khat[idx];
            }
        }
        self.fft2(&mut outx, true);
        self.fft2(&mut outy, true);
        let gx = self.extract(&outx);
        let gy = self.extract(&outy);
        Ok(VectorField { grid: self.grid, x: gx.data, y: gy.data })
    }

    /// Inverts the composition of the centered-difference divergence and
    /// gradient stencils, which is diagonal on the padded lattice with
    /// symbol -(sin^2(kx h) + sin^2(ky h)) / h^2. Modes the symbol
    /// annihilates (mean and Nyquist lines) are dropped, so the source
    /// should be mean-free.
    pub fn wide_laplacian_inverse(&self, f: &ScalarField) -> ScalarField {
        let h = self.grid.h();
        self.convolve_with_multiplier_unit(f, move |kx, ky| {
            let s = (kx * h).sin().powi(2) + (ky * h).sin().powi(2);
            if s < 1e-12 {
                0.0
            } else {
                -h * h / s
            }
        })
    }

    /// Spectral Laplacian on the padded box (used by consistency checks).
    pub fn spectral_neg_laplacian(&self, u: &ScalarField) -> ScalarField {
        self.convolve_with_multiplier_unit(u, |kx, ky| kx * kx + ky * ky)
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for j in 0..n {
        for i in 0..j {
            data.swap(j * n + i, i * n + j);
        }
    }
}

/// Closed-form Fourier transform of E(x) 1_{|x| < T} for the 2-D log
/// kernel: (1 - J0(sT))/s^2 - T ln T J1(sT)/s, with the s -> 0 limit
/// T^2 (1 - 2 ln T)/4.
fn truncated_log_kernel_hat(s: f64, t: f64) -> f64 {
    if s * t < 1e-6 {
        return t * t * (1.0 - 2.0 * t.ln()) / 4.0;
    }
    let st = s * t;
    (1.0 - libm::j0(st)) / (s * s) - t * t.ln() * libm::j1(st) / st * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fundamental_solution_values() {
        assert!(fundamental_solution(2, 1.0).unwrap().abs() < 1e-15);
        let e3 = fundamental_solution(3, 1.0).unwrap();
        assert!((e3 - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!(fundamental_solution(2, 0.0).is_err());
    }

    /// Radial ODE oracle for the potential of a normalized Gaussian:
    /// u'(r) = -m(r) / (2 pi r) with m the enclosed mass.
    fn gaussian_potential_oracle(sigma: f64, r_targets: &[f64]) -> Vec<f64> {
        let rmax = r_targets.iter().cloned().fold(0.0f64, f64::max);
        let steps = 400_000;
        let dr = rmax / steps as f64;
        let mut u = 0.0; // u(0) unknown gauge; integrate u(r) - u(0)
        let mut out = Vec::new();
        let mut next = 0usize;
        for k in 0..steps {
            let r = (k as f64 + 0.5) * dr;
            let m = 1.0 - (-r * r / (2.0 * sigma * sigma)).exp();
            u += -m / (2.0 * std::f64::consts::PI * r) * dr;
            while next < r_targets.len() && r_targets[next] <= r + 0.5 * dr {
                out.push(u);
                next += 1;
            }
        }
        while out.len() < r_targets.len() {
            out.push(u);
        }
        out
    }

    #[test]
    fn gaussian_matches_radial_oracle() {
        let grid = Grid::centered(256, 1.5);
        let sb = SpectralBox::new(grid);
        let sigma = 0.05;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma);
        let f = ScalarField::from_fn(grid, |x, y| {
            norm * (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
        });
        let u = sb.newtonian_potential(&f).unwrap();

        // Compare potential differences (gauge-free) along a radius.
        let probes: [(f64, f64); 5] = [(0.1, 0.0), (0.3, 0.0), (0.0, 0.6), (0.5, 0.5), (0.9, 0.2)];
        let radii: Vec<f64> = probes.iter().map(|p| (p.0 * p.0 + p.1 * p.1).sqrt()).collect();
        let oracle = gaussian_potential_oracle(sigma, &{
            let mut r = radii.clone();
            r.sort_by(f64::total_cmp);
            r
        });
        let mut sorted: Vec<(f64, f64)> = radii
            .iter()
            .zip(probes.iter())
            .map(|(&r, &(x, y))| (r, u.sample_cubic(x, y)))
            .collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Differences between successive probes must match the oracle.
        for w in 1..sorted.len() {
            let got = sorted[w].1 - sorted[0].1;
            let want = oracle[w] - oracle[0];
            assert!(
                (got - want).abs() < 1e-3 * want.abs().max(1e-2),
                "probe {w}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn potential_of_laplacian_recovers_bump() {
        let grid = Grid::centered(256, 1.5);
        let sb = SpectralBox::new(grid);
        // Gaussian profile: smooth, with a closed-form Laplacian, and far
        // below the support tolerance at the box edge.
        let s2 = 0.1 * 0.1;
        let b = ScalarField::from_fn(grid, |x, y| (-(x * x + y * y) / (2.0 * s2)).exp());
        let lap_b = ScalarField::from_fn(grid, |x, y| {
            let r2 = x * x + y * y;
            (2.0 / s2 - r2 / (s2 * s2)) * (-r2 / (2.0 * s2)).exp()
        });
        let u = sb.newtonian_potential(&lap_b).unwrap();
        // E * (-Lap b) = b + constant; the solver gauges to mean zero.
        let diff = u.sub(&b);
        let m = diff.mean();
        let centered = diff.map(|v| v - m);
        assert!(centered.l2() < 1e-6, "l2 = {}", centered.l2());
    }

    #[test]
    fn riesz_trace_identity() {
        let grid = Grid::centered(128, 1.0);
        let sb = SpectralBox::new(grid);
        let f = ScalarField::from_fn(grid, |x, y| {
            (-(x * x + y * y) / 0.02).exp() * (5.0 * x).cos()
        });
        let mut sum = sb.riesz_second(&f, 0, 0);
        sum.add_assign(&sb.riesz_second(&f, 1, 1));
        let resid = sum.sub(&f.scaled(-1.0));
        assert!(resid.l2() / f.l2() < 1e-8, "rel = {}", resid.l2() / f.l2());
    }

    #[test]
    fn grad_e_conv_on_gradients_and_curls() {
        let grid = Grid::centered(128, 1.0);
        let sb = SpectralBox::new(grid);
        let phi = |x: f64, y: f64| (-(x * x + y * y) / 0.02).exp();
        let dphi = |x: f64, y: f64| {
            let p = phi(x, y);
            (-2.0 * x / 0.02 * p, -2.0 * y / 0.02 * p)
        };
        // f = grad phi: grad(E * div grad phi) = grad(E * Lap phi) = -grad phi.
        let f = VectorField::from_fn(grid, dphi);
        let g = sb.grad_e_conv(&f).unwrap();
        let resid = g.sub(&VectorField {
            grid,
            x: f.x.iter().map(|v| -v).collect(),
            y: f.y.iter().map(|v| -v).collect(),
        });
        assert!(resid.l2() / f.l2() < 1e-6, "gradient case rel = {}", resid.l2() / f.l2());
        // Divergence-free input: rotated gradient maps to ~0.
        let curl = VectorField::from_fn(grid, |x, y| {
            let (a, b) = dphi(x, y);
            (-b, a)
        });
        let g2 = sb.grad_e_conv(&curl).unwrap();
        assert!(g2.l2() / curl.l2() < 1e-6, "curl case rel = {}", g2.l2() / curl.l2());
    }

    #[test]
    fn laplacian_consistency_interior() {
        let grid = Grid::centered(128, 1.0);
        let sb = SpectralBox::new(grid);
        let f = ScalarField::from_fn(grid, |x, y| (-(x * x + y * y) / (2.0 * 0.1 * 0.1)).exp());
        // -Lap (E * f) applied in a single padded transform, so the
        // potential keeps its far field instead of being re-embedded with
        // zeros outside the data box.
        let khat = &sb.khat;
        let np = sb.n_pad;
        let lap = sb.convolve_with_multiplier(&f, |i, j, kx, ky| {
            Complex64::new((kx * kx + ky * ky) * khat[j * np + i], 0.0)
        });
        let resid = lap.sub(&f);
        // Interior restriction: skip a margin near the data-box edge where
        // the truncation ring's band-limited image concentrates.
        let n = grid.n;
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 8..n - 8 {
            for i in 8..n - 8 {
                num += resid.at(i, j).powi(2);
                den += f.at(i, j).powi(2);
            }
        }
        let rel = (num / den).sqrt();
        assert!(rel < 1e-8, "rel = {rel}");
    }

    #[test]
    fn support_leak_is_detected() {
        let grid = Grid::centered(64, 1.0);
        let sb = SpectralBox::new(grid);
        let f = ScalarField::from_fn(grid, |_, _| 1.0);
        assert!(matches!(
            sb.newtonian_potential(&f),
            Err(crate::error::Error::Singular(SingularError::SupportLeak(_)))
        ));
    }
}

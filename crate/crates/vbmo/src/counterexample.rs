//! Half-space spectral laboratory: the Poisson-kernel bound for the normal
//! derivative of the single layer, the unbounded tangential counterpart,
//! and the growth demonstration that separates them.
//!
//! The periodic tangential torus (length 2 pi) stands in for the flat
//! boundary; the k = 0 mode is projected out before any inverse of |k|.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

/// Boundary data on the tangential torus together with its spectrum.
pub struct HalfSpaceField {
    pub n: usize,
    pub g: Vec<f64>,
    spectrum: Vec<Complex64>,
}

fn fft_forward(data: &[f64]) -> Vec<Complex64> {
    let n = data.len();
    let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
    buf
}

fn fft_inverse(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.into_iter().map(|v| v.re).collect()
}

/// Signed wavenumber of spectral slot `i` on an n-point torus.
fn wavenumber(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

impl HalfSpaceField {
    pub fn new(g: Vec<f64>) -> Self {
        let n = g.len();
        assert!(n >= 16 && n % 2 == 0);
        let spectrum = fft_forward(&g);
        HalfSpaceField { n, g, spectrum }
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = 2.0 * std::f64::consts::PI / n as f64;
        Self::new((0..n).map(|i| f(i as f64 * h)).collect())
    }

    /// Square wave (jumps at 0 and pi) mollified by a Gaussian of the given
    /// scale, rescaled to sup-norm one.
    pub fn mollified_sign(n: usize, scale: f64) -> Self {
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        let mut k = 1;
        while k < n / 2 {
            // sign = sum over odd k of (4 / pi k) sin(k x).
            let b = 4.0 / (std::f64::consts::PI * k as f64)
                * (-0.5 * (scale * k as f64).powi(2)).exp();
            spec[k] = Complex64::new(0.0, -0.5 * b);
            spec[n - k] = Complex64::new(0.0, 0.5 * b);
            k += 2;
        }
        let g = fft_inverse(spec);
        let sup = g.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
        Self::new(g.iter().map(|&v| v / sup).collect())
    }

    /// Applies a Fourier multiplier m(k) at height x_n and returns the
    /// tangential field. The multiplier must satisfy m(-k) = conj m(k).
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> Complex64) -> Vec<f64> {
        let buf: Vec<Complex64> = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(i, &c)| c * m(wavenumber(i, self.n)))
            .collect();
        fft_inverse(buf)
    }

    /// Normal derivative of the single layer at height x_n: half of the
    /// Poisson extension, multiplier (1/2) e^{-x_n |k|}.
    pub fn poisson_normal_derivative(&self, x_n: f64) -> Vec<f64> {
        assert!(x_n > 0.0);
        self.apply_multiplier(|k| Complex64::new(0.5 * (-x_n * k.abs()).exp(), 0.0))
    }

    /// Tangential derivative of the single layer at height x_n: multiplier
    /// (i k / 2|k|) e^{-x_n |k|}, with the k = 0 mode projected out.
    pub fn tangential_derivative(&self, x_n: f64) -> Vec<f64> {
        assert!(x_n > 0.0);
        self.apply_multiplier(|k| {
            if k == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, 0.5 * k.signum() * (-x_n * k.abs()).exp())
            }
        })
    }

    /// Positive-mode coefficients c_k, truncated where the data spectrum is
    /// negligible, for pointwise series evaluation off the grid.
    fn positive_modes(&self) -> Vec<Complex64> {
        let tail = self.spectrum[1..self.n / 2]
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
            * 1e-13;
        let mut kmax = 1;
        for k in 1..self.n / 2 {
            if self.spectrum[k].norm() > tail {
                kmax = k;
            }
        }
        self.spectrum[1..=kmax].to_vec()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrowthRow {
    pub level: u32,
    /// Mollification scale 2^-level.
    pub scale: f64,
    /// Boundary-ball seminorm of the tangential derivative field.
    pub tangential: f64,
    /// Same ball scan applied to the normal derivative field.
    pub normal: f64,
    /// Sup over dyadic heights of the normal derivative field.
    pub normal_sup: f64,
}

/// Mean of |f| over a half-ball of radius r centered at (center, 0),
/// normalized by the half-disk area (so a pointwise bound on |f| caps the
/// value), with f the single-layer derivative field evaluated
/// by direct series summation on a midpoint product rule. Returns the
/// (tangential, normal) pair in one pass.
fn ball_values(modes: &[Complex64], center: f64, r: f64) -> (f64, f64) {
    const NQ: usize = 32;
    let mut acc_t = 0.0;
    let mut acc_n = 0.0;
    for j in 0..NQ {
        let xn = (j as f64 + 0.5) * r / NQ as f64;
        let half = (r * r - xn * xn).sqrt();
        // Per-height coefficients of the two derivative fields:
        // f(x) = sum_k Re(d_k e^{ikx}), d_k = 2 c_k m(k, xn).
        let dt: Vec<Complex64> = modes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let k = (i + 1) as f64;
                c * Complex64::new(0.0, (-xn * k).exp())
            })
            .collect();
        let dn: Vec<Complex64> = modes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let k = (i + 1) as f64;
                c * Complex64::new((-xn * k).exp(), 0.0)
            })
            .collect();
        let dx = 2.0 * half / NQ as f64;
        let cell = dx * r / NQ as f64;
        for i in 0..NQ {
            let x = center - half + (i as f64 + 0.5) * dx;
            let z = Complex64::from_polar(1.0, x);
            let mut w = z;
            let mut ft = 0.0;
            let mut fn_ = 0.0;
            for (a, b) in dt.iter().zip(&dn) {
                ft += (a * w).re;
                fn_ += (b * w).re;
                w *= z;
            }
            acc_t += ft.abs() * cell;
            acc_n += fn_.abs() * cell;
        }
    }
    let area = 0.5 * std::f64::consts::PI * r * r;
    (acc_t / area, acc_n / area)
}

/// Growth table for the mollified-sign family: one row per level, with the
/// boundary-ball scan over dyadic radii 2^-1..2^-8 and center offsets
/// proportional to the radius around the jump.
pub fn ce_growth_demo(l_max: u32) -> Vec<GrowthRow> {
    let n = 4096;
    (1..=l_max)
        .into_par_iter()
        .map(|level| {
            let scale = 2f64.powi(-(level as i32));
            let g = HalfSpaceField::mollified_sign(n, scale);
            let modes = g.positive_modes();
            let balls: Vec<(f64, f64)> = (1..=8)
                .flat_map(|k| {
                    let r = 2f64.powi(-k);
                    (-4i32..=4).map(move |m| (m as f64 * r / 4.0, r))
                })
                .collect();
            let (tangential, normal) = balls
                .par_iter()
                .map(|&(c, r)| ball_values(&modes, c, r))
                .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
            let normal_sup = (0..=8)
                .map(|k| {
                    let field = g.poisson_normal_derivative(2f64.powi(-k));
                    field.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
                })
                .fold(0.0f64, f64::max);
            GrowthRow { level, scale, tangential, normal, normal_sup }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_data_gives_exactly_one_half() {
        let g = HalfSpaceField::from_fn(256, |_| 1.0);
        for k in 0..6 {
            let f = g.poisson_normal_derivative(2f64.powi(-k));
            for v in f {
                assert!((v - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_mode_is_an_eigenfunction() {
        let n = 256;
        let g = HalfSpaceField::from_fn(n, |x| x.cos());
        let f = g.tangential_derivative(1.0);
        let h = 2.0 * std::f64::consts::PI / n as f64;
        for (i, &v) in f.iter().enumerate() {
            let expect = -0.5 * (-1.0f64).exp() * (i as f64 * h).sin();
            assert!((v - expect).abs() < 1e-12, "slot {i}: {v} vs {expect}");
        }
    }

    #[test]
    fn even_data_gives_odd_tangential_field() {
        let g = HalfSpaceField::from_fn(512, |x| (2.0 * x.cos()).exp().cos());
        let f = g.tangential_derivative(0.3);
        let n = 512;
        for i in 1..n {
            assert!((f[i] + f[n - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_bound_holds_for_random_bounded_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g: Vec<f64> = (0..512).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sup_g = g.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            let field = HalfSpaceField::new(g);
            for k in 0..=10 {
                let f = field.poisson_normal_derivative(2f64.powi(-k));
                let sup = f.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
                assert!(sup <= 0.5 * sup_g + 1e-10, "height 2^-{k}: {sup} vs {sup_g}");
            }
        }
    }

    #[test]
    fn heights_compose_in_the_multiplier() {
        // Transporting to height a and then applying the half-Poisson
        // multiplier for height b equals the single composed multiplier.
        let g = HalfSpaceField::from_fn(256, |x| x.sin() + 0.3 * (3.0 * x).cos());
        let step = g.apply_multiplier(|k| Complex64::new((-0.4 * k.abs()).exp(), 0.0));
        let two = HalfSpaceField::new(step).poisson_normal_derivative(0.6);
        let composed = g.poisson_normal_derivative(1.0);
        for (a, b) in two.iter().zip(&composed) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn growth_table_is_monotone_with_bounded_normal_part() {
        let rows = ce_growth_demo(5);
        for pair in rows.windows(2) {
            assert!(pair[1].tangential > pair[0].tangential, "{pair:?}");
        }
        for row in &rows {
            assert!(row.normal <= 0.5, "{row:?}");
            assert!(row.normal_sup <= 0.5 + 1e-10, "{row:?}");
        }
    }
}

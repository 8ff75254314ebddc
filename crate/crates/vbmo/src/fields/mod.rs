//! Scalar and vector fields sampled on a [`Grid`], with the finite
//! difference calculus used throughout the pipeline.

pub mod io;
pub mod seminorm;

use crate::error::{FieldError, Result};
use crate::grid::{cubic_weights, Grid};

pub use seminorm::{bmo_seminorm, bnu_seminorm, vbmo_norm, BallWitness, SeminormReport};

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Grid,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, data: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let n = grid.n;
        let mut data = vec![0.0; grid.len()];
        for j in 0..n {
            for i in 0..n {
                let (x, y) = grid.point(i, j);
                data[grid.idx(i, j)] = f(x, y);
            }
        }
        ScalarField { grid, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.grid.idx(i, j);
        &mut self.data[k]
    }

    /// Bilinear interpolation, clamped to the box.
    pub fn sample_linear(&self, x: f64, y: f64) -> f64 {
        let n = self.grid.n;
        let (fx, fy) = self.grid.frac_index(x, y);
        let fx = fx.clamp(0.0, (n - 1) as f64);
        let fy = fy.clamp(0.0, (n - 1) as f64);
        let i = (fx as usize).min(n - 2);
        let j = (fy as usize).min(n - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let f00 = self.at(i, j);
        let f10 = self.at(i + 1, j);
        let f01 = self.at(i, j + 1);
        let f11 = self.at(i + 1, j + 1);
        f00 * (1.0 - tx) * (1.0 - ty) + f10 * tx * (1.0 - ty)
            + f01 * (1.0 - tx) * ty + f11 * tx * ty
    }

    /// Catmull-Rom bicubic interpolation, clamped to the box; C^1 and
    /// fourth-order for smooth data, which keeps second differences of
    /// chart-interpolated quantities usable.
    pub fn sample_cubic(&self, x: f64, y: f64) -> f64 {
        let n = self.grid.n as isize;
        let (fx, fy) = self.grid.frac_index(x, y);
        let fx = fx.clamp(0.0, (n - 1) as f64);
        let fy = fy.clamp(0.0, (n - 1) as f64);
        let i = fx.floor() as isize;
        let j = fy.floor() as isize;
        let wx = cubic_weights(fx - i as f64);
        let wy = cubic_weights(fy - j as f64);
        let mut acc = 0.0;
        for (b, wyb) in wy.iter().enumerate() {
            let jj = (j - 1 + b as isize).clamp(0, n - 1) as usize;
            let mut row = 0.0;
            for (a, wxa) in wx.iter().enumerate() {
                let ii = (i - 1 + a as isize).clamp(0, n - 1) as usize;
                row += wxa * self.at(ii, jj);
            }
            acc += wyb * row;
        }
        acc
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        self.map(|v| c * v)
    }

    pub fn add_assign(&mut self, other: &ScalarField) {
        assert_eq!(self.grid, other.grid);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.grid, other.grid);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        ScalarField { grid: self.grid, data }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn l2(&self) -> f64 {
        let h = self.grid.h();
        (self.data.iter().map(|v| v * v).sum::<f64>() * h * h).sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Weighted L2 norm over a mask (weights in [0,1]).
    pub fn l2_masked(&self, w: &ScalarField) -> f64 {
        assert_eq!(self.grid, w.grid);
        let h = self.grid.h();
        let s: f64 = self.data.iter().zip(&w.data).map(|(v, m)| v * v * m).sum();
        (s * h * h).sqrt()
    }

    /// Centered-difference gradient, one-sided at the box edge.
    pub fn gradient(&self) -> VectorField {
        let g = self.grid;
        let n = g.n;
        let h = g.h();
        let mut gx = vec![0.0; g.len()];
        let mut gy = vec![0.0; g.len()];
        for j in 0..n {
            for i in 0..n {
                let k = g.idx(i, j);
                gx[k] = if i == 0 {
                    (self.at(1, j) - self.at(0, j)) / h
                } else if i == n - 1 {
                    (self.at(n - 1, j) - self.at(n - 2, j)) / h
                } else {
                    (self.at(i + 1, j) - self.at(i - 1, j)) / (2.0 * h)
                };
                gy[k] = if j == 0 {
                    (self.at(i, 1) - self.at(i, 0)) / h
                } else if j == n - 1 {
                    (self.at(i, n - 1) - self.at(i, n - 2)) / h
                } else {
                    (self.at(i, j + 1) - self.at(i, j - 1)) / (2.0 * h)
                };
            }
        }
        VectorField { grid: g, x: gx, y: gy }
    }
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField { grid, x: vec![0.0; grid.len()], y: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> (f64, f64) + Sync) -> Self {
        let mut vx = vec![0.0; grid.len()];
        let mut vy = vec![0.0; grid.len()];
        for j in 0..grid.n {
            for i in 0..grid.n {
                let (x, y) = grid.point(i, j);
                let (a, b) = f(x, y);
                let k = grid.idx(i, j);
                vx[k] = a;
                vy[k] = b;
            }
        }
        VectorField { grid, x: vx, y: vy }
    }

    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: if c == 0 { self.x.clone() } else { self.y.clone() },
        }
    }

    pub fn sample_linear(&self, x: f64, y: f64) -> (f64, f64) {
        // Cheap enough to go through temporary views.
        let sx = ScalarField { grid: self.grid, data: self.x.clone() };
        let sy = ScalarField { grid: self.grid, data: self.y.clone() };
        (sx.sample_linear(x, y), sy.sample_linear(x, y))
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        assert_eq!(self.grid, other.grid);
        VectorField {
            grid: self.grid,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &VectorField) {
        assert_eq!(self.grid, other.grid);
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a += *b;
        }
        for (a, b) in self.y.iter_mut().zip(&other.y) {
            *a += *b;
        }
    }

    pub fn l2(&self) -> f64 {
        let h = self.grid.h();
        let s: f64 = self.x.iter().map(|v| v * v).sum::<f64>()
            + self.y.iter().map(|v| v * v).sum::<f64>();
        (s * h * h).sqrt()
    }

    pub fn l2_masked(&self, w: &ScalarField) -> f64 {
        assert_eq!(self.grid, w.grid);
        let h = self.grid.h();
        let mut s = 0.0;
        for k in 0..self.grid.len() {
            s += (self.x[k] * self.x[k] + self.y[k] * self.y[k]) * w.data[k];
        }
        (s * h * h).sqrt()
    }

    /// Centered-difference divergence, one-sided at the box edge.
    pub fn divergence(&self) -> ScalarField {
        let g = self.grid;
        let n = g.n;
        let h = g.h();
        let mut out = vec![0.0; g.len()];
        let vx = |i: usize, j: usize| self.x[g.idx(i, j)];
        let vy = |i: usize, j: usize| self.y[g.idx(i, j)];
        for j in 0..n {
            for i in 0..n {
                let dx = if i == 0 {
                    (vx(1, j) - vx(0, j)) / h
                } else if i == n - 1 {
                    (vx(n - 1, j) - vx(n - 2, j)) / h
                } else {
                    (vx(i + 1, j) - vx(i - 1, j)) / (2.0 * h)
                };
                let dy = if j == 0 {
                    (vy(i, 1) - vy(i, 0)) / h
                } else if j == n - 1 {
                    (vy(i, n - 1) - vy(i, n - 2)) / h
                } else {
                    (vy(i, j + 1) - vy(i, j - 1)) / (2.0 * h)
                };
                out[g.idx(i, j)] = dx + dy;
            }
        }
        ScalarField { grid: g, data: out }
    }

    pub fn dot(&self, other: &VectorField) -> ScalarField {
        assert_eq!(self.grid, other.grid);
        let data = (0..self.grid.len())
            .map(|k| self.x[k] * other.x[k] + self.y[k] * other.y[k])
            .collect();
        ScalarField { grid: self.grid, data }
    }
}

/// Cutoff-times-field product with support control: the scalar weight is
/// expected to vanish where the field is unreliable.
pub fn multiply(w: &ScalarField, v: &VectorField) -> Result<VectorField> {
    if w.grid != v.grid {
        return Err(FieldError::GridMismatch(
            format!("{:?}", w.grid),
            format!("{:?}", v.grid),
        )
        .into());
    }
    Ok(VectorField {
        grid: v.grid,
        x: v.x.iter().zip(&w.data).map(|(a, b)| a * b).collect(),
        y: v.y.iter().zip(&w.data).map(|(a, b)| a * b).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_linear_field_is_exact() {
        let g = Grid::centered(32, 1.0);
        let f = ScalarField::from_fn(g, |x, y| 2.0 * x - 3.0 * y + 0.5);
        let grad = f.gradient();
        for k in 0..g.len() {
            assert!((grad.x[k] - 2.0).abs() < 1e-12);
            assert!((grad.y[k] + 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_of_rotation_vanishes() {
        let g = Grid::centered(48, 1.0);
        let v = VectorField::from_fn(g, |x, y| (-y, x));
        let d = v.divergence();
        assert!(d.linf() < 1e-12);
    }

    #[test]
    fn bicubic_reproduces_cubics() {
        let g = Grid::centered(32, 1.0);
        let f = ScalarField::from_fn(g, |x, y| x * x * x - 2.0 * x * y + y * y);
        let exact = |x: f64, y: f64| x * x * x - 2.0 * x * y + y * y;
        for &(x, y) in &[(0.13, -0.41), (0.52, 0.17), (-0.66, 0.33)] {
            assert!((f.sample_cubic(x, y) - exact(x, y)).abs() < 2e-4);
        }
    }

    #[test]
    fn multiply_rejects_grid_mismatch() {
        let a = ScalarField::zeros(Grid::centered(16, 1.0));
        let v = VectorField::zeros(Grid::centered(32, 1.0));
        assert!(multiply(&a, &v).is_err());
    }
}

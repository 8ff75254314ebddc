//! Uniform cell-centered grid over a square box.
//!
//! Nodes sit at cell centers, `x_i = x0 + (i + 1/2) h`, so a box that is
//! symmetric about the origin never places a node exactly on a symmetry
//! line or on the boundary curve. Data is stored row-major with the x
//! index fastest.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Nodes per axis.
    pub n: usize,
    /// Lower-left corner of the box.
    pub x0: f64,
    pub y0: f64,
    /// Box side length (square box).
    pub side: f64,
}

impl Grid {
    pub fn new(n: usize, x0: f64, y0: f64, side: f64) -> Self {
        assert!(n >= 4 && side > 0.0, "degenerate grid");
        Grid { n, x0, y0, side }
    }

    /// Square box centered at the origin.
    pub fn centered(n: usize, half_width: f64) -> Self {
        Grid::new(n, -half_width, -half_width, 2.0 * half_width)
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.side / self.n as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.h()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + (j as f64 + 0.5) * self.h()
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x(i), self.y(j))
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fractional index coordinates of a physical point (0 at the first
    /// node, n-1 at the last).
    #[inline]
    pub fn frac_index(&self, x: f64, y: f64) -> (f64, f64) {
        let h = self.h();
        ((x - self.x0) / h - 0.5, (y - self.y0) / h - 0.5)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x0 + self.side && y >= self.y0 && y <= self.y0 + self.side
    }
}

/// Catmull-Rom weight for the 4-point kernel, t in [0,1] between nodes 1 and 2.
#[inline]
pub(crate) fn cubic_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

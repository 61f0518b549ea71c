//! Uniform evaluation grids for the continuum fields.

use serde::{Deserialize, Serialize};

/// Uniform 1D grid: nodes `y0 + i*h`, `i in 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1d {
    pub y0: f64,
    pub n: usize,
    pub h: f64,
}

impl Grid1d {
    pub fn new(y0: f64, n: usize, h: f64) -> Self {
        assert!(n >= 3 && h > 0.0);
        Self { y0, n, h }
    }

    /// Grid centered on `c` extending `half` to each side.
    pub fn centered(c: f64, half: f64, h: f64) -> Self {
        let m = (half / h).ceil() as usize;
        Self::new(c - m as f64 * h, 2 * m + 1, h)
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.y0 + i as f64 * self.h
    }

    pub fn max(&self) -> f64 {
        self.node(self.n - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.y0 <= lo && self.max() >= hi
    }
}

/// Uniform 2D grid, shared spacing in x and y. Node (ix, iy) sits at
/// `(x0 + ix*h, y0 + iy*h)`; fields are stored row-major in y then x,
/// index `iy * nx + ix`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2d {
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

impl Grid2d {
    pub fn new(x0: f64, y0: f64, nx: usize, ny: usize, h: f64) -> Self {
        assert!(nx >= 3 && ny >= 3 && h > 0.0);
        Self { x0, y0, nx, ny, h }
    }

    /// Grid centered on `(cx, cy)` extending `half_x`/`half_y` to each side.
    pub fn centered(cx: f64, cy: f64, half_x: f64, half_y: f64, h: f64) -> Self {
        let mx = (half_x / h).ceil() as usize;
        let my = (half_y / h).ceil() as usize;
        Self::new(
            cx - mx as f64 * h,
            cy - my as f64 * h,
            2 * mx + 1,
            2 * my + 1,
            h,
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.h
    }

    #[inline]
    pub fn y(&self, iy: usize) -> f64 {
        self.y0 + iy as f64 * self.h
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn y_max(&self) -> f64 {
        self.y(self.ny - 1)
    }

    pub fn covers(&self, x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> bool {
        self.x0 <= x_lo && self.x_max() >= x_hi && self.y0 <= y_lo && self.y_max() >= y_hi
    }

    /// Per-node coordinates in storage order.
    pub fn coords(&self) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::with_capacity(self.len());
        let mut ys = Vec::with_capacity(self.len());
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                xs.push(self.x(ix));
                ys.push(self.y(iy));
            }
        }
        (xs, ys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_grid_covers_request() {
        let g = Grid2d::centered(1.0, -2.0, 5.0, 3.0, 0.1);
        assert!(g.covers(-4.0, 6.0, -5.0, 1.0));
        assert_eq!(g.nx % 2, 1);
        // center node is exactly the requested center
        assert!((g.x(g.nx / 2) - 1.0).abs() < 1e-12);
        assert!((g.y(g.ny / 2) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn storage_order_is_y_major() {
        let g = Grid2d::new(0.0, 0.0, 4, 3, 1.0);
        assert_eq!(g.index(2, 1), 6);
        let (xs, ys) = g.coords();
        assert_eq!(xs[6], 2.0);
        assert_eq!(ys[6], 1.0);
    }
}

//! Uniform node lattices and the trapezoidal quadrature tied to them.
//!
//! Cartesian grids are symmetric about the origin with `2m + 1` nodes per
//! axis. The radial grid covers `[0, m h]` and stores `w = r u`; the
//! quadrature weight there carries the `4 pi r^2` surface factor.

use crate::field::{Field, Point};
use crate::medium::DimMode;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub dim: DimMode,
    pub h: f64,
    /// Nodes per axis.
    pub n: usize,
}

impl Grid {
    /// Smallest grid of spacing `h` whose half-width reaches `extent`.
    pub fn covering(dim: DimMode, h: f64, extent: f64) -> Self {
        let m = (extent / h - 1e-9).ceil().max(1.0) as usize;
        let n = match dim {
            DimMode::Radial3D => m + 1,
            _ => 2 * m + 1,
        };
        Grid { dim, h, n }
    }

    fn half(&self) -> usize {
        match self.dim {
            DimMode::Radial3D => 0,
            _ => (self.n - 1) / 2,
        }
    }

    pub fn extent(&self) -> f64 {
        match self.dim {
            DimMode::Radial3D => (self.n - 1) as f64 * self.h,
            _ => self.half() as f64 * self.h,
        }
    }

    /// Storage dimension: 2 for the plane, 1 otherwise.
    pub fn axes(&self) -> usize {
        self.dim.grid_dim()
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis_coord(&self, i: usize) -> f64 {
        (i as f64 - self.half() as f64) * self.h
    }

    pub fn point(&self, idx: usize) -> Point {
        match self.dim {
            DimMode::Plane2D => {
                let (i, j) = (idx / self.n, idx % self.n);
                [self.axis_coord(i), self.axis_coord(j), 0.0]
            }
            _ => [self.axis_coord(idx), 0.0, 0.0],
        }
    }

    /// Trapezoidal weight of node `idx` for integrals over `R^n`.
    pub fn weight(&self, idx: usize) -> f64 {
        let edge = |i: usize| if i == 0 || i == self.n - 1 { 0.5 } else { 1.0 };
        match self.dim {
            DimMode::Line1D => edge(idx) * self.h,
            DimMode::Plane2D => {
                let (i, j) = (idx / self.n, idx % self.n);
                edge(i) * edge(j) * self.h * self.h
            }
            DimMode::Radial3D => {
                let r = self.axis_coord(idx);
                edge(idx) * self.h * 4.0 * std::f64::consts::PI * r * r
            }
        }
    }

    /// Samples a physical field into storage form (`w = r u` on the radial grid).
    pub fn sample(&self, field: &Field) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let x = self.point(idx);
                let v = field.value(&x);
                match self.dim {
                    DimMode::Radial3D => x[0] * v,
                    _ => v,
                }
            })
            .collect()
    }

    /// Physical value and gradient at node `idx` from a stored array,
    /// using centered differences with zero outside the grid.
    pub fn value_and_gradient(&self, stored: &[f64], idx: usize) -> (f64, Point) {
        let h = self.h;
        let at = |k: Option<usize>| k.map_or(0.0, |k| stored[k]);
        match self.dim {
            DimMode::Line1D => {
                let left = at(idx.checked_sub(1));
                let right = at((idx + 1 < self.n).then_some(idx + 1));
                (stored[idx], [(right - left) / (2.0 * h), 0.0, 0.0])
            }
            DimMode::Plane2D => {
                let n = self.n;
                let (i, j) = (idx / n, idx % n);
                let xm = at((i > 0).then(|| idx - n));
                let xp = at((i + 1 < n).then_some(idx + n));
                let ym = at((j > 0).then(|| idx - 1));
                let yp = at((j + 1 < n).then_some(idx + 1));
                (
                    stored[idx],
                    [(xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h), 0.0],
                )
            }
            DimMode::Radial3D => {
                let r = self.axis_coord(idx);
                // w is odd in r, so the ghost node below the origin is -w[1].
                let left = if idx == 0 {
                    -at((self.n > 1).then_some(1))
                } else {
                    stored[idx - 1]
                };
                let right = at((idx + 1 < self.n).then_some(idx + 1));
                let w_r = (right - left) / (2.0 * h);
                if idx == 0 {
                    (w_r, [0.0; 3])
                } else {
                    let u = stored[idx] / r;
                    (u, [(w_r - u) / r, 0.0, 0.0])
                }
            }
        }
    }

    /// Physical value at node `idx` (`w / r` on the radial grid).
    pub fn physical(&self, stored: &[f64], idx: usize) -> f64 {
        match self.dim {
            DimMode::Radial3D if idx > 0 => stored[idx] / self.axis_coord(idx),
            DimMode::Radial3D => self.value_and_gradient(stored, 0).0,
            _ => stored[idx],
        }
    }

    /// Trapezoidal integral of `f(x)` over the grid.
    pub fn integrate(&self, mut f: impl FnMut(usize, &Point) -> f64) -> f64 {
        (0..self.len())
            .map(|idx| {
                let w = self.weight(idx);
                if w == 0.0 {
                    0.0
                } else {
                    w * f(idx, &self.point(idx))
                }
            })
            .sum()
    }
}

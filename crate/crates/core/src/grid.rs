//! Uniform periodic grids over configuration space and cubic interpolation on them.
//!
//! Axis `a` covers `[-extent/2, extent/2)` with `points` nodes. Two-axis grids are
//! stored row-major: the flat index of node `(i, j)` is `i * points + j`.

use crate::{Error, Result};

/// Largest configuration-space dimension handled at desk scale.
pub const MAX_AXES: usize = 2;

/// A configuration point. Components beyond the grid's axis count are ignored.
pub type Point = [f64; MAX_AXES];

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axes: usize,
    points: usize,
    extent: f64,
}

impl GridSpec {
    pub fn new(axes: usize, points: usize, extent: f64) -> Result<Self> {
        if axes == 0 || axes > MAX_AXES {
            return Err(Error::InvalidGrid(format!(
                "axis count must be 1..={MAX_AXES}, got {axes}"
            )));
        }
        if points < 8 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 8, got {points}"
            )));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive, got {extent}"
            )));
        }
        Ok(Self {
            axes,
            points,
            extent,
        })
    }

    pub fn line(points: usize, extent: f64) -> Result<Self> {
        Self::new(1, points, extent)
    }

    pub fn square(points: usize, extent: f64) -> Result<Self> {
        Self::new(2, points, extent)
    }

    pub fn axes(&self) -> usize {
        self.axes
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.points as f64
    }

    /// Total node count, `points^axes`.
    pub fn len(&self) -> usize {
        self.points.pow(self.axes as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element of one node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.axes as i32)
    }

    pub fn lower(&self) -> f64 {
        -0.5 * self.extent
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        self.lower() + j as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.coordinate(j)).collect()
    }

    /// Per-axis node indices of a flat index.
    pub fn unflatten(&self, flat: usize) -> [usize; MAX_AXES] {
        match self.axes {
            1 => [flat, 0],
            _ => [flat / self.points, flat % self.points],
        }
    }

    pub fn flatten(&self, idx: [usize; MAX_AXES]) -> usize {
        match self.axes {
            1 => idx[0],
            _ => idx[0] * self.points + idx[1],
        }
    }

    pub fn node(&self, flat: usize) -> Point {
        let idx = self.unflatten(flat);
        let mut p = [0.0; MAX_AXES];
        for a in 0..self.axes {
            p[a] = self.coordinate(idx[a]);
        }
        p
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        let dk = 2.0 * std::f64::consts::PI / self.extent;
        (0..n)
            .map(|j| if j < n / 2 { j } else { j - n })
            .map(|j| j as f64 * dk)
            .collect()
    }

    /// Maps a coordinate into `[-extent/2, extent/2)`.
    pub fn wrap_coordinate(&self, x: f64) -> f64 {
        let l = self.extent;
        let shifted = (x - self.lower()).rem_euclid(l);
        // rem_euclid can return l itself for tiny negative inputs
        if shifted >= l {
            self.lower()
        } else {
            self.lower() + shifted
        }
    }

    pub fn wrap(&self, p: &mut Point) {
        for a in 0..self.axes {
            p[a] = self.wrap_coordinate(p[a]);
        }
    }

    /// Shortest periodic displacement from `a` to `b` along one axis.
    pub fn min_image(&self, delta: f64) -> f64 {
        let l = self.extent;
        delta - l * (delta / l).round()
    }

    /// Four-point Lagrange stencil around `p`, periodic in every axis.
    pub fn stencil(&self, p: &Point) -> Stencil {
        let n = self.points as i64;
        let dx = self.spacing();
        let mut st = Stencil {
            axes: self.axes,
            points: self.points,
            idx: [[0; 4]; MAX_AXES],
            w: [[0.0; 4]; MAX_AXES],
        };
        for a in 0..self.axes {
            let s = (p[a] - self.lower()) / dx;
            let j = s.floor();
            let u = s - j;
            let j = j as i64;
            for (k, off) in (-1..=2).enumerate() {
                st.idx[a][k] = (j + off).rem_euclid(n) as usize;
            }
            st.w[a] = cubic_weights(u);
        }
        st
    }
}

/// Lagrange weights for nodes at offsets -1, 0, 1, 2 evaluated at fraction `u`.
pub(crate) fn cubic_weights(u: f64) -> [f64; 4] {
    let um1 = u - 1.0;
    let um2 = u - 2.0;
    let up1 = u + 1.0;
    [
        -u * um1 * um2 / 6.0,
        up1 * um1 * um2 / 2.0,
        -up1 * u * um2 / 2.0,
        up1 * u * um1 / 6.0,
    ]
}

/// Tensor-product cubic interpolation stencil.
#[derive(Debug, Clone)]
pub struct Stencil {
    axes: usize,
    points: usize,
    idx: [[usize; 4]; MAX_AXES],
    w: [[f64; 4]; MAX_AXES],
}

impl Stencil {
    fn for_each(&self, mut f: impl FnMut(usize, f64)) {
        match self.axes {
            1 => {
                for k in 0..4 {
                    f(self.idx[0][k], self.w[0][k]);
                }
            }
            _ => {
                for k0 in 0..4 {
                    let row = self.idx[0][k0] * self.points;
                    for k1 in 0..4 {
                        f(row + self.idx[1][k1], self.w[0][k0] * self.w[1][k1]);
                    }
                }
            }
        }
    }

    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        self.for_each(|i, w| acc += w * values[i]);
        acc
    }

    pub fn apply_complex(&self, values: &[num_complex::Complex64]) -> num_complex::Complex64 {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        self.for_each(|i, w| acc += values[i] * w);
        acc
    }

    /// True when any node of the stencil is flagged.
    pub fn touches(&self, flags: &[bool]) -> bool {
        let mut hit = false;
        self.for_each(|i, _| hit |= flags[i]);
        hit
    }
}

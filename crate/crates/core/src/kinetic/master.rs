//! Master equation for `f_S` with a tabulated transition kernel.

use crate::ensemble::pairwise_sum;
use crate::grid::GridSpec;
use crate::{Error, Result};

/// Sign convention of the time derivative. `Backward` uses the kernel defined with
/// negative lag, which flips the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelDirection {
    Forward,
    Backward,
}

#[derive(Debug, Clone)]
pub struct TransitionKernel {
    grid: GridSpec,
    /// Row-major `K(x_i, x_j)`.
    values: Vec<f64>,
    stationary: Vec<f64>,
    direction: KernelDirection,
}

impl TransitionKernel {
    /// Checks `K ≥ 0` and that `g = 1` is stationary to `tolerance`.
    pub fn from_values(
        grid: GridSpec,
        values: Vec<f64>,
        rho: &[f64],
        tolerance: f64,
    ) -> Result<Self> {
        let n = grid.len();
        if grid.axes() != 1 || values.len() != n * n || rho.len() != n {
            return Err(Error::InvalidArgument(
                "kernel must be n×n on a line grid".into(),
            ));
        }
        if values.iter().any(|k| !(*k >= 0.0) || !k.is_finite()) {
            return Err(Error::InvalidArgument(
                "kernel entries must be finite and >= 0".into(),
            ));
        }
        let k = Self {
            grid,
            values,
            stationary: vec![1.0; n],
            direction: KernelDirection::Forward,
        };
        let res = k.stationarity_residual(rho);
        if res > tolerance {
            return Err(Error::InvalidArgument(format!(
                "g = 1 is not stationary for this kernel (residual {res:e})"
            )));
        }
        Ok(k)
    }

    /// `K(x,x') = rate · G_w(x−x') · |ψ(x)|²` with `G_w` a normalized Gaussian.
    /// The symmetric factor makes `g = 1` stationary for any `|ψ|²`.
    pub fn gaussian(grid: GridSpec, rho: &[f64], width: f64, rate: f64) -> Result<Self> {
        if !(width > 0.0) || !(rate >= 0.0) {
            return Err(Error::InvalidArgument(
                "width must be positive and rate >= 0".into(),
            ));
        }
        let n = grid.len();
        let norm = rate / (width * (2.0 * std::f64::consts::PI).sqrt());
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d = grid.min_image(grid.coordinate(i) - grid.coordinate(j)) / width;
                values[i * n + j] = norm * (-0.5 * d * d).exp() * rho[i];
            }
        }
        Self::from_values(grid, values, rho, 1e-9 * rate.max(1.0))
    }

    /// Diagonal kernel: every transition returns to its start.
    pub fn diagonal(grid: GridSpec, rates: &[f64], rho: &[f64]) -> Result<Self> {
        let n = grid.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n.min(rates.len()) {
            values[i * n + i] = rates[i];
        }
        Self::from_values(grid, values, rho, 1e-12)
    }

    pub fn reversed(&self) -> Self {
        let mut k = self.clone();
        k.direction = match self.direction {
            KernelDirection::Forward => KernelDirection::Backward,
            KernelDirection::Backward => KernelDirection::Forward,
        };
        k
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn direction(&self) -> KernelDirection {
        self.direction
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.len() + j]
    }

    /// Largest `|∂t g|` for the stored stationary solution.
    pub fn stationarity_residual(&self, rho: &[f64]) -> f64 {
        let rhs = master_rhs(&self.stationary, self, rho);
        rhs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `∂t f(x) = Σ_x' dx |ψ(x')|² [K(x,x') f(x')/|ψ(x)|² − K(x',x) f(x)/|ψ(x')|²]`.
pub fn master_rhs(f: &[f64], k: &TransitionKernel, rho: &[f64]) -> Vec<f64> {
    let n = k.grid.len();
    let dx = k.grid.spacing();
    let sign = match k.direction {
        KernelDirection::Forward => 1.0,
        KernelDirection::Backward => -1.0,
    };
    let mut row = vec![0.0; n];
    (0..n)
        .map(|i| {
            for j in 0..n {
                row[j] = k.value(i, j) * rho[j] * f[j] / rho[i] - k.value(j, i) * f[i];
            }
            sign * pairwise_sum(&row) * dx
        })
        .collect()
}

/// Explicit Euler over `dt`. When a negative value appears the step is retried as
/// `2^h` substeps, up to eight halvings.
pub fn master_step(f: &[f64], k: &TransitionKernel, rho: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = k.grid.len();
    if f.len() != n || rho.len() != n {
        return Err(Error::InvalidArgument(
            "field length does not match the kernel".into(),
        ));
    }
    if rho.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::InvalidArgument(
            "|ψ_S|² must be positive on the grid".into(),
        ));
    }
    'halving: for h in 0..=8u32 {
        let sub = 1usize << h;
        let h_dt = dt / sub as f64;
        let mut cur = f.to_vec();
        for _ in 0..sub {
            let rhs = master_rhs(&cur, k, rho);
            for (c, r) in cur.iter_mut().zip(&rhs) {
                *c += h_dt * r;
            }
            if cur.iter().any(|v| *v < 0.0) {
                continue 'halving;
            }
        }
        return Ok(cur);
    }
    Err(Error::NegativeDensity { halvings: 8 })
}

/// `H_r = ∫ |ψ|² f ln(f/g) dx`.
pub fn relative_entropy(f: &[f64], g: &[f64], rho: &[f64], dx: f64) -> f64 {
    let t: Vec<f64> = f
        .iter()
        .zip(g)
        .zip(rho)
        .map(|((&f, &g), &r)| if f > 0.0 { r * f * (f / g).ln() } else { 0.0 })
        .collect();
    pairwise_sum(&t) * dx
}

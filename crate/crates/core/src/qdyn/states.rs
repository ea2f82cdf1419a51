//! Initial-state recipes and closed-form reference solutions.

use num_complex::Complex64;

use super::WaveFunction;
use crate::grid::{GridSpec, Point};

/// Normalized plane wave `e^{i k·x}`; `k` should be a multiple of `2π/extent`.
pub fn plane_wave(grid: &GridSpec, k: Point) -> WaveFunction {
    WaveFunction::from_fn(grid, 0.0, |p| {
        let phase: f64 = (0..grid.axes()).map(|a| k[a] * p[a]).sum();
        Complex64::from_polar(1.0, phase)
    })
    .normalized()
}

/// Harmonic-oscillator ground state for each axis.
pub fn harmonic_ground_state(grid: &GridSpec, masses: &[f64], omega: &[f64]) -> WaveFunction {
    WaveFunction::from_fn(grid, 0.0, |p| {
        let e: f64 = (0..grid.axes())
            .map(|a| -0.5 * masses[a] * omega[a] * p[a] * p[a])
            .sum();
        Complex64::new(e.exp(), 0.0)
    })
    .normalized()
}

/// First excited state along axis 0 (node at the origin), ground state along the rest.
pub fn harmonic_first_excited(grid: &GridSpec, masses: &[f64], omega: &[f64]) -> WaveFunction {
    WaveFunction::from_fn(grid, 0.0, |p| {
        let e: f64 = (0..grid.axes())
            .map(|a| -0.5 * masses[a] * omega[a] * p[a] * p[a])
            .sum();
        Complex64::new(p[0] * e.exp(), 0.0)
    })
    .normalized()
}

/// `(x + i y)^winding e^{-(x²+y²)/2}` on a two-axis grid.
pub fn vortex(grid: &GridSpec, winding: u32) -> WaveFunction {
    WaveFunction::from_fn(grid, 0.0, |p| {
        let z = Complex64::new(p[0], p[1]);
        z.powu(winding) * (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp()
    })
    .normalized()
}

/// Free one-dimensional Gaussian packet whose density has standard deviation `sigma0` at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub sigma0: f64,
    pub mass: f64,
    pub center: f64,
    pub wavenumber: f64,
}

impl GaussianPacket {
    pub fn at_rest(sigma0: f64, mass: f64) -> Self {
        Self {
            sigma0,
            mass,
            center: 0.0,
            wavenumber: 0.0,
        }
    }

    fn reduced_time(&self, t: f64) -> f64 {
        t / (2.0 * self.mass * self.sigma0 * self.sigma0)
    }

    /// Density width `σ(t) = σ₀ √(1 + (t / 2mσ₀²)²)`.
    pub fn sigma(&self, t: f64) -> f64 {
        let tau = self.reduced_time(t);
        self.sigma0 * (1.0 + tau * tau).sqrt()
    }

    pub fn sigma_rate(&self, t: f64) -> f64 {
        let tau = self.reduced_time(t);
        self.sigma0 * tau / (1.0 + tau * tau).sqrt() / (2.0 * self.mass * self.sigma0 * self.sigma0)
    }

    pub fn group_velocity(&self) -> f64 {
        self.wavenumber / self.mass
    }

    /// Closed-form free evolution.
    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        let tau = self.reduced_time(t);
        let v = self.group_velocity();
        let s2 = self.sigma0 * self.sigma0;
        let denom = Complex64::new(1.0, tau);
        let xr = x - self.center - v * t;
        let pre = (2.0 * std::f64::consts::PI * s2).powf(-0.25) / denom.sqrt();
        let exponent =
            -xr * xr / (4.0 * s2 * denom) + Complex64::i() * self.wavenumber * (x - 0.5 * v * t);
        pre * exponent.exp()
    }

    /// Bohmian velocity of the packet.
    pub fn velocity(&self, x: f64, t: f64) -> f64 {
        let v = self.group_velocity();
        v + (x - self.center - v * t) * self.sigma_rate(t) / self.sigma(t)
    }

    /// Trajectory through `x0` at t = 0.
    pub fn trajectory(&self, x0: f64, t: f64) -> f64 {
        let v = self.group_velocity();
        self.center + v * t + (x0 - self.center) * self.sigma(t) / self.sigma0
    }

    pub fn born(&self, x: f64, t: f64) -> f64 {
        let s = self.sigma(t);
        let xr = x - self.center - self.group_velocity() * t;
        (-(xr * xr) / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s).sqrt()
    }

    pub fn wavefunction(&self, grid: &GridSpec, t: f64) -> WaveFunction {
        WaveFunction::from_fn(grid, t, |p| self.psi(p[0], t)).normalized()
    }
}

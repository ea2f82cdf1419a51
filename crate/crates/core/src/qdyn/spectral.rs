//! FFT-backed differentiation on periodic grids.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{GridSpec, Point, MAX_AXES};

/// Forward/inverse transforms and spectral derivatives for one grid shape.
#[derive(Clone)]
pub struct Spectral {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("grid", &self.grid)
            .finish()
    }
}

impl Spectral {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid: grid.clone(),
            forward: planner.plan_fft_forward(grid.points()),
            inverse: planner.plan_fft_inverse(grid.points()),
            k: grid.wavenumbers(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points();
        // rows are contiguous; process() handles every chunk of length n
        fft.process(data);
        if self.grid.axes() == 2 {
            let mut t = transpose(data, n);
            fft.process(&mut t);
            data.copy_from_slice(&transpose(&t, n));
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Normalized inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    /// Spectral multiplier `(i k_axis)^order` for every mode, Nyquist zeroed for odd orders.
    fn multiplier(&self, axis: usize, order: u32) -> impl Fn(usize) -> Complex64 + '_ {
        let n = self.grid.points();
        let axes = self.grid.axes();
        move |flat| {
            let j = match (axes, axis) {
                (1, _) => flat,
                (_, 0) => flat / n,
                _ => flat % n,
            };
            if order % 2 == 1 && j == n / 2 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(0.0, self.k[j]).powu(order)
        }
    }

    pub fn derivative(&self, values: &[Complex64], axis: usize, order: u32) -> Vec<Complex64> {
        let mut spec = values.to_vec();
        self.forward(&mut spec);
        self.apply_multiplier(&spec, axis, order)
    }

    fn apply_multiplier(&self, spec: &[Complex64], axis: usize, order: u32) -> Vec<Complex64> {
        let m = self.multiplier(axis, order);
        let mut out: Vec<Complex64> = spec.iter().enumerate().map(|(i, z)| z * m(i)).collect();
        self.inverse(&mut out);
        out
    }

    /// First three derivatives along every axis from one forward transform.
    pub fn derivatives(&self, values: &[Complex64]) -> Derivatives {
        let mut spec = values.to_vec();
        self.forward(&mut spec);
        let mut d = Derivatives::default();
        for a in 0..self.grid.axes() {
            d.first[a] = self.apply_multiplier(&spec, a, 1);
            d.second[a] = self.apply_multiplier(&spec, a, 2);
            d.third[a] = self.apply_multiplier(&spec, a, 3);
        }
        d
    }

    /// Fourier coefficients such that `values[j] = Σ_k c_k e^{i k (x_j − lower)}`.
    pub fn coefficients(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut spec = values.to_vec();
        self.forward(&mut spec);
        let scale = 1.0 / spec.len() as f64;
        spec.iter_mut().for_each(|z| *z *= scale);
        spec
    }

    /// Trigonometric interpolant of the field with coefficients `coeffs` at `p`. The
    /// Nyquist mode enters as a cosine.
    pub fn interpolate(&self, coeffs: &[Complex64], p: &Point) -> Complex64 {
        let b0 = self.basis(p[0]);
        match self.grid.axes() {
            1 => coeffs.iter().zip(&b0).map(|(c, b)| c * b).sum(),
            _ => {
                let n = self.grid.points();
                let b1 = self.basis(p[1]);
                (0..n)
                    .map(|i| {
                        let row: Complex64 = coeffs[i * n..(i + 1) * n]
                            .iter()
                            .zip(&b1)
                            .map(|(c, b)| c * b)
                            .sum();
                        row * b0[i]
                    })
                    .sum()
            }
        }
    }

    fn basis(&self, x: f64) -> Vec<Complex64> {
        let n = self.grid.points();
        let u = x - self.grid.lower();
        let step = Complex64::from_polar(1.0, self.k[1] * u);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let mut z = Complex64::new(1.0, 0.0);
        for j in 0..n / 2 {
            out[j] = z;
            if j > 0 {
                out[n - j] = z.conj();
            }
            z *= step;
        }
        out[n / 2] = Complex64::new(z.re, 0.0);
        out
    }

    /// Spectral derivative of a real field.
    pub fn derivative_real(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.derivative(&c, axis, 1)
            .into_iter()
            .map(|z| z.re)
            .collect()
    }
}

/// Per-axis spectral derivatives of a complex field.
#[derive(Debug, Clone, Default)]
pub struct Derivatives {
    pub first: [Vec<Complex64>; MAX_AXES],
    pub second: [Vec<Complex64>; MAX_AXES],
    pub third: [Vec<Complex64>; MAX_AXES],
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = data[i * n + j];
        }
    }
    out
}

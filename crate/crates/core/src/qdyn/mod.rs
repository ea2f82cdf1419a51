//! Wavefunctions on periodic grids, Schrödinger propagation and the Madelung fields
//! derived from them. Units have ħ = 1.

mod fields;
mod propagate;
pub mod snapshot;
mod spectral;
pub mod states;

pub use fields::{
    madelung_fields, node_mask, probability_current, quantum_potential, velocity_field,
    MadelungFields, ScalarField, VectorField, DEFAULT_NODE_EPSILON,
};
pub use propagate::{energy, propagate, Propagator, MAX_POTENTIAL_PHASE};
pub use spectral::{Derivatives, Spectral};

use num_complex::Complex64;

use crate::grid::{GridSpec, Point};
use crate::{Error, Result};

/// Complex amplitudes of Ψ on every grid node at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: GridSpec,
    amplitudes: Vec<Complex64>,
    time: f64,
}

impl WaveFunction {
    pub fn new(grid: GridSpec, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} amplitudes, got {}",
                grid.len(),
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidArgument("amplitudes must be finite".into()));
        }
        Ok(Self {
            grid,
            amplitudes,
            time,
        })
    }

    /// Samples `f` on every node. The result is not normalized.
    pub fn from_fn(grid: &GridSpec, time: f64, f: impl Fn(&Point) -> Complex64) -> Self {
        let amplitudes = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        Self {
            grid: grid.clone(),
            amplitudes,
            time,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub(crate) fn into_parts(self) -> (GridSpec, Vec<Complex64>, f64) {
        (self.grid, self.amplitudes, self.time)
    }

    /// ∫|Ψ|² over the grid.
    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn normalized(mut self) -> Self {
        let s = self.norm_squared().sqrt();
        self.amplitudes.iter_mut().for_each(|z| *z /= s);
        self
    }

    pub fn born_density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Shape of the external potential.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Free,
    /// `Σ ½ m_a ω_a² (x_a − c_a)²`.
    Harmonic {
        omega: Vec<f64>,
        center: Vec<f64>,
    },
    /// Infinite well on `[0, extent/2]` along every axis. Propagated as free motion of a
    /// wavefunction that is odd about 0 on the doubled periodic domain, so the walls
    /// at 0 and `extent/2` are exact nodes.
    Box,
    /// Node values on the grid.
    Tabulated(Vec<f64>),
}

/// Time-independent external potential together with the particle masses.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub kind: PotentialKind,
    pub masses: Vec<f64>,
}

impl Potential {
    pub fn free(masses: Vec<f64>) -> Self {
        Self {
            kind: PotentialKind::Free,
            masses,
        }
    }

    pub fn harmonic(omega: Vec<f64>, masses: Vec<f64>) -> Self {
        let center = vec![0.0; omega.len()];
        Self {
            kind: PotentialKind::Harmonic { omega, center },
            masses,
        }
    }

    pub fn harmonic_centered(omega: Vec<f64>, center: Vec<f64>, masses: Vec<f64>) -> Self {
        Self {
            kind: PotentialKind::Harmonic { omega, center },
            masses,
        }
    }

    pub fn box_well(masses: Vec<f64>) -> Self {
        Self {
            kind: PotentialKind::Box,
            masses,
        }
    }

    pub fn tabulated(values: Vec<f64>, masses: Vec<f64>) -> Self {
        Self {
            kind: PotentialKind::Tabulated(values),
            masses,
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let axes = grid.axes();
        if self.masses.len() != axes || self.masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need {axes} positive masses, got {:?}",
                self.masses
            )));
        }
        match &self.kind {
            PotentialKind::Harmonic { omega, center } => {
                if omega.len() != axes || center.len() != axes {
                    return Err(Error::InvalidArgument(
                        "harmonic potential needs one frequency and center per axis".into(),
                    ));
                }
            }
            PotentialKind::Tabulated(v) => {
                if v.len() != grid.len() || v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidArgument(
                        "tabulated potential must hold one finite value per node".into(),
                    ));
                }
            }
            PotentialKind::Free | PotentialKind::Box => {}
        }
        Ok(())
    }

    /// Potential at an arbitrary point. Tabulated potentials are interpolated.
    pub fn value_at(&self, grid: &GridSpec, p: &Point) -> f64 {
        match &self.kind {
            PotentialKind::Free | PotentialKind::Box => 0.0,
            PotentialKind::Harmonic { omega, center } => (0..grid.axes())
                .map(|a| 0.5 * self.masses[a] * omega[a] * omega[a] * (p[a] - center[a]).powi(2))
                .sum(),
            PotentialKind::Tabulated(v) => grid.stencil(p).apply(v),
        }
    }

    /// Gradient of the potential. Tabulated potentials are differentiated through their
    /// cubic interpolant.
    pub fn gradient_at(&self, grid: &GridSpec, p: &Point) -> Point {
        let mut g = [0.0; crate::grid::MAX_AXES];
        match &self.kind {
            PotentialKind::Free | PotentialKind::Box => {}
            PotentialKind::Harmonic { omega, center } => {
                for a in 0..grid.axes() {
                    g[a] = self.masses[a] * omega[a] * omega[a] * (p[a] - center[a]);
                }
            }
            PotentialKind::Tabulated(v) => {
                let h = 1e-4 * grid.spacing();
                for a in 0..grid.axes() {
                    let (mut lo, mut hi) = (*p, *p);
                    lo[a] -= h;
                    hi[a] += h;
                    g[a] = (grid.stencil(&hi).apply(v) - grid.stencil(&lo).apply(v)) / (2.0 * h);
                }
            }
        }
        g
    }

    pub fn sample(&self, grid: &GridSpec) -> Vec<f64> {
        match &self.kind {
            PotentialKind::Tabulated(v) => v.clone(),
            _ => (0..grid.len())
                .map(|i| self.value_at(grid, &grid.node(i)))
                .collect(),
        }
    }

    /// Tabulated sum of two potentials sharing the masses of `self`.
    pub fn plus(&self, other: &Potential, grid: &GridSpec) -> Potential {
        let a = self.sample(grid);
        let b = other.sample(grid);
        Potential::tabulated(
            a.iter().zip(&b).map(|(x, y)| x + y).collect(),
            self.masses.clone(),
        )
    }
}

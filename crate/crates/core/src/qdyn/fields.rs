//! Madelung fields computed from spectral derivatives of Ψ itself. The phase S is never
//! unwrapped: every quantity goes through ratios like ∇Ψ/Ψ.

use num_complex::Complex64;

use super::{Derivatives, Spectral, WaveFunction};
use crate::grid::GridSpec;

/// Relative threshold on |Ψ|² below which a node is flagged.
pub const DEFAULT_NODE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: GridSpec,
    pub components: Vec<Vec<f64>>,
    pub node: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub node: Vec<bool>,
}

/// Everything the guidance layer needs from one snapshot.
#[derive(Debug, Clone)]
pub struct MadelungFields {
    pub velocity: Vec<Vec<f64>>,
    /// Σ_a ∂_a v_a.
    pub divergence: Vec<f64>,
    pub quantum_potential: Vec<f64>,
    pub grad_quantum_potential: Vec<Vec<f64>>,
    pub node: Vec<bool>,
}

pub fn node_mask(psi: &WaveFunction, node_epsilon: f64) -> Vec<bool> {
    let rho = psi.born_density();
    let max = rho.iter().cloned().fold(0.0, f64::max);
    rho.iter().map(|&r| r < node_epsilon * max).collect()
}

pub fn velocity_field(psi: &WaveFunction, masses: &[f64], node_epsilon: f64) -> VectorField {
    let spectral = Spectral::new(psi.grid());
    let grid = psi.grid();
    let node = node_mask(psi, node_epsilon);
    let a = psi.amplitudes();
    let components = (0..grid.axes())
        .map(|ax| {
            let d = spectral.derivative(a, ax, 1);
            (0..grid.len())
                .map(|i| {
                    if node[i] {
                        0.0
                    } else {
                        (d[i] / a[i]).im / masses[ax]
                    }
                })
                .collect()
        })
        .collect();
    VectorField {
        grid: grid.clone(),
        components,
        node,
    }
}

/// `Q = −Σ (1/2m) ∇²a / a`, evaluated through `∇²a/a = Re(∇²Ψ/Ψ) + Im(∇Ψ/Ψ)²`.
pub fn quantum_potential(psi: &WaveFunction, masses: &[f64], node_epsilon: f64) -> ScalarField {
    let f = madelung_fields(psi, masses, node_epsilon, &Spectral::new(psi.grid()));
    ScalarField {
        grid: psi.grid().clone(),
        values: f.quantum_potential,
        node: f.node,
    }
}

/// Probability current `Im(Ψ* ∇Ψ)/m`, finite everywhere including nodes.
pub fn probability_current(psi: &WaveFunction, masses: &[f64]) -> Vec<Vec<f64>> {
    let spectral = Spectral::new(psi.grid());
    let a = psi.amplitudes();
    (0..psi.grid().axes())
        .map(|ax| {
            let d = spectral.derivative(a, ax, 1);
            a.iter()
                .zip(&d)
                .map(|(z, dz)| (z.conj() * dz).im / masses[ax])
                .collect()
        })
        .collect()
}

pub fn madelung_fields(
    psi: &WaveFunction,
    masses: &[f64],
    node_epsilon: f64,
    spectral: &Spectral,
) -> MadelungFields {
    let grid = psi.grid();
    let axes = grid.axes();
    let n = grid.len();
    let a = psi.amplitudes();
    let node = node_mask(psi, node_epsilon);
    let d: Derivatives = spectral.derivatives(a);
    let mut velocity = vec![vec![0.0; n]; axes];
    let mut divergence = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        if node[i] {
            continue;
        }
        let inv = Complex64::new(1.0, 0.0) / a[i];
        for ax in 0..axes {
            let m = masses[ax];
            let r = d.first[ax][i] * inv;
            let s = d.second[ax][i] * inv;
            velocity[ax][i] = r.im / m;
            divergence[i] += (s - r * r).im / m;
            q[i] -= (s.re + r.im * r.im) / (2.0 * m);
        }
    }
    let grad_quantum_potential = (0..axes).map(|ax| central_gradient(grid, &q, ax)).collect();
    MadelungFields {
        velocity,
        divergence,
        quantum_potential: q,
        grad_quantum_potential,
        node,
    }
}

/// Fourth-order periodic central difference along one axis.
pub(crate) fn central_gradient(grid: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.points();
    let h = grid.spacing();
    (0..grid.len())
        .map(|i| {
            let mut idx = grid.unflatten(i);
            let j = idx[axis];
            let mut at = |off: i64| {
                idx[axis] = (j as i64 + off).rem_euclid(n as i64) as usize;
                f[grid.flatten(idx)]
            };
            (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
        })
        .collect()
}

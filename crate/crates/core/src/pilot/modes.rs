//! Closed-form guidance for a particle in a one-dimensional infinite well.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::{FieldSample, GuidingField};
use crate::grid::{GridSpec, Point, MAX_AXES};
use crate::qdyn::{WaveFunction, DEFAULT_NODE_EPSILON};
use crate::{Error, Result};

/// `Ψ(x,t) = Σ c_n √(2/W) sin(nπx/W) e^{−iE_n t}` on `[0, W]` with `E_n = (nπ/W)²/2m`.
///
/// Every evaluation costs one `sin_cos` pair for space and one for time; the remaining
/// harmonics come from angle-addition recurrences.
#[derive(Debug, Clone)]
pub struct BoxModes {
    width: f64,
    masses: [f64; 1],
    /// Dense coefficients indexed by `n − 1`.
    coefficients: Vec<Complex64>,
    node_threshold: f64,
    node_epsilon: f64,
}

impl BoxModes {
    /// `modes` pairs a quantum number `n ≥ 1` with its amplitude. The amplitudes are
    /// normalized.
    pub fn new(width: f64, mass: f64, modes: &[(usize, Complex64)]) -> Result<Self> {
        if !(width > 0.0) || !(mass > 0.0) {
            return Err(Error::InvalidArgument(
                "width and mass must be positive".into(),
            ));
        }
        let n_max = modes.iter().map(|m| m.0).max().unwrap_or(0);
        if n_max == 0 || modes.iter().any(|m| m.0 == 0) {
            return Err(Error::InvalidArgument("quantum numbers start at 1".into()));
        }
        let mut coefficients = vec![Complex64::new(0.0, 0.0); n_max];
        for &(n, c) in modes {
            coefficients[n - 1] += c;
        }
        let norm: f64 = coefficients
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument(
                "mode amplitudes must not all vanish".into(),
            ));
        }
        coefficients.iter_mut().for_each(|c| *c /= norm);
        let mut out = Self {
            width,
            masses: [mass],
            coefficients,
            node_threshold: 0.0,
            node_epsilon: DEFAULT_NODE_EPSILON,
        };
        out.set_node_epsilon(DEFAULT_NODE_EPSILON);
        Ok(out)
    }

    /// Modes `1..=count` with equal weights and the given phases.
    pub fn equal_weights(width: f64, mass: f64, phases: &[f64]) -> Result<Self> {
        let modes: Vec<_> = phases
            .iter()
            .enumerate()
            .map(|(i, &p)| (i + 1, Complex64::from_polar(1.0, p)))
            .collect();
        Self::new(width, mass, &modes)
    }

    /// Nodes are flagged where |Ψ|² falls below `eps` times the bound `(Σ|c_n|)² 2/W`.
    pub fn set_node_epsilon(&mut self, eps: f64) {
        let l1: f64 = self.coefficients.iter().map(|c| c.norm()).sum();
        self.node_epsilon = eps;
        self.node_threshold = eps * l1 * l1 * 2.0 / self.width;
    }

    pub fn node_epsilon(&self) -> f64 {
        self.node_epsilon
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn ground_energy(&self) -> f64 {
        let k = PI / self.width;
        k * k / (2.0 * self.masses[0])
    }

    /// Revival time `2π/E₁`, after which every mode has returned to its initial phase.
    pub fn period(&self) -> f64 {
        TAU / self.ground_energy()
    }

    /// Largest value |Ψ|² can take.
    pub fn density_bound(&self) -> f64 {
        self.node_threshold / self.node_epsilon
    }

    /// Ψ and its first three x-derivatives.
    pub fn derivatives(&self, x: f64, t: f64) -> [Complex64; 4] {
        let k1 = PI / self.width;
        let (s1, c1) = (k1 * x).sin_cos();
        let phi = (self.ground_energy() * t).rem_euclid(TAU);
        let e1 = Complex64::from_polar(1.0, -phi);
        let e2 = e1 * e1;
        let scale = (2.0 / self.width).sqrt();
        let mut acc = [Complex64::new(0.0, 0.0); 4];
        // sin/cos of nθ and e^{-i n² φ}, advanced together
        let (mut s, mut c) = (s1, c1);
        let (mut s_prev, mut c_prev) = (0.0, 1.0);
        let mut z = e1;
        let mut ratio = e1 * e2;
        for (i, &cn) in self.coefficients.iter().enumerate() {
            if cn.re != 0.0 || cn.im != 0.0 {
                let k = k1 * (i + 1) as f64;
                let a = cn * z * scale;
                acc[0] += a * s;
                acc[1] += a * (k * c);
                acc[2] -= a * (k * k * s);
                acc[3] -= a * (k * k * k * c);
            }
            let s_next = 2.0 * c1 * s - s_prev;
            let c_next = 2.0 * c1 * c - c_prev;
            s_prev = s;
            c_prev = c;
            s = s_next;
            c = c_next;
            z *= ratio;
            ratio *= e2;
        }
        acc
    }

    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        self.derivatives(x, t)[0]
    }

    /// Samples Ψ on a periodic grid of extent `2W`; the odd extension about 0 is the
    /// box-well representation used by the propagator.
    pub fn wavefunction(&self, grid: &GridSpec, t: f64) -> WaveFunction {
        WaveFunction::from_fn(grid, t, |p| self.psi(p[0], t))
    }
}

impl GuidingField for BoxModes {
    fn axes(&self) -> usize {
        1
    }

    fn masses(&self) -> &[f64] {
        &self.masses
    }

    fn bounds(&self) -> (Point, Point) {
        ([0.0; MAX_AXES], [self.width, 0.0])
    }

    fn periodic(&self) -> bool {
        false
    }

    fn time_range(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn sample(&self, x: &Point, t: f64) -> FieldSample {
        let [psi, d1, d2, d3] = self.derivatives(x[0], t);
        let m = self.masses[0];
        let mut out = FieldSample {
            psi,
            velocity: [0.0; MAX_AXES],
            divergence: 0.0,
            quantum_potential: 0.0,
            grad_quantum_potential: [0.0; MAX_AXES],
            potential: 0.0,
            grad_potential: [0.0; MAX_AXES],
            near_node: psi.norm_sqr() < self.node_threshold,
        };
        if out.near_node {
            return out;
        }
        let r = d1 / psi;
        let s = d2 / psi;
        let dr = s - r * r;
        let ds = d3 / psi - s * r;
        out.velocity[0] = r.im / m;
        out.divergence = dr.im / m;
        out.quantum_potential = -(s.re + r.im * r.im) / (2.0 * m);
        out.grad_quantum_potential[0] = -(ds.re + 2.0 * r.im * dr.im) / (2.0 * m);
        out
    }
}

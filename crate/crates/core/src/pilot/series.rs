//! Guidance from propagated grid snapshots: cubic in space, linear in time.

use num_complex::Complex64;

use super::{FieldSample, GuidingField};
use crate::grid::{GridSpec, Point, Stencil, MAX_AXES};
use crate::qdyn::{madelung_fields, Potential, Propagator, Spectral, WaveFunction};
use crate::{Error, Result};

#[derive(Debug, Clone)]
struct Frame {
    psi: Vec<Complex64>,
    spectrum: Vec<Complex64>,
    velocity: Vec<Vec<f64>>,
    divergence: Vec<f64>,
    quantum_potential: Vec<f64>,
    grad_quantum_potential: Vec<Vec<f64>>,
    node: Vec<bool>,
}

/// Snapshots of Ψ on a uniform time mesh with their Madelung fields precomputed.
#[derive(Debug, Clone)]
pub struct GridSeries {
    grid: GridSpec,
    potential: Potential,
    spectral: Spectral,
    t0: f64,
    dt: f64,
    frames: Vec<Frame>,
}

impl GridSeries {
    pub fn new(
        snapshots: &[WaveFunction],
        potential: Potential,
        node_epsilon: f64,
    ) -> Result<Self> {
        if snapshots.len() < 2 {
            return Err(Error::InvalidArgument(
                "a series needs at least two snapshots".into(),
            ));
        }
        let grid = snapshots[0].grid().clone();
        potential.validate(&grid)?;
        let t0 = snapshots[0].time();
        let dt = snapshots[1].time() - t0;
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(
                "snapshot times must increase".into(),
            ));
        }
        for (k, s) in snapshots.iter().enumerate() {
            if s.grid() != &grid {
                return Err(Error::InvalidArgument(format!(
                    "snapshot {k} is on a different grid"
                )));
            }
            let expected = t0 + k as f64 * dt;
            if (s.time() - expected).abs() > 1e-9 * dt.max(expected.abs()) {
                return Err(Error::InvalidArgument(format!(
                    "snapshot {k} at t = {} breaks the uniform time mesh",
                    s.time()
                )));
            }
        }
        let spectral = Spectral::new(&grid);
        let frames = snapshots
            .iter()
            .map(|s| {
                let f = madelung_fields(s, &potential.masses, node_epsilon, &spectral);
                Frame {
                    psi: s.amplitudes().to_vec(),
                    spectrum: spectral.coefficients(s.amplitudes()),
                    velocity: f.velocity,
                    divergence: f.divergence,
                    quantum_potential: f.quantum_potential,
                    grad_quantum_potential: f.grad_quantum_potential,
                    node: f.node,
                }
            })
            .collect();
        Ok(Self {
            grid,
            potential,
            spectral,
            t0,
            dt,
            frames,
        })
    }

    /// Propagates `psi0` and keeps every `every`-th step.
    pub fn from_propagation(
        psi0: &WaveFunction,
        potential: Potential,
        dt: f64,
        steps: usize,
        every: usize,
        node_epsilon: f64,
    ) -> Result<Self> {
        let prop = Propagator::new(psi0.grid(), &potential, dt)?;
        let snaps = prop.run(psi0, steps, every)?;
        Self::new(&snaps, potential, node_epsilon)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn snapshot_time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Stored snapshot `k`.
    pub fn snapshot(&self, k: usize) -> WaveFunction {
        WaveFunction::new(
            self.grid.clone(),
            self.frames[k].psi.clone(),
            self.snapshot_time(k),
        )
        .expect("stored frames are valid")
    }

    fn bracket(&self, t: f64) -> (usize, f64) {
        let last = self.frames.len() - 1;
        let s = ((t - self.t0) / self.dt).clamp(0.0, last as f64);
        let k = (s.floor() as usize).min(last - 1);
        (k, s - k as f64)
    }

    fn frame_sample(&self, frame: &Frame, st: &Stencil, out: &mut FieldSample, w: f64) {
        out.psi += st.apply_complex(&frame.psi) * w;
        for a in 0..self.grid.axes() {
            out.velocity[a] += w * st.apply(&frame.velocity[a]);
            out.grad_quantum_potential[a] += w * st.apply(&frame.grad_quantum_potential[a]);
        }
        out.divergence += w * st.apply(&frame.divergence);
        out.quantum_potential += w * st.apply(&frame.quantum_potential);
        out.near_node |= st.touches(&frame.node);
    }
}

impl GuidingField for GridSeries {
    fn axes(&self) -> usize {
        self.grid.axes()
    }

    fn masses(&self) -> &[f64] {
        &self.potential.masses
    }

    fn bounds(&self) -> (Point, Point) {
        let mut lo = [0.0; MAX_AXES];
        let mut hi = [0.0; MAX_AXES];
        for a in 0..self.grid.axes() {
            lo[a] = self.grid.lower();
            hi[a] = self.grid.lower() + self.grid.extent();
        }
        (lo, hi)
    }

    fn periodic(&self) -> bool {
        true
    }

    fn time_range(&self) -> (f64, f64) {
        (self.t0, self.snapshot_time(self.frames.len() - 1))
    }

    /// Trigonometric interpolation in space. In time the modulus is interpolated
    /// linearly and the phase along the shorter arc, so a rotating phase does not
    /// pull `|psi|` down between snapshots.
    fn psi_at(&self, x: &Point, t: f64) -> Complex64 {
        let (k, w) = self.bracket(t);
        let a = self.spectral.interpolate(&self.frames[k].spectrum, x);
        if w == 0.0 {
            return a;
        }
        let b = self.spectral.interpolate(&self.frames[k + 1].spectrum, x);
        if w == 1.0 || a.norm() == 0.0 || b.norm() == 0.0 {
            return a * (1.0 - w) + b * w;
        }
        let modulus = a.norm() * (1.0 - w) + b.norm() * w;
        let turn = (b / a).arg();
        Complex64::from_polar(modulus, a.arg() + w * turn)
    }

    fn sample(&self, x: &Point, t: f64) -> FieldSample {
        let (k, w) = self.bracket(t);
        let st = self.grid.stencil(x);
        let mut out = FieldSample {
            psi: Complex64::new(0.0, 0.0),
            velocity: [0.0; MAX_AXES],
            divergence: 0.0,
            quantum_potential: 0.0,
            grad_quantum_potential: [0.0; MAX_AXES],
            potential: self.potential.value_at(&self.grid, x),
            grad_potential: self.potential.gradient_at(&self.grid, x),
            near_node: false,
        };
        if w < 1.0 {
            self.frame_sample(&self.frames[k], &st, &mut out, 1.0 - w);
        }
        if w > 0.0 {
            self.frame_sample(&self.frames[k + 1], &st, &mut out, w);
        }
        out
    }
}

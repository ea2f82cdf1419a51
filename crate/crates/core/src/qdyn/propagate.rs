use num_complex::Complex64;

use super::{Potential, Spectral, WaveFunction};
use crate::grid::GridSpec;
use crate::{Error, Result};

/// Largest potential phase spread `(max V − min V)·dt` accepted per step, in radians.
pub const MAX_POTENTIAL_PHASE: f64 = 0.1;

/// Symmetric split-step propagator: half kinetic, full potential, half kinetic.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: GridSpec,
    dt: f64,
    spectral: Spectral,
    kinetic_half: Vec<Complex64>,
    potential_phase: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid: &GridSpec, potential: &Potential, dt: f64) -> Result<Self> {
        potential.validate(grid)?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let v = potential.sample(grid);
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        let spread = hi - lo;
        if spread * dt > MAX_POTENTIAL_PHASE {
            return Err(Error::StabilityBound {
                dt,
                bound: MAX_POTENTIAL_PHASE / spread,
                bound_name: "potential phase",
            });
        }
        let spectral = Spectral::new(grid);
        let kinetic = kinetic_energies(grid, &potential.masses, spectral.wavenumbers());
        let kinetic_half = kinetic
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -0.5 * e * dt))
            .collect();
        let potential_phase = v
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * dt))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            dt,
            spectral,
            kinetic_half,
            potential_phase,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        self.advance(psi.clone(), 1)
    }

    fn advance(&self, psi: WaveFunction, step: usize) -> Result<WaveFunction> {
        if psi.grid() != &self.grid {
            return Err(Error::InvalidArgument(
                "wavefunction grid does not match propagator".into(),
            ));
        }
        let (grid, mut a, t) = psi.into_parts();
        self.spectral.forward(&mut a);
        a.iter_mut()
            .zip(&self.kinetic_half)
            .for_each(|(z, p)| *z *= p);
        self.spectral.inverse(&mut a);
        a.iter_mut()
            .zip(&self.potential_phase)
            .for_each(|(z, p)| *z *= p);
        self.spectral.forward(&mut a);
        a.iter_mut()
            .zip(&self.kinetic_half)
            .for_each(|(z, p)| *z *= p);
        self.spectral.inverse(&mut a);
        let time = t + self.dt;
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::PropagationDiverged { step, time });
        }
        Ok(WaveFunction {
            grid,
            amplitudes: a,
            time,
        })
    }

    /// Runs `steps` steps and keeps every `every`-th snapshot, the initial state included.
    pub fn run(
        &self,
        psi0: &WaveFunction,
        steps: usize,
        every: usize,
    ) -> Result<Vec<WaveFunction>> {
        let every = every.max(1);
        let mut out = Vec::with_capacity(steps / every + 1);
        out.push(psi0.clone());
        let mut psi = psi0.clone();
        for s in 1..=steps {
            psi = self.advance(psi, s)?;
            if s % every == 0 {
                out.push(psi.clone());
            }
        }
        Ok(out)
    }
}

fn kinetic_energies(grid: &GridSpec, masses: &[f64], k: &[f64]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let idx = grid.unflatten(i);
            (0..grid.axes())
                .map(|a| k[idx[a]] * k[idx[a]] / (2.0 * masses[a]))
                .sum()
        })
        .collect()
}

/// One split-step of length `dt`.
pub fn propagate(psi: &WaveFunction, potential: &Potential, dt: f64) -> Result<WaveFunction> {
    Propagator::new(psi.grid(), potential, dt)?.step(psi)
}

/// Expectation value of the Hamiltonian, normalized by ∫|Ψ|².
pub fn energy(psi: &WaveFunction, potential: &Potential) -> f64 {
    let grid = psi.grid();
    let spectral = Spectral::new(grid);
    let mut spec = psi.amplitudes().to_vec();
    spectral.forward(&mut spec);
    let kinetic = kinetic_energies(grid, &potential.masses, spectral.wavenumbers());
    let n = grid.len() as f64;
    let t: f64 = spec
        .iter()
        .zip(&kinetic)
        .map(|(z, e)| z.norm_sqr() * e)
        .sum::<f64>()
        / n;
    let v = potential.sample(grid);
    let u: f64 = psi
        .amplitudes()
        .iter()
        .zip(&v)
        .map(|(z, e)| z.norm_sqr() * e)
        .sum();
    let norm: f64 = psi.amplitudes().iter().map(|z| z.norm_sqr()).sum();
    (t + u) / norm
}

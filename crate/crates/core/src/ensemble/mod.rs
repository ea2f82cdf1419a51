//! Position ensembles out of quantum equilibrium.
//!
//! The density ratio `f = ρ/|Ψ|²` is constant along trajectories, so each point carries
//! the value it was born with and `f` at any later point is recovered by integrating the
//! trajectory back to the birth time. Histograms over coarse cells are kept for the
//! coarse-grained diagnostics only.

mod coarse;
mod density;

pub use coarse::{coarse_report, h_functions, CoarseGrid, CoarseReport, HFunctions};
pub use density::{Density, DensityFn};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::grid::{Point, MAX_AXES};
use crate::pilot::{flow_endpoint, GridSeries, GuidingField, IntegratorConfig};
use crate::qdyn::{Potential, WaveFunction};
use crate::{Error, Result};

/// Smallest envelope acceptance rate tolerated by rejection sampling.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub axes: usize,
    pub positions: Vec<Point>,
    /// `ρ₀/|Ψ|²` at birth, one per point.
    pub f0: Vec<f64>,
    pub birth_time: f64,
    /// Time the positions refer to.
    pub time: f64,
    pub seed: u64,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Fine-grained `H = ∫ρ ln f`, estimated as the ensemble mean of `ln f₀`.
    pub fn h_fine(&self) -> f64 {
        let logs: Vec<f64> = self.f0.iter().map(|f| f.ln()).collect();
        pairwise_sum(&logs) / self.len() as f64
    }
}

/// Sums in a fixed binary tree so the result does not depend on how work was split.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn f0_at<F: GuidingField + ?Sized>(
    rho0: &dyn Density,
    field: &F,
    x: &Point,
    t: f64,
) -> Option<f64> {
    let born = field.density(x, t);
    let f = rho0.eval(x) / born;
    (f.is_finite() && f > 0.0).then_some(f)
}

/// Rejection sampling of `rho0` against a uniform envelope over its support.
///
/// Points where `f₀` would be zero or not finite (a node of Ψ) are never returned.
pub fn sample_density<F: GuidingField + ?Sized>(
    rho0: &dyn Density,
    field: &F,
    birth_time: f64,
    n: usize,
    seed: u64,
) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "an ensemble needs at least one point".into(),
        ));
    }
    let axes = field.axes();
    let (lo, hi) = rho0.support();
    let bound = rho0.upper_bound();
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(Error::InvalidArgument(
            "density bound must be positive and finite".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    let mut f0 = Vec::with_capacity(n);
    let mut attempts: u64 = 0;
    while positions.len() < n {
        attempts += 1;
        let mut x = [0.0; MAX_AXES];
        for a in 0..axes {
            x[a] = rng.random_range(lo[a]..hi[a]);
        }
        let r = rho0.eval(&x);
        if r > bound * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "density {r} exceeds its declared bound {bound}"
            )));
        }
        if rng.random::<f64>() * bound < r {
            if let Some(f) = f0_at(rho0, field, &x, birth_time) {
                positions.push(x);
                f0.push(f);
            }
        }
        if attempts >= 100_000 && attempts % 100_000 == 0 {
            let rate = positions.len() as f64 / attempts as f64;
            if rate < MIN_ACCEPTANCE {
                return Err(Error::SamplingInefficient { rate });
            }
        }
    }
    Ok(Ensemble {
        axes,
        positions,
        f0,
        birth_time,
        time: birth_time,
        seed,
    })
}

/// One-axis sampling by inverting the piecewise-linear CDF of `rho0` tabulated on
/// `bins` intervals. Suited to sharply peaked densities where rejection is wasteful.
pub fn sample_tabulated<F: GuidingField + ?Sized>(
    rho0: &dyn Density,
    field: &F,
    birth_time: f64,
    n: usize,
    bins: usize,
    seed: u64,
) -> Result<Ensemble> {
    if field.axes() != 1 || bins < 2 || n == 0 {
        return Err(Error::InvalidArgument(
            "tabulated sampling needs one axis, at least two bins and one point".into(),
        ));
    }
    let (lo, hi) = rho0.support();
    let h = (hi[0] - lo[0]) / bins as f64;
    let nodes: Vec<f64> = (0..=bins)
        .map(|j| rho0.eval(&[lo[0] + j as f64 * h, 0.0]))
        .collect();
    let mut cdf = vec![0.0; bins + 1];
    for j in 0..bins {
        cdf[j + 1] = cdf[j] + 0.5 * h * (nodes[j] + nodes[j + 1]);
    }
    let total = cdf[bins];
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("density integrates to zero".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    let mut f0 = Vec::with_capacity(n);
    while positions.len() < n {
        let u = rng.random::<f64>() * total;
        let j = cdf.partition_point(|&c| c <= u).clamp(1, bins) - 1;
        // invert the quadratic CDF piece of a linear density
        let (a, b) = (nodes[j], nodes[j + 1]);
        let target = u - cdf[j];
        let slope = (b - a) / h;
        let s = if slope.abs() < 1e-14 * (a + b).max(1e-300) {
            target / a
        } else {
            ((a * a + 2.0 * slope * target).max(0.0).sqrt() - a) / slope
        };
        let x = [lo[0] + j as f64 * h + s.clamp(0.0, h), 0.0];
        if let Some(f) = f0_at(rho0, field, &x, birth_time) {
            positions.push(x);
            f0.push(f);
        }
    }
    Ok(Ensemble {
        axes: 1,
        positions,
        f0,
        birth_time,
        time: birth_time,
        seed,
    })
}

/// Result of moving an ensemble forward in time.
#[derive(Debug, Clone)]
pub struct Evolved {
    /// Surviving points, in their original order.
    pub ensemble: Ensemble,
    /// Indices, into the input ensemble, of points whose trajectories were truncated.
    pub truncated: Vec<usize>,
}

/// Advances every point to `t1`. `f₀` is carried unchanged.
pub fn evolve_ensemble<F: GuidingField + ?Sized>(
    e: &Ensemble,
    field: &F,
    t1: f64,
    cfg: IntegratorConfig,
) -> Result<Evolved> {
    let results: Vec<Result<Point>> = e
        .positions
        .par_iter()
        .map(|x| flow_endpoint(field, x, e.time, t1, cfg).map(|end| end.position))
        .collect();
    let mut out = Ensemble {
        axes: e.axes,
        positions: Vec::with_capacity(e.len()),
        f0: Vec::with_capacity(e.len()),
        birth_time: e.birth_time,
        time: t1,
        seed: e.seed,
    };
    let mut truncated = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(x) => {
                out.positions.push(x);
                out.f0.push(e.f0[i]);
            }
            Err(Error::TrajectoryTruncated { .. }) => truncated.push(i),
            Err(other) => return Err(other),
        }
    }
    Ok(Evolved {
        ensemble: out,
        truncated,
    })
}

/// `f` at `(x, t)` by integrating back to `birth_time` and reading `ρ₀/|Ψ|²` at the
/// footpoint.
pub fn f_exact<F: GuidingField + ?Sized>(
    x: &Point,
    t: f64,
    field: &F,
    rho0: &dyn Density,
    birth_time: f64,
    cfg: IntegratorConfig,
) -> Result<f64> {
    let foot = flow_endpoint(field, x, t, birth_time, cfg)?;
    Ok(rho0.eval(&foot.position) / field.density(&foot.position, birth_time))
}

/// Coarse deviation of an equilibrium ensemble over a run under a perturbed potential.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    /// `max_α |f̄_α − 1|` at each time.
    pub max_deviation: Vec<f64>,
    /// `max_α |f̄_α − 1| √count_α / 5` at each time; values below 1 are at noise level.
    pub noise_ratio: Vec<f64>,
    pub truncated: usize,
}

impl StabilityReport {
    pub fn worst_deviation(&self) -> f64 {
        self.max_deviation.iter().cloned().fold(0.0, f64::max)
    }

    pub fn worst_noise_ratio(&self) -> f64 {
        self.noise_ratio.iter().cloned().fold(0.0, f64::max)
    }
}

/// Propagates `psi0` under `V + δV` and moves `e` with the perturbed flow, recording the
/// coarse deviation of `f` from 1 every `every` propagation steps.
#[allow(clippy::too_many_arguments)]
pub fn equilibrium_stability(
    psi0: &WaveFunction,
    potential: &Potential,
    perturbation: &Potential,
    e: &Ensemble,
    cg: &CoarseGrid,
    dt: f64,
    steps: usize,
    every: usize,
    cfg: IntegratorConfig,
) -> Result<StabilityReport> {
    let grid = psi0.grid();
    let total = potential.plus(perturbation, grid);
    let series = GridSeries::from_propagation(
        psi0,
        total,
        dt,
        steps,
        every,
        crate::qdyn::DEFAULT_NODE_EPSILON,
    )?;
    let mut current = e.clone();
    let mut report = StabilityReport {
        times: Vec::new(),
        max_deviation: Vec::new(),
        noise_ratio: Vec::new(),
        truncated: 0,
    };
    for k in 0..series.len() {
        let t = series.snapshot_time(k);
        if k > 0 {
            let ev = evolve_ensemble(&current, &series, t, cfg)?;
            report.truncated += ev.truncated.len();
            current = ev.ensemble;
        }
        let c = coarse_report(&current, &series, cg, t)?;
        report.times.push(t);
        report.max_deviation.push(c.max_deviation());
        report.noise_ratio.push(c.noise_ratio());
    }
    Ok(report)
}

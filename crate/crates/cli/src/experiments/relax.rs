//! Coarse-grained relaxation of an ensemble in a one-dimensional box.

use std::f64::consts::TAU;

use pilotwave::ensemble::{evolve_ensemble, h_functions, sample_density, CoarseGrid, DensityFn};
use pilotwave::pilot::{BoxModes, GuidingField, IntegratorConfig};
use pilotwave::table::Table;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Checker, Invalid};
use crate::plot::{LinePlot, Series};
use crate::report::{CliError, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Birth {
    /// `ρ₀ = |Ψ(x, 0)|²`.
    Born,
    /// `ρ₀ = 1/L` on the box.
    Uniform,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxConfig {
    pub width: f64,
    pub mass: f64,
    /// Number of equal-weight modes `n = 1..=modes`.
    pub modes: usize,
    /// Phases per mode. Empty means drawn from the scenario seed.
    pub phases: Vec<f64>,
    pub birth: Birth,
    pub particles: usize,
    pub cells: usize,
    /// Run length in units of the revival period `2π/E₁`.
    pub periods: f64,
    pub outputs: usize,
    pub step: f64,
    pub max_displacement: f64,
    /// Largest tolerated fraction of points dropped at nodes.
    pub max_dropped_fraction: f64,
    /// Optional bound on `max |f̄−1|·√count/5`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_noise_ratio: Option<f64>,
    /// Optional least fractional drop `1 − H_end/H₀`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_h_drop: Option<f64>,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            width: 1.0,
            mass: 1.0,
            modes: 2,
            phases: Vec::new(),
            birth: Birth::Uniform,
            particles: 20_000,
            cells: 32,
            periods: 1.0,
            outputs: 20,
            step: 2e-3,
            max_displacement: 0.01,
            max_dropped_fraction: 1e-3,
            max_noise_ratio: None,
            min_h_drop: None,
        }
    }
}

impl RelaxConfig {
    pub fn validate(&self) -> Vec<Invalid> {
        let mut c = Checker::new("relax");
        c.positive("width", self.width);
        c.positive("mass", self.mass);
        c.at_least("modes", self.modes, 1);
        c.require(
            self.phases.is_empty() || self.phases.len() == self.modes,
            "phases",
            "must be empty or list one phase per mode",
        );
        c.at_least("particles", self.particles, 100);
        c.at_least("cells", self.cells, 1);
        c.positive("periods", self.periods);
        c.at_least("outputs", self.outputs, 1);
        c.positive("step", self.step);
        c.positive("max_displacement", self.max_displacement);
        c.require(
            (0.0..=1.0).contains(&self.max_dropped_fraction),
            "max_dropped_fraction",
            "must lie in [0, 1]",
        );
        if let Some(v) = self.max_noise_ratio {
            c.positive("max_noise_ratio", v);
        }
        if let Some(v) = self.min_h_drop {
            c.require(v > 0.0 && v <= 1.0, "min_h_drop", "must lie in (0, 1]");
        }
        c.found
    }
}

pub fn run(cfg: &RelaxConfig, seed: u64, report: &mut Report) -> Result<(), CliError> {
    let phases = if cfg.phases.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..cfg.modes).map(|_| rng.random::<f64>() * TAU).collect()
    } else {
        cfg.phases.clone()
    };
    let b = BoxModes::equal_weights(cfg.width, cfg.mass, &phases)?;
    let rho0 = match cfg.birth {
        Birth::Uniform => DensityFn::uniform(1, [0.0, 0.0], [cfg.width, 0.0]),
        Birth::Born => {
            let field = b.clone();
            DensityFn::new([0.0, 0.0], [cfg.width, 0.0], b.density_bound(), move |x| {
                field.density(x, 0.0)
            })
        }
    };
    let mut e = sample_density(&rho0, &b, 0.0, cfg.particles, seed)?;
    let cg = CoarseGrid::new(1, [0.0, 0.0], [cfg.width, 0.0], cfg.cells)?;
    let integrator = IntegratorConfig::new(cfg.step).with_max_displacement(cfg.max_displacement);
    let period = b.period();
    let end = cfg.periods * period;

    let mut series = Table::new([
        "t",
        "t_over_period",
        "H_coarse",
        "H_fine",
        "max_dev",
        "noise_ratio",
        "points",
    ]);
    series.comment("units", "t in hbar=1 time units; H dimensionless");
    series.comment("period", period);
    let mut lost = 0;
    let mut worst_noise: f64 = 0.0;
    let mut h = h_functions(&e, &b, &cg)?;
    let h0 = h.h_coarse;
    let mut negative_h = h0.min(0.0);
    let mut push = |t: f64, h: &pilotwave::ensemble::HFunctions, n: usize| {
        let _ = series.push(vec![
            t,
            t / period,
            h.h_coarse,
            h.h_fine,
            h.coarse.max_deviation(),
            h.coarse.noise_ratio(),
            n as f64,
        ]);
    };
    push(0.0, &h, e.len());
    for k in 1..=cfg.outputs {
        let t = end * k as f64 / cfg.outputs as f64;
        let ev = evolve_ensemble(&e, &b, t, integrator)?;
        lost += ev.truncated.len();
        e = ev.ensemble;
        h = h_functions(&e, &b, &cg)?;
        worst_noise = worst_noise.max(h.coarse.noise_ratio());
        negative_h = negative_h.min(h.h_coarse);
        if h.coarse.outside > 0 {
            report.warn(format!(
                "{} points outside the box at t = {t:.4}",
                h.coarse.outside
            ));
        }
        push(t, &h, e.len());
    }

    let mut cells = Table::new(["x_center", "count", "gamma", "f_bar"]);
    cells.comment(
        "units",
        "x in box-width units of length; gamma is the Born weight of the cell",
    );
    cells.comment("time", end);
    let dx = cfg.width / cfg.cells as f64;
    for a in 0..cfg.cells {
        let _ = cells.push(vec![
            (a as f64 + 0.5) * dx,
            h.coarse.counts[a] as f64,
            h.coarse.gammas[a],
            h.coarse.f_bar[a],
        ]);
    }

    let t_over: Vec<f64> = series.column("t_over_period").unwrap_or_default();
    let hc = series.column("H_coarse").unwrap_or_default();
    let hf = series.column("H_fine").unwrap_or_default();
    let plot = LinePlot::new("Coarse-grained H", "t / period", "H")
        .with(Series::line(
            "H coarse",
            t_over.iter().copied().zip(hc.iter().copied()).collect(),
        ))
        .with(Series::line(
            "H fine",
            t_over.iter().copied().zip(hf).collect(),
        ));
    report.table(
        "h_coarse.txt",
        "coarse-grained and fine-grained H per output time",
        &series,
    )?;
    report.table(
        "cells_final.txt",
        "per-cell counts and f̄ at the final time",
        &cells,
    )?;
    report.plot("h_coarse.svg", &plot)?;

    let dropped = lost as f64 / cfg.particles as f64;
    if lost > 0 {
        report.warn(format!("{lost} points dropped at nodes"));
    }
    report.check(
        "dropped_fraction",
        dropped <= cfg.max_dropped_fraction,
        format!(
            "{lost} of {} dropped, fraction {dropped:.2e}, limit {:.1e}",
            cfg.particles, cfg.max_dropped_fraction
        ),
    );
    // Gibbs: a relative entropy of normalized cell weights cannot be negative.
    report.check(
        "h_coarse_nonnegative",
        negative_h > -1e-12,
        format!(
            "smallest H_coarse {:.3e}",
            hc.iter().copied().fold(f64::INFINITY, f64::min)
        ),
    );
    if let Some(bound) = cfg.max_noise_ratio {
        report.check(
            "equilibrium_noise",
            worst_noise < bound,
            format!("max noise ratio {worst_noise:.3} < {bound}"),
        );
    }
    if let Some(min_drop) = cfg.min_h_drop {
        let h_end = hc.last().copied().unwrap_or(h0);
        let drop = if h0 > 0.0 { 1.0 - h_end / h0 } else { 0.0 };
        report.check(
            "h_coarse_drop",
            drop >= min_drop,
            format!("H {h0:.4} → {h_end:.4}, drop {drop:.3} ≥ {min_drop}"),
        );
    }
    Ok(())
}

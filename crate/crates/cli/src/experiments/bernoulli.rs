//! Perron-Frobenius iteration of the doubling map and Bernoulli-mode decay rates.

use pilotwave::chaosmap::{
    coefficient_table, collision_check, decay_rate_fit, iterate_table, pf_step, UnitDensity,
    MAX_MODES,
};
use pilotwave::table::Table;
use serde::{Deserialize, Serialize};

use crate::config::{Checker, Invalid};
use crate::plot::{LinePlot, Series};
use crate::report::{CliError, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    /// `∝ exp(a y)`.
    Exp,
    /// `1 + a (y − ½)`.
    Linear,
    /// `2` on `[0, ½)`, `0` after.
    Step,
    /// `1 + Σ c_m B_m(y)` with `c` from `coefficients`.
    Modes,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BernoulliConfig {
    pub cells: usize,
    pub modes: usize,
    pub steps: usize,
    pub initial: Initial,
    pub amplitude: f64,
    pub coefficients: Vec<f64>,
    /// Modes `1..=check_modes` must reproduce `m ln 2` within `rate_tolerance`.
    pub check_modes: usize,
    pub rate_tolerance: f64,
    pub dump_iterates: usize,
    /// Cycle time for the relaxation-time check; omitted to skip it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collision_tau0: Option<f64>,
}

impl Default for BernoulliConfig {
    fn default() -> Self {
        Self {
            cells: pilotwave::chaosmap::DEFAULT_CELLS,
            modes: pilotwave::chaosmap::DEFAULT_MODES,
            steps: 12,
            initial: Initial::Exp,
            amplitude: 1.0,
            coefficients: Vec::new(),
            check_modes: 4,
            rate_tolerance: 0.01,
            dump_iterates: 4,
            collision_tau0: None,
        }
    }
}

impl BernoulliConfig {
    pub fn validate(&self) -> Vec<Invalid> {
        let mut c = Checker::new("bernoulli");
        c.require(
            self.cells >= 8 && self.cells % 2 == 0,
            "cells",
            "must be even and at least 8",
        );
        c.require(
            (1..=MAX_MODES).contains(&self.modes),
            "modes",
            &format!("must lie in 1..={MAX_MODES}"),
        );
        c.at_least("steps", self.steps, 4);
        c.require(
            self.check_modes <= self.modes,
            "check_modes",
            "cannot exceed modes",
        );
        c.positive("rate_tolerance", self.rate_tolerance);
        match self.initial {
            Initial::Exp => c.require(
                self.amplitude.is_finite() && self.amplitude != 0.0,
                "amplitude",
                "must be non-zero",
            ),
            Initial::Linear => c.require(
                self.amplitude.abs() <= 2.0 && self.amplitude != 0.0,
                "amplitude",
                "must be non-zero with |a| ≤ 2",
            ),
            Initial::Modes => c.require(
                !self.coefficients.is_empty() && self.coefficients.len() <= MAX_MODES,
                "coefficients",
                &format!("must list 1..={MAX_MODES} coefficients"),
            ),
            Initial::Step => {}
        }
        if let Some(t) = self.collision_tau0 {
            c.positive("collision_tau0", t);
        }
        c.found
    }

    fn initial_density(&self) -> pilotwave::Result<UnitDensity> {
        let a = self.amplitude;
        match self.initial {
            Initial::Exp => UnitDensity::from_fn(self.cells, self.modes, |y| (a * y).exp()),
            Initial::Linear => {
                UnitDensity::from_fn(self.cells, self.modes, |y| 1.0 + a * (y - 0.5))
            }
            Initial::Step => {
                let half = self.cells / 2;
                UnitDensity::new(
                    (0..self.cells)
                        .map(|j| if j < half { 2.0 } else { 0.0 })
                        .collect(),
                    self.modes,
                )
            }
            Initial::Modes => UnitDensity::from_modes(self.cells, &self.coefficients),
        }
    }
}

pub fn run(cfg: &BernoulliConfig, report: &mut Report) -> Result<(), CliError> {
    let rho0 = cfg.initial_density()?;
    let fit = decay_rate_fit(&rho0, cfg.steps, cfg.modes)?;

    let mut rates = Table::new(["m", "rate", "expected", "relative_error", "points"]);
    rates.comment(
        "units",
        "rates per iteration of the map; expected is m ln 2",
    );
    for r in &fit.rates {
        let _ = rates.push(vec![
            r.mode as f64,
            r.rate,
            r.expected,
            r.relative_error(),
            r.points as f64,
        ]);
    }
    for (m, why) in &fit.skipped {
        rates.comment(&format!("skipped {m}"), why);
        if *m <= cfg.check_modes {
            report.warn(format!("mode {m}: {why}"));
        }
    }
    report.table("rates.txt", "fitted decay rate per Bernoulli mode", &rates)?;
    let mut coeffs = coefficient_table(&fit);
    coeffs.comment(
        "units",
        "coefficients of B_m in the density, per iteration n",
    );
    report.table(
        "coefficients.txt",
        "Bernoulli coefficients per iterate",
        &coeffs,
    )?;
    let mut iterates = iterate_table(&rho0, cfg.dump_iterates);
    iterates.comment("units", "y on [0,1); rho is a cell average");
    report.table(
        "iterates.txt",
        "density after each of the first iterates",
        &iterates,
    )?;

    let mut plot = LinePlot::new("Bernoulli coefficient decay", "n", "|C_m|").log_y();
    for m in 1..=cfg
        .modes
        .min(fit.history.first().map_or(0, |c| c.len().saturating_sub(1)))
    {
        let pts = fit
            .history
            .iter()
            .enumerate()
            .map(|(n, c)| (n as f64, c[m].abs()))
            .collect();
        plot = plot.with(Series::line(format!("m = {m}"), pts));
    }
    report.plot("coefficients.svg", &plot)?;
    let mut dens = LinePlot::new("Perron-Frobenius iterates", "y", "rho");
    let mut rho = rho0.clone();
    for n in 0..=cfg.dump_iterates {
        dens = dens.with(Series::line(
            format!("n = {n}"),
            rho.centers()
                .into_iter()
                .zip(rho.values().iter().copied())
                .collect(),
        ));
        rho = pf_step(&rho);
    }
    report.plot("iterates.svg", &dens)?;

    let mut bad = Vec::new();
    for m in 1..=cfg.check_modes {
        match fit.mode(m) {
            Some(r) if r.relative_error() <= cfg.rate_tolerance => {}
            Some(r) => bad.push(format!("m={m}: {:.3}% off", 100.0 * r.relative_error())),
            None => bad.push(format!("m={m}: not fitted")),
        }
    }
    report.check(
        "decay_rates",
        bad.is_empty(),
        format!(
            "modes 1..={} within {:.1}% of m ln 2 [{}]",
            cfg.check_modes,
            100.0 * cfg.rate_tolerance,
            bad.join(", ")
        ),
    );
    let mass = rho.values().iter().sum::<f64>() / rho.cells() as f64;
    report.check(
        "mass_conserved",
        (mass - 1.0).abs() < 1e-12,
        format!("mean density {mass:.15}"),
    );
    if let Some(tau0) = cfg.collision_tau0 {
        let mut late = rho0.clone();
        for _ in 0..10 {
            late = pf_step(&late);
        }
        let c = collision_check(tau0, &late)?;
        let mut t = Table::new(["tau0", "tau", "residual"]);
        t.comment("units", "times in map iterations");
        let _ = t.push(vec![tau0, c.tau, c.residual]);
        report.table("collision.txt", "relaxation-time form of one late step", &t)?;
        let scale = late.distance_from_uniform();
        report.check(
            "collision_relation",
            c.residual <= 0.05 * scale.max(f64::MIN_POSITIVE),
            format!(
                "τ = {:.4}, residual {:.2e} against ‖ρ−1‖ = {scale:.2e}",
                c.tau, c.residual
            ),
        );
    }
    Ok(())
}

//! Chebyshev concentration of multinomial occupations and the most probable complexion.

use pilotwave::table::Table;
use pilotwave::typicality::{
    boltzmann_optimum, chebyshev_experiment, complexion_log_weight, relative_width, CellPartition,
    Complexion,
};
use serde::{Deserialize, Serialize};

use crate::config::{Checker, Invalid};
use crate::plot::{LinePlot, Series};
use crate::report::{CliError, Report};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TypicalityConfig {
    /// Cell weights Γ_α; normalized before use.
    pub gammas: Vec<f64>,
    pub totals: Vec<u64>,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    /// Totals `1..=exhaustive_max_total` are checked against full enumeration.
    pub exhaustive_max_total: u64,
}

impl Default for TypicalityConfig {
    fn default() -> Self {
        Self {
            gammas: vec![0.1, 0.2, 0.3, 0.4],
            totals: vec![100, 1000],
            epsilons: vec![1.0, 2.0],
            trials: 10_000,
            exhaustive_max_total: 12,
        }
    }
}

impl TypicalityConfig {
    pub fn validate(&self) -> Vec<Invalid> {
        let mut c = Checker::new("typicality");
        c.require(
            !self.gammas.is_empty() && self.gammas.iter().all(|g| *g > 0.0),
            "gammas",
            "must be a non-empty list of positive weights",
        );
        c.require(
            !self.totals.is_empty() && self.totals.iter().all(|m| *m > 0),
            "totals",
            "must be a non-empty list of positive totals",
        );
        c.require(
            !self.epsilons.is_empty() && self.epsilons.iter().all(|e| *e > 0.0),
            "epsilons",
            "tolerances must be positive",
        );
        c.at_least("trials", self.trials, 100);
        c.require(
            self.exhaustive_max_total <= 20 && self.gammas.len() <= 6,
            "exhaustive_max_total",
            "enumeration is limited to totals ≤ 20 over at most 6 cells",
        );
        c.found
    }
}

pub fn run(cfg: &TypicalityConfig, seed: u64, report: &mut Report) -> Result<(), CliError> {
    let p = CellPartition::normalized(&cfg.gammas)?;

    let mut optima = Table::new(["M", "alpha", "continuous", "integer", "relative_width"]);
    optima.comment("units", "occupations are point counts");
    let mut mismatches = Vec::new();
    for total in 1..=cfg.exhaustive_max_total {
        let opt = boltzmann_optimum(&p, total)?;
        let widths = relative_width(&p, total);
        for a in 0..p.cell_count() {
            let _ = optima.push(vec![
                total as f64,
                a as f64,
                opt.continuous[a],
                opt.integer.occupations()[a] as f64,
                widths[a],
            ]);
        }
        let best = Complexion::enumerate(p.cell_count(), total)
            .iter()
            .map(|c| complexion_log_weight(c, &p))
            .collect::<pilotwave::Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        if complexion_log_weight(&opt.integer, &p)? < best - 1e-12 * best.abs().max(1.0) {
            mismatches.push(total);
        }
    }

    let mut cheb = Table::new([
        "M",
        "epsilon",
        "alpha",
        "fraction",
        "standard_error",
        "bound",
    ]);
    cheb.comment(
        "units",
        "epsilon in units of the binomial standard deviation",
    );
    cheb.comment("trials", cfg.trials);
    let mut violations = Vec::new();
    let mut plot = LinePlot::new("Chebyshev tail fraction", "M", "fraction").log_y();
    for &eps in &cfg.epsilons {
        let mut measured = Vec::new();
        let mut bound = Vec::new();
        for &m in &cfg.totals {
            let mut worst: f64 = 0.0;
            for a in 0..p.cell_count() {
                let r =
                    chebyshev_experiment(&p, m, eps, a, cfg.trials, seed ^ (m << 8) ^ a as u64)?;
                let _ = cheb.push(vec![
                    m as f64,
                    eps,
                    a as f64,
                    r.fraction,
                    r.standard_error,
                    r.bound,
                ]);
                if !r.satisfied() {
                    violations.push(format!("M={m} ε={eps} α={a}"));
                }
                worst = worst.max(r.fraction);
                if a == 0 {
                    bound.push((m as f64, r.bound));
                }
            }
            measured.push((m as f64, worst));
        }
        plot = plot
            .with(Series::markers(format!("max fraction ε={eps}"), measured))
            .with(Series::line(format!("bound ε={eps}"), bound));
    }
    report.table(
        "optimum.txt",
        "most probable occupations against enumeration",
        &optima,
    )?;
    report.table(
        "chebyshev.txt",
        "empirical tail fractions and the 1/(ε²M) bound",
        &cheb,
    )?;
    report.plot("chebyshev.svg", &plot)?;

    report.check(
        "boltzmann_optimum",
        mismatches.is_empty(),
        format!(
            "totals 1..={} enumerated, mismatches at {mismatches:?}",
            cfg.exhaustive_max_total
        ),
    );
    report.check(
        "chebyshev_bound",
        violations.is_empty(),
        format!("violations: [{}]", violations.join(", ")),
    );
    Ok(())
}

//! Additivity of candidate probability laws and the exponent test on a spreading packet.

use pilotwave::functional::{
    destouches_exponent_test, dirichlet_sets, gleason_residual, CandidateG,
};
use pilotwave::pilot::{integrate_trajectory, GridSeries, IntegratorConfig, Trajectory};
use pilotwave::qdyn::states::GaussianPacket;
use pilotwave::qdyn::{Potential, DEFAULT_NODE_EPSILON};
use pilotwave::table::Table;
use pilotwave::GridSpec;
use serde::{Deserialize, Serialize};

use crate::config::{Checker, Invalid};
use crate::plot::{LinePlot, Series};
use crate::report::{CliError, Report};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FunctionalConfig {
    pub sets: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub concentration: f64,
    /// `power:P`, `linear:A:B` or `tabulated:v0,v1,...`.
    pub candidates: Vec<String>,
    pub linear_tolerance: f64,
    pub nonlinear_threshold: f64,
    pub exponents: Vec<f64>,
    pub sigma0: f64,
    pub mass: f64,
    pub points: usize,
    pub extent: f64,
    pub dt: f64,
    pub t_end: f64,
    pub starts: Vec<f64>,
    /// Least `drift(A)/drift(2)` for every `A ≠ 2`.
    pub ratio_threshold: f64,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        Self {
            sets: 1000,
            min_size: 2,
            max_size: 8,
            concentration: 1.0,
            candidates: ["linear:1:0", "power:2", "power:0.5", "linear:1:0.1"]
                .map(String::from)
                .to_vec(),
            linear_tolerance: 1e-12,
            nonlinear_threshold: 0.01,
            exponents: vec![1.0, 1.5, 2.0, 3.0, 4.0],
            sigma0: 1.0,
            mass: 1.0,
            points: 512,
            extent: 40.0,
            dt: 0.01,
            t_end: 2.0,
            starts: (0..9).map(|i| -2.0 + 0.5 * i as f64).collect(),
            ratio_threshold: 100.0,
        }
    }
}

pub fn parse_candidate(s: &str) -> Result<CandidateG, String> {
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{v}` is not a number"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["power", p] => Ok(CandidateG::Power(num(p)?)),
        ["linear", a, b] => Ok(CandidateG::Linear {
            a: num(a)?,
            b: num(b)?,
        }),
        ["tabulated", vals] => {
            let v = vals.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            Ok(CandidateG::Tabulated(v))
        }
        _ => Err(format!(
            "`{s}` is not power:P, linear:A:B or tabulated:v0,v1,..."
        )),
    }
}

/// Additive laws: `A x` with no offset, or `x¹`.
fn is_additive(g: &CandidateG) -> bool {
    match g {
        CandidateG::Power(p) => *p == 1.0,
        CandidateG::Linear { b, .. } => *b == 0.0,
        CandidateG::Tabulated(_) => false,
    }
}

impl FunctionalConfig {
    pub fn validate(&self) -> Vec<Invalid> {
        let mut c = Checker::new("functional");
        c.at_least("sets", self.sets, 1);
        c.at_least("min_size", self.min_size, 2);
        c.require(
            self.max_size >= self.min_size,
            "max_size",
            "must be at least min_size",
        );
        c.positive("concentration", self.concentration);
        c.require(
            !self.candidates.is_empty(),
            "candidates",
            "must list at least one law",
        );
        for s in &self.candidates {
            if let Err(e) = parse_candidate(s) {
                c.require(false, "candidates", &e);
            }
        }
        c.positive("linear_tolerance", self.linear_tolerance);
        c.positive("nonlinear_threshold", self.nonlinear_threshold);
        c.require(
            self.exponents.contains(&2.0),
            "exponents",
            "must include the reference exponent 2",
        );
        c.positive("sigma0", self.sigma0);
        c.positive("mass", self.mass);
        c.require(
            self.points >= 8 && self.points % 2 == 0,
            "points",
            "must be even and at least 8",
        );
        c.positive("extent", self.extent);
        c.positive("dt", self.dt);
        c.positive("t_end", self.t_end);
        c.require(
            !self.starts.is_empty(),
            "starts",
            "must list at least one start point",
        );
        c.positive("ratio_threshold", self.ratio_threshold);
        c.found
    }
}

pub fn run(cfg: &FunctionalConfig, seed: u64, report: &mut Report) -> Result<(), CliError> {
    let sets = dirichlet_sets(
        cfg.sets,
        cfg.min_size..=cfg.max_size,
        cfg.concentration,
        seed,
    )?;
    let mut gleason = Table::new(["candidate", "additive", "residual"]);
    gleason.comment("units", "residual is max |g(Σc) − Σg(c)|, dimensionless");
    let mut linear_worst: f64 = 0.0;
    let mut nonlinear_best = f64::INFINITY;
    let mut labels = Vec::new();
    for (k, s) in cfg.candidates.iter().enumerate() {
        let g = parse_candidate(s).map_err(CliError::Config)?;
        let r = gleason_residual(&g, &sets)?;
        let additive = is_additive(&g);
        gleason.comment(&format!("candidate {k}"), g.label());
        let _ = gleason.push(vec![k as f64, if additive { 1.0 } else { 0.0 }, r]);
        labels.push(format!("{}: {r:.3e}", g.label()));
        if additive {
            linear_worst = linear_worst.max(r);
        } else {
            nonlinear_best = nonlinear_best.min(r);
        }
    }
    report.table(
        "gleason.txt",
        "additivity residual per candidate law",
        &gleason,
    )?;

    let grid = GridSpec::line(cfg.points, cfg.extent)?;
    let packet = GaussianPacket {
        sigma0: cfg.sigma0,
        mass: cfg.mass,
        center: 0.0,
        wavenumber: 0.0,
    };
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let series = GridSeries::from_propagation(
        &packet.wavefunction(&grid, 0.0),
        Potential::free(vec![cfg.mass]),
        cfg.dt,
        steps,
        1,
        DEFAULT_NODE_EPSILON,
    )?;
    let t_end = steps as f64 * cfg.dt;
    let bundle: Vec<Trajectory> = cfg
        .starts
        .iter()
        .map(|&x| {
            integrate_trajectory(
                &series,
                &[x, 0.0],
                0.0,
                t_end,
                IntegratorConfig::new(cfg.dt),
            )
        })
        .collect::<pilotwave::Result<_>>()?;
    let reports: Vec<_> = cfg
        .exponents
        .iter()
        .map(|&a| destouches_exponent_test(&series, a, &bundle))
        .collect();
    let base = reports
        .iter()
        .find(|r| r.exponent == 2.0)
        .map_or(f64::EPSILON, |r| r.max_drift.max(f64::EPSILON));
    let mut table = Table::new([
        "A",
        "max_drift",
        "transport_drift",
        "max_divergence_integral",
        "ratio_to_A2",
    ]);
    table.comment(
        "units",
        "drifts of |Ψ|^(A−2) along trajectories, dimensionless",
    );
    let mut worst_ratio = f64::INFINITY;
    for r in &reports {
        let ratio = r.max_drift / base;
        let _ = table.push(vec![
            r.exponent,
            r.max_drift,
            r.transport_drift,
            r.max_divergence_integral,
            ratio,
        ]);
        if r.exponent != 2.0 {
            worst_ratio = worst_ratio.min(ratio);
        }
        if let Some(w) = &r.warning {
            report.warn(format!("A = {}: {w}", r.exponent));
        }
    }
    report.table(
        "destouches.txt",
        "exponent test on the spreading Gaussian",
        &table,
    )?;
    let plot = LinePlot::new("Drift of |Ψ|^(A−2) along trajectories", "A", "max drift")
        .log_y()
        .with(Series::markers(
            "max drift",
            reports
                .iter()
                .map(|r| (r.exponent, r.max_drift.max(1e-300)))
                .collect(),
        ));
    report.plot("destouches.svg", &plot)?;

    report.check(
        "gleason_additive",
        linear_worst < cfg.linear_tolerance,
        format!(
            "largest residual of additive laws {linear_worst:.2e} < {:.0e}",
            cfg.linear_tolerance
        ),
    );
    if nonlinear_best.is_finite() {
        report.check(
            "gleason_nonadditive",
            nonlinear_best > cfg.nonlinear_threshold,
            format!(
                "smallest residual of other laws {nonlinear_best:.3e} > {}; {}",
                cfg.nonlinear_threshold,
                labels.join(", ")
            ),
        );
    }
    if worst_ratio.is_finite() {
        report.check(
            "destouches_ratio",
            worst_ratio > cfg.ratio_threshold,
            format!(
                "min drift(A)/drift(2) = {worst_ratio:.3e} > {}",
                cfg.ratio_threshold
            ),
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidates_parse() {
        assert_eq!(parse_candidate("power:2"), Ok(CandidateG::Power(2.0)));
        assert_eq!(
            parse_candidate("linear:1:0.1"),
            Ok(CandidateG::Linear { a: 1.0, b: 0.1 })
        );
        assert_eq!(
            parse_candidate("tabulated:0,0.5,1"),
            Ok(CandidateG::Tabulated(vec![0.0, 0.5, 1.0]))
        );
        assert!(parse_candidate("cubic").is_err());
        assert!(parse_candidate("power:x").is_err());
    }
}

//! Reduced Fokker-Planck relaxation and the Gaussian-kernel master equation.

use std::f64::consts::TAU;

use pilotwave::kinetic::{
    dissipation, fp_step, h_valentini_rate, master_step, relative_entropy, relax_reduced, FpConfig,
    FpRecord, ReducedField, TransitionKernel,
};
use pilotwave::table::Table;
use pilotwave::GridSpec;
use serde::{Deserialize, Serialize};

use crate::config::{Checker, Invalid};
use crate::plot::{LinePlot, Series};
use crate::report::{CliError, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    FokkerPlanck,
    Master,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticConfig {
    pub model: Model,
    pub points: usize,
    pub extent: f64,
    /// Marginal `|ψ_S|² ∝ exp(κ cos(2πx/L))`.
    pub kappa: f64,
    pub diffusion: f64,
    /// Time step. Zero picks `cfl · dx²/(2D)` for the Fokker-Planck model.
    pub dt: f64,
    pub cfl: f64,
    pub steps: usize,
    pub record_every: usize,
    /// Initial `f = 1 + a sin(2qx) + b exp(−x²)` before normalization.
    pub perturbation: f64,
    pub bump: f64,
    pub kernel_width: f64,
    pub kernel_rate: f64,
    pub rate_tolerance: f64,
    /// Master model: required `H_r(end)/H_r(0)`.
    pub max_entropy_ratio: f64,
}

impl Default for KineticConfig {
    fn default() -> Self {
        Self {
            model: Model::FokkerPlanck,
            points: 256,
            extent: 16.0,
            kappa: 1.0,
            diffusion: pilotwave::kinetic::DEFAULT_DIFFUSION,
            dt: 0.0,
            cfl: 0.4,
            steps: 4000,
            record_every: 1,
            perturbation: 0.45,
            bump: 0.3,
            kernel_width: 1.0,
            kernel_rate: 5.0,
            rate_tolerance: 0.05,
            max_entropy_ratio: 1e-4,
        }
    }
}

impl KineticConfig {
    pub fn validate(&self) -> Vec<Invalid> {
        let mut c = Checker::new("kinetic");
        c.require(
            self.points >= 8 && self.points % 2 == 0,
            "points",
            "must be even and at least 8",
        );
        c.positive("extent", self.extent);
        c.require(
            self.kappa.is_finite() && self.kappa >= 0.0,
            "kappa",
            "must be non-negative",
        );
        c.require(
            self.dt >= 0.0 && self.dt.is_finite(),
            "dt",
            "must be non-negative (0 selects the CFL step)",
        );
        c.require(
            self.cfl > 0.0 && self.cfl <= 1.0,
            "cfl",
            "must lie in (0, 1]",
        );
        c.at_least("steps", self.steps, 1);
        c.at_least("record_every", self.record_every, 1);
        c.require(
            self.perturbation.abs() + self.bump.abs() < 1.0,
            "perturbation",
            "|perturbation| + |bump| must stay below 1 so f starts positive",
        );
        c.positive("rate_tolerance", self.rate_tolerance);
        match self.model {
            Model::FokkerPlanck => c.positive("diffusion", self.diffusion),
            Model::Master => {
                c.positive("kernel_width", self.kernel_width);
                c.positive("kernel_rate", self.kernel_rate);
                c.positive("dt", self.dt);
                c.positive("max_entropy_ratio", self.max_entropy_ratio);
            }
        }
        c.found
    }
}

fn marginal(g: &GridSpec, kappa: f64) -> (Vec<f64>, f64) {
    let q = TAU / g.extent();
    let w: Vec<f64> = g
        .coordinates()
        .iter()
        .map(|x| (kappa * (q * x).cos()).exp())
        .collect();
    let z: f64 = w.iter().sum::<f64>() * g.spacing();
    (w.iter().map(|v| v / z).collect(), q)
}

pub fn run(cfg: &KineticConfig, report: &mut Report) -> Result<(), CliError> {
    let g = GridSpec::line(cfg.points, cfg.extent)?;
    let (rho, q) = marginal(&g, cfg.kappa);
    let f0: Vec<f64> = g
        .coordinates()
        .iter()
        .map(|x| 1.0 + cfg.perturbation * (2.0 * q * x).sin() + cfg.bump * (-x * x).exp())
        .collect();
    match cfg.model {
        Model::FokkerPlanck => fokker_planck(cfg, &g, &rho, q, f0, report),
        Model::Master => master(cfg, &g, &rho, f0, report),
    }
}

fn fokker_planck(
    cfg: &KineticConfig,
    g: &GridSpec,
    rho: &[f64],
    q: f64,
    f0: Vec<f64>,
    report: &mut Report,
) -> Result<(), CliError> {
    let d = cfg.diffusion;
    // osmotic drift that keeps the marginal stationary
    let vbar: Vec<f64> = g
        .coordinates()
        .iter()
        .map(|x| -d * cfg.kappa * q * (q * x).sin())
        .collect();
    let dt = if cfg.dt > 0.0 {
        cfg.dt
    } else {
        cfg.cfl * g.spacing().powi(2) / (2.0 * d)
    };

    let mut eq = ReducedField::equilibrium(g.clone(), d, rho)?;
    let mut floor: f64 = 0.0;
    for _ in 0..50 {
        let next = fp_step(&eq, &vbar, rho, dt)?;
        floor = floor.max(h_valentini_rate(&eq, &next, rho)?.measured.abs());
        eq = next;
    }
    let floor = floor.max(f64::EPSILON * (g.len() as f64).sqrt() / dt);

    let r0 = ReducedField::normalized(g.clone(), f0, 0.0, d, rho)?;
    let fp = FpConfig {
        dt,
        steps: cfg.steps,
        refresh_stride: cfg.steps,
        record_every: cfg.record_every,
    };
    let (end, records) = relax_reduced(&r0, |_| Ok((vbar.clone(), rho.to_vec())), &fp)?;

    let mut series = FpRecord::table(&records);
    series.comment(
        "units",
        "t in hbar=1 time units; H and rates dimensionless per unit time",
    );
    series.comment("dt", dt);
    series.comment("numerical_floor", floor);
    report.table(
        "h_series.txt",
        "H, measured dH/dt and the dissipation integral",
        &series,
    )?;
    let mut field = Table::new(["x", "rho", "f0", "f_end"]);
    field.comment("units", "x in length units; rho per unit length");
    for (i, x) in g.coordinates().iter().enumerate() {
        let _ = field.push(vec![*x, rho[i], r0.values[i], end.values[i]]);
    }
    report.table(
        "field.txt",
        "marginal and initial and final density ratio",
        &field,
    )?;
    let plot = LinePlot::new("Reduced H-function", "t", "H")
        .log_y()
        .with(Series::line(
            "H",
            records.iter().map(|r| (r.time, r.h)).collect(),
        ));
    report.plot("h_series.svg", &plot)?;
    let rates = LinePlot::new("H rate identity", "t", "|dH/dt|")
        .log_y()
        .with(Series::line(
            "measured",
            records.iter().map(|r| (r.time, r.dh_dt.abs())).collect(),
        ))
        .with(Series::line(
            "−D∫ρ(∇f)²/f",
            records.iter().map(|r| (r.time, r.rhs.abs())).collect(),
        ));
    report.plot("h_rate.svg", &rates)?;

    let rises = records.iter().filter(|r| r.dh_dt > 0.0).count();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for r in &records {
        if r.dh_dt.abs() > 10.0 * floor {
            checked += 1;
            worst = worst.max(((r.dh_dt - r.rhs) / r.rhs).abs());
        }
    }
    let mass = records
        .iter()
        .map(|r| r.mass_correction.abs())
        .fold(0.0, f64::max);
    let (rhs_end, excluded) = dissipation(&end.values, rho, d, g.spacing());
    if excluded > 0.0 {
        report.warn(format!(
            "dissipation skipped mass {excluded:.2e} where f ≤ 0"
        ));
    }
    report.check(
        "h_nonincreasing",
        rises == 0,
        format!("{rises} increases over {} recorded steps", records.len()),
    );
    report.check(
        "h_rate_identity",
        checked > 0 && worst < cfg.rate_tolerance,
        format!(
            "worst mismatch {:.2}% over {checked} steps above 10× floor {floor:.1e}; final rhs {rhs_end:.2e}",
            100.0 * worst
        ),
    );
    report.check(
        "mass_conserved",
        mass < 1e-6,
        format!("largest renormalization {mass:.2e}"),
    );
    Ok(())
}

fn master(
    cfg: &KineticConfig,
    g: &GridSpec,
    rho: &[f64],
    f0: Vec<f64>,
    report: &mut Report,
) -> Result<(), CliError> {
    let dx = g.spacing();
    let k = TransitionKernel::gaussian(g.clone(), rho, cfg.kernel_width, cfg.kernel_rate)?;
    let mut f = ReducedField::normalized(g.clone(), f0, 0.0, 0.0, rho)?.values;
    let h0 = relative_entropy(&f, k.stationary(), rho, dx);
    let mut series = Table::new(["t", "H_r", "max_abs_f_minus_1"]);
    series.comment(
        "units",
        "t in units of the inverse kernel rate scale; H_r dimensionless",
    );
    let dev = |f: &[f64]| f.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    let _ = series.push(vec![0.0, h0, dev(&f)]);
    let mut h = h0;
    let mut rises = 0;
    for step in 1..=cfg.steps {
        f = master_step(&f, &k, rho, cfg.dt)?;
        let next = relative_entropy(&f, k.stationary(), rho, dx);
        if next >= h {
            rises += 1;
        }
        h = next;
        if step % cfg.record_every == 0 || step == cfg.steps {
            let _ = series.push(vec![step as f64 * cfg.dt, h, dev(&f)]);
        }
    }
    report.table(
        "entropy.txt",
        "relative entropy against the stationary solution",
        &series,
    )?;
    let t = series.column("t").unwrap_or_default();
    let hr = series.column("H_r").unwrap_or_default();
    let plot = LinePlot::new("Master equation relative entropy", "t", "H_r")
        .log_y()
        .with(Series::line("H_r", t.into_iter().zip(hr).collect()));
    report.plot("entropy.svg", &plot)?;
    let mass: f64 = f.iter().zip(rho).map(|(a, b)| a * b).sum::<f64>() * dx;
    report.check(
        "entropy_decreasing",
        rises == 0,
        format!("{rises} non-decreasing steps of {}", cfg.steps),
    );
    report.check(
        "entropy_converged",
        h <= cfg.max_entropy_ratio * h0,
        format!(
            "H_r {h0:.3e} → {h:.3e}, ratio {:.1e} ≤ {:.0e}",
            h / h0,
            cfg.max_entropy_ratio
        ),
    );
    report.check(
        "mass_conserved",
        (mass - 1.0).abs() < 1e-9,
        format!("∫fρ = {mass:.12}"),
    );
    Ok(())
}

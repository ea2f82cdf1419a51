//! Pilot-wave trajectories in a free Gaussian packet, checked against the closed form.

use pilotwave::pilot::{
    amplitude_transport_check, integrate_trajectory, psi_reconstruction_check, GridSeries,
    IntegratorConfig,
};
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
pub struct TrajectoryConfig {
    pub sigma0: f64,
    pub mass: f64,
    pub center: f64,
    pub wavenumber: f64,
    pub points: usize,
    pub extent: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub starts: Vec<f64>,
    /// Largest tolerated `|X(t) − X_exact(t)|`.
    pub position_tolerance: f64,
    pub transport_tolerance: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            sigma0: 1.0,
            mass: 1.0,
            center: 0.0,
            wavenumber: 0.0,
            points: 512,
            extent: 40.0,
            dt: 0.01,
            t_end: 2.0,
            record_every: 5,
            starts: vec![-2.0, -1.0, -0.5, 0.5, 1.2, 2.0],
            position_tolerance: 1e-3,
            transport_tolerance: 1e-2,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Vec<Invalid> {
        let mut c = Checker::new("trajectory");
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
        c.at_least("record_every", self.record_every, 1);
        c.require(
            !self.starts.is_empty(),
            "starts",
            "must list at least one start point",
        );
        c.require(
            self.starts.iter().all(|x| x.abs() < 0.25 * self.extent),
            "starts",
            "must lie well inside the periodic grid",
        );
        c.positive("position_tolerance", self.position_tolerance);
        c.positive("transport_tolerance", self.transport_tolerance);
        c.found
    }
}

pub fn run(cfg: &TrajectoryConfig, report: &mut Report) -> Result<(), CliError> {
    let grid = GridSpec::line(cfg.points, cfg.extent)?;
    let packet = GaussianPacket {
        sigma0: cfg.sigma0,
        mass: cfg.mass,
        center: cfg.center,
        wavenumber: cfg.wavenumber,
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
    let integrator = IntegratorConfig::new(cfg.dt).with_record_every(cfg.record_every);

    let mut checks = Table::new([
        "x0",
        "transport_residual",
        "modulus_residual",
        "phase_residual",
        "volume_error",
        "position_error",
    ]);
    checks.comment("units", "x0 in length units; phase residual in radians");
    let mut plot = LinePlot::new("Trajectories", "t", "x");
    let (mut worst_pos, mut worst_transport): (f64, f64) = (0.0, 0.0);
    for (k, &x0) in cfg.starts.iter().enumerate() {
        let traj = integrate_trajectory(&series, &[x0, 0.0], 0.0, t_end, integrator)?;
        if traj.flags.near_node || traj.flags.step_clamped {
            report.warn(format!(
                "trajectory from x0 = {x0} passed near a node or had its step clamped"
            ));
        }
        let c = amplitude_transport_check(&traj, &series);
        let rec = psi_reconstruction_check(&traj, &series);
        let ratio = packet.sigma(traj.end().time) / packet.sigma0;
        let pos = traj
            .samples
            .iter()
            .map(|s| (s.position[0] - packet.trajectory(x0, s.time)).abs())
            .fold(0.0, f64::max);
        worst_pos = worst_pos.max(pos);
        worst_transport = worst_transport.max(c.residual);
        let _ = checks.push(vec![
            x0,
            c.residual,
            rec.modulus_residual,
            rec.phase_residual,
            c.volume_factor / ratio - 1.0,
            pos,
        ]);
        let mut buf = Vec::new();
        traj.write_delimited(&mut buf)
            .map_err(|e| CliError::Io(report.dir().join("trajectory"), e))?;
        report.text(
            &format!("trajectory_{k:02}.txt"),
            &format!("trajectory started at x0 = {x0}"),
            &buf,
        )?;
        plot = plot.with(Series::line(
            format!("x0 = {x0}"),
            traj.samples
                .iter()
                .map(|s| (s.time, s.position[0]))
                .collect(),
        ));
    }
    report.table(
        "checks.txt",
        "transport and reconstruction residuals per trajectory",
        &checks,
    )?;
    report.plot("trajectories.svg", &plot)?;
    report.check(
        "analytic_positions",
        worst_pos < cfg.position_tolerance,
        format!(
            "max |X − X_exact| = {worst_pos:.2e} < {:.0e}",
            cfg.position_tolerance
        ),
    );
    report.check(
        "amplitude_transport",
        worst_transport < cfg.transport_tolerance,
        format!(
            "max transport residual {worst_transport:.2e} < {:.0e}",
            cfg.transport_tolerance
        ),
    );
    Ok(())
}

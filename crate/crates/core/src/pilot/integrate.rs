//! Fourth-order Runge–Kutta integration of the guidance equation.
//!
//! The state is augmented with `∫ ∇·v dt` and `∫ L dt` so both integrals use the same
//! quadrature as the position. Near nodes a step is split in halves recursively until it
//! is accepted or falls below the minimum step.

use std::io::Write;

use super::{FieldSample, GuidingField};
use crate::grid::Point;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Nominal step magnitude.
    pub step: f64,
    /// Smallest step tried before the trajectory is declared truncated.
    pub min_step: f64,
    /// Optional cap on `|v| h` per axis; steps that would move further are split.
    pub max_displacement: Option<f64>,
    /// Record every n-th nominal step. The endpoint is always recorded.
    pub record_every: usize,
}

impl IntegratorConfig {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            min_step: step / 1024.0,
            max_displacement: None,
            record_every: 1,
        }
    }

    pub fn with_max_displacement(mut self, d: f64) -> Self {
        self.max_displacement = Some(d);
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.min_step > 0.0) || self.min_step > self.step {
            return Err(Error::InvalidArgument(format!(
                "need 0 < min_step <= step, got step {} and min_step {}",
                self.step, self.min_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    pub position: Point,
    pub velocity: Point,
    /// `∫ Σ ∂_a v_a dt'` from the start.
    pub divergence_integral: f64,
    /// `∫ L dt'` from the start.
    pub action_integral: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrajectoryFlags {
    /// Some field evaluation fell inside a node neighborhood.
    pub near_node: bool,
    /// At least one step was split.
    pub step_clamped: bool,
    /// Integration stopped before the requested end time.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub axes: usize,
    pub samples: Vec<TrajectorySample>,
    pub flags: TrajectoryFlags,
}

impl Trajectory {
    pub fn start(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn end(&self) -> &TrajectorySample {
        self.samples
            .last()
            .expect("trajectories hold at least one sample")
    }

    pub fn divergence_integral(&self) -> f64 {
        self.end().divergence_integral
    }

    pub fn action_integral(&self) -> f64 {
        self.end().action_integral
    }

    /// Delimited text: `t, x…, v…, div_integral, action_integral`.
    pub fn write_delimited(&self, out: &mut impl Write) -> std::io::Result<()> {
        let axes = self.axes;
        let names = ["x", "y"];
        let mut header = vec!["t".to_string()];
        header.extend((0..axes).map(|a| names[a].to_string()));
        header.extend((0..axes).map(|a| format!("v{}", names[a])));
        header.push("div_integral".into());
        header.push("action_integral".into());
        writeln!(out, "# {}", header.join("\t"))?;
        for s in &self.samples {
            write!(out, "{:.12e}", s.time)?;
            for a in 0..axes {
                write!(out, "\t{:.12e}", s.position[a])?;
            }
            for a in 0..axes {
                write!(out, "\t{:.12e}", s.velocity[a])?;
            }
            writeln!(
                out,
                "\t{:.12e}\t{:.12e}",
                s.divergence_integral, s.action_integral
            )?;
        }
        Ok(())
    }
}

/// Final state of a trajectory that was not recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub position: Point,
    pub divergence_integral: f64,
    pub action_integral: f64,
    pub flags: TrajectoryFlags,
}

#[derive(Debug, Clone, Copy)]
struct State {
    x: Point,
    div: f64,
    act: f64,
}

#[derive(Debug, Clone, Copy)]
struct Rate {
    v: Point,
    div: f64,
    lag: f64,
    near_node: bool,
}

fn rate<F: GuidingField + ?Sized>(field: &F, x: &Point, t: f64) -> (Rate, FieldSample) {
    let s = field.sample(x, t);
    let r = Rate {
        v: s.velocity,
        div: s.divergence,
        lag: s.lagrangian(field.masses()),
        near_node: s.near_node,
    };
    (r, s)
}

fn shifted(axes: usize, y: &State, k: &Rate, h: f64) -> State {
    let mut x = y.x;
    for a in 0..axes {
        x[a] += h * k.v[a];
    }
    State {
        x,
        div: y.div + h * k.div,
        act: y.act + h * k.lag,
    }
}

struct Stepper<'a, F: ?Sized> {
    field: &'a F,
    cfg: IntegratorConfig,
    axes: usize,
    flags: TrajectoryFlags,
}

impl<F: GuidingField + ?Sized> Stepper<'_, F> {
    fn too_far(&self, k: &Rate, h: f64) -> bool {
        match self.cfg.max_displacement {
            Some(d) => (0..self.axes).any(|a| (k.v[a] * h).abs() > d),
            None => false,
        }
    }

    /// One RK4 step, or `None` if it has to be split.
    fn try_step(&mut self, t: f64, y: &State, k1: &Rate, h: f64) -> Option<State> {
        if k1.near_node || self.too_far(k1, h) {
            return None;
        }
        let axes = self.axes;
        let (k2, _) = rate(self.field, &shifted(axes, y, k1, 0.5 * h).x, t + 0.5 * h);
        if k2.near_node || self.too_far(&k2, h) {
            return None;
        }
        let (k3, _) = rate(self.field, &shifted(axes, y, &k2, 0.5 * h).x, t + 0.5 * h);
        if k3.near_node || self.too_far(&k3, h) {
            return None;
        }
        let (k4, _) = rate(self.field, &shifted(axes, y, &k3, h).x, t + h);
        if k4.near_node || self.too_far(&k4, h) {
            return None;
        }
        let mut out = *y;
        for a in 0..axes {
            out.x[a] += h / 6.0 * (k1.v[a] + 2.0 * k2.v[a] + 2.0 * k3.v[a] + k4.v[a]);
        }
        out.div += h / 6.0 * (k1.div + 2.0 * k2.div + 2.0 * k3.div + k4.div);
        out.act += h / 6.0 * (k1.lag + 2.0 * k2.lag + 2.0 * k3.lag + k4.lag);
        self.field.wrap(&mut out.x);
        Some(out)
    }

    /// Advances by `h`, splitting recursively. `Err` carries the time where it stopped.
    fn advance(
        &mut self,
        t: f64,
        y: State,
        k1: Rate,
        h: f64,
    ) -> std::result::Result<State, (f64, State)> {
        if let Some(next) = self.try_step(t, &y, &k1, h) {
            return Ok(next);
        }
        if k1.near_node {
            self.flags.near_node = true;
        }
        let half = 0.5 * h;
        if half.abs() < self.cfg.min_step {
            self.flags.near_node = true;
            return Err((t, y));
        }
        self.flags.step_clamped = true;
        let mid = self.advance(t, y, k1, half)?;
        let (k1b, _) = rate(self.field, &mid.x, t + half);
        self.advance(t + half, mid, k1b, half)
    }
}

fn run<F: GuidingField + ?Sized>(
    field: &F,
    x0: &Point,
    t0: f64,
    t1: f64,
    cfg: IntegratorConfig,
    mut record: impl FnMut(f64, &State, &FieldSample),
) -> Result<(State, TrajectoryFlags)> {
    cfg.validate()?;
    let (lo, hi) = field.time_range();
    let eps = 1e-9 * (hi - lo).abs().min(1.0);
    if t0.min(t1) < lo - eps || t0.max(t1) > hi + eps {
        return Err(Error::InvalidArgument(format!(
            "interval [{t0}, {t1}] leaves the field's time range [{lo}, {hi}]"
        )));
    }
    let axes = field.axes();
    let mut x = *x0;
    for v in x.iter_mut().skip(axes) {
        *v = 0.0;
    }
    field.wrap(&mut x);
    let mut y = State {
        x,
        div: 0.0,
        act: 0.0,
    };
    let span = t1 - t0;
    let steps = if span == 0.0 {
        0
    } else {
        (span.abs() / cfg.step).ceil().max(1.0) as usize
    };
    let h = if steps == 0 { 0.0 } else { span / steps as f64 };
    let mut st = Stepper {
        field,
        cfg,
        axes,
        flags: TrajectoryFlags::default(),
    };
    let mut t = t0;
    for n in 0..steps {
        let (k1, sample) = rate(field, &y.x, t);
        if sample.near_node {
            st.flags.near_node = true;
        }
        if n % cfg.record_every == 0 {
            record(t, &y, &sample);
        }
        match st.advance(t, y, k1, h) {
            Ok(next) => y = next,
            Err((t_stop, y_stop)) => {
                st.flags.truncated = true;
                let (_, s) = rate(field, &y_stop.x, t_stop);
                record(t_stop, &y_stop, &s);
                return Ok((y_stop, st.flags));
            }
        }
        // recompute from the step count to avoid drift in the clock
        t = t0 + (n + 1) as f64 * h;
    }
    let (_, sample) = rate(field, &y.x, t1);
    record(t1, &y, &sample);
    Ok((y, st.flags))
}

/// Integrates the trajectory through `x0` at `t0` to `t1`, which may lie in the past.
///
/// A trajectory that cannot pass a node with steps above `min_step` is returned with
/// `flags.truncated` and `flags.near_node` set and its samples ending where it stopped.
pub fn integrate_trajectory<F: GuidingField + ?Sized>(
    field: &F,
    x0: &Point,
    t0: f64,
    t1: f64,
    cfg: IntegratorConfig,
) -> Result<Trajectory> {
    let mut samples = Vec::new();
    let (_, flags) = run(field, x0, t0, t1, cfg, |t, y, s| {
        samples.push(TrajectorySample {
            time: t,
            position: y.x,
            velocity: s.velocity,
            divergence_integral: y.div,
            action_integral: y.act,
        })
    })?;
    Ok(Trajectory {
        axes: field.axes(),
        samples,
        flags,
    })
}

/// Like [`integrate_trajectory`] but keeps only the final state. Truncation is an error.
pub fn flow_endpoint<F: GuidingField + ?Sized>(
    field: &F,
    x0: &Point,
    t0: f64,
    t1: f64,
    cfg: IntegratorConfig,
) -> Result<Endpoint> {
    let mut stopped = t1;
    let (y, flags) = run(field, x0, t0, t1, cfg, |t, _, _| stopped = t)?;
    if flags.truncated {
        return Err(Error::TrajectoryTruncated { time: stopped });
    }
    Ok(Endpoint {
        position: y.x,
        divergence_integral: y.div,
        action_integral: y.act,
        flags,
    })
}

//! Reduced kinetics of a system S entangled with an equilibrium bath T.
//!
//! Kramers-Moyal moments estimated from paths, the bath-averaged guidance velocity,
//! the reduced diffusion equation for `f_S = ρ_S/|ψ_S|²` and the master-equation form
//! with its relative entropy.

mod diffusion;
mod master;

pub use diffusion::{
    dissipation, fp_step, h_function, h_valentini_rate, relax_reduced, FpConfig, FpRecord, HRate,
    ReducedField, DEFAULT_DIFFUSION,
};
pub use master::{master_rhs, master_step, relative_entropy, KernelDirection, TransitionKernel};

use crate::ensemble::pairwise_sum;
use crate::grid::GridSpec;
use crate::pilot::Trajectory;
use crate::qdyn::{velocity_field, WaveFunction};
use crate::table::Table;
use crate::{Error, Result};

/// One coordinate of a path sampled on a uniform time mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

impl SamplePath {
    pub fn new(times: Vec<f64>, positions: Vec<f64>) -> Result<Self> {
        if times.len() != positions.len() || times.len() < 2 {
            return Err(Error::InvalidArgument(
                "a path needs at least two samples and matching lengths".into(),
            ));
        }
        Ok(Self { times, positions })
    }

    pub fn from_trajectory(traj: &Trajectory, axis: usize) -> Self {
        Self {
            times: traj.samples.iter().map(|s| s.time).collect(),
            positions: traj.samples.iter().map(|s| s.position[axis]).collect(),
        }
    }

    fn mesh(&self) -> Result<f64> {
        let dt = self.times[1] - self.times[0];
        let uniform = self
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs());
        if !(dt > 0.0) || !uniform {
            return Err(Error::InvalidArgument(
                "path times must be increasing on a uniform mesh".into(),
            ));
        }
        Ok(dt)
    }

    /// Positions with periodic jumps removed, assuming each sample moves less than half a period.
    fn unwrapped(&self, period: Option<f64>) -> Vec<f64> {
        let Some(l) = period else {
            return self.positions.clone();
        };
        let mut out = Vec::with_capacity(self.positions.len());
        let mut acc = self.positions[0];
        out.push(acc);
        for w in self.positions.windows(2) {
            let d = w[1] - w[0];
            acc += d - l * (d / l).round();
            out.push(acc);
        }
        out
    }
}

/// Start-position bins for moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Binning {
    pub lower: f64,
    pub upper: f64,
    pub bins: usize,
    /// Set for wrapped coordinates so displacements are unwrapped first.
    pub period: Option<f64>,
}

impl Binning {
    pub fn new(lower: f64, upper: f64, bins: usize) -> Self {
        Self {
            lower,
            upper,
            bins,
            period: None,
        }
    }

    pub fn periodic(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = (self.upper - self.lower) / self.bins as f64;
        (0..self.bins)
            .map(|b| self.lower + (b as f64 + 0.5) * w)
            .collect()
    }

    fn index(&self, x: f64) -> Option<usize> {
        if !(x >= self.lower && x < self.upper) {
            return None;
        }
        let b = ((x - self.lower) / (self.upper - self.lower) * self.bins as f64) as usize;
        Some(b.min(self.bins - 1))
    }
}

#[derive(Debug, Clone)]
pub struct MomentEstimate {
    pub order: u32,
    pub lag: f64,
    pub centers: Vec<f64>,
    /// `None` marks an empty bin.
    pub values: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

impl MomentEstimate {
    pub fn missing(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Count-weighted average over the populated bins.
    pub fn pooled(&self) -> Option<f64> {
        let n: usize = self.counts.iter().sum();
        if n == 0 {
            return None;
        }
        let terms: Vec<f64> = self
            .values
            .iter()
            .zip(&self.counts)
            .filter_map(|(v, &c)| v.map(|v| v * c as f64))
            .collect();
        Some(pairwise_sum(&terms) / n as f64)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["x", "d_n", "count"]);
        t.comment("order", self.order).comment("lag", self.lag);
        for ((x, v), c) in self.centers.iter().zip(&self.values).zip(&self.counts) {
            // missing bins are written as NaN
            let _ = t.push(vec![*x, v.unwrap_or(f64::NAN), *c as f64]);
        }
        t
    }
}

/// `D_n(x) = ⟨(Δx)ⁿ⟩ / (n! τ)` over all windows of length `lag`, binned by start position.
pub fn kramers_moyal_estimate(
    paths: &[SamplePath],
    lag: f64,
    order: u32,
    binning: &Binning,
) -> Result<MomentEstimate> {
    if !(lag > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lag must be positive, got {lag}"
        )));
    }
    if order == 0 || binning.bins == 0 || !(binning.upper > binning.lower) {
        return Err(Error::InvalidArgument(
            "order and bin count must be positive".into(),
        ));
    }
    let factorial: f64 = (1..=order).map(f64::from).product();
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); binning.bins];
    for path in paths {
        let dt = path.mesh()?;
        let steps = (lag / dt).round() as usize;
        if steps == 0 || (steps as f64 * dt - lag).abs() > 1e-9 * lag {
            return Err(Error::InvalidArgument(format!(
                "lag {lag} is not a multiple of the sampling step {dt}"
            )));
        }
        let x = path.unwrapped(binning.period);
        for i in 0..x.len().saturating_sub(steps) {
            if let Some(b) = binning.index(path.positions[i]) {
                let d = x[i + steps] - x[i];
                buckets[b].push(d.powi(order as i32) / (factorial * lag));
            }
        }
    }
    let counts: Vec<usize> = buckets.iter().map(Vec::len).collect();
    let values = buckets
        .iter()
        .map(|b| (!b.is_empty()).then(|| pairwise_sum(b) / b.len() as f64))
        .collect();
    Ok(MomentEstimate {
        order,
        lag,
        centers: binning.centers(),
        values,
        counts,
    })
}

/// Joint wave function over `(x_S, x_T)`. Axis 0 is the system, axis 1 the bath.
#[derive(Debug, Clone)]
pub struct JointState {
    psi: WaveFunction,
    masses: [f64; 2],
}

impl JointState {
    pub fn new(psi: WaveFunction, masses: [f64; 2]) -> Result<Self> {
        if psi.grid().axes() != 2 {
            return Err(Error::InvalidArgument(
                "a joint state needs a two-axis grid".into(),
            ));
        }
        if masses.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidArgument("masses must be positive".into()));
        }
        let norm = psi.norm_squared();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "joint state must be normalized, got norm {norm}"
            )));
        }
        Ok(Self { psi, masses })
    }

    pub fn psi(&self) -> &WaveFunction {
        &self.psi
    }

    pub fn masses(&self) -> [f64; 2] {
        self.masses
    }

    pub fn system_grid(&self) -> GridSpec {
        let g = self.psi.grid();
        GridSpec::line(g.points(), g.extent()).expect("grid already validated")
    }

    /// `|ψ_S(x_S)|² = ∫ |Ψ|² dx_T`.
    pub fn system_marginal(&self) -> Vec<f64> {
        let g = self.psi.grid();
        let n = g.points();
        let rho = self.psi.born_density();
        (0..n)
            .map(|i| pairwise_sum(&rho[i * n..(i + 1) * n]) * g.spacing())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ConditionalVelocity {
    pub grid: GridSpec,
    /// `v̄_S`, zero on flagged columns.
    pub values: Vec<f64>,
    pub marginal: Vec<f64>,
    /// Columns whose marginal is below the node threshold.
    pub flagged: Vec<bool>,
    /// Probability carried by node points left out of the averages.
    pub excluded_weight: f64,
}

/// Bath-averaged system velocity `∫ v_S |Ψ|² dx_T / ∫ |Ψ|² dx_T`.
pub fn conditional_velocity(j: &JointState, node_epsilon: f64) -> ConditionalVelocity {
    let g = j.psi.grid();
    let n = g.points();
    let dx = g.spacing();
    let v = velocity_field(&j.psi, &j.masses, node_epsilon);
    let rho = j.psi.born_density();
    let marginal = j.system_marginal();
    let max = marginal.iter().cloned().fold(0.0, f64::max);
    let mut values = vec![0.0; n];
    let mut flagged = vec![false; n];
    let mut excluded = Vec::new();
    for i in 0..n {
        let row = i * n..(i + 1) * n;
        let mut num = Vec::with_capacity(n);
        let mut den = Vec::with_capacity(n);
        for k in row {
            if v.node[k] {
                excluded.push(rho[k]);
            } else {
                num.push(v.components[0][k] * rho[k]);
                den.push(rho[k]);
            }
        }
        let d = pairwise_sum(&den);
        if marginal[i] < node_epsilon * max || d == 0.0 {
            flagged[i] = true;
        } else {
            values[i] = pairwise_sum(&num) / d;
        }
    }
    ConditionalVelocity {
        grid: j.system_grid(),
        values,
        marginal,
        flagged,
        excluded_weight: pairwise_sum(&excluded) * dx * dx,
    }
}

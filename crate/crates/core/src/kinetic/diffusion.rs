//! The reduced diffusion equation
//! `∂t f + v̄·∇f = D [∇²f + 2 ∇f·∇|ψ|²/|ψ|²]` on a periodic line.
//!
//! With `ρ = |ψ_S|²` the right-hand side is rewritten as
//! `(D/ρ) ∇·(ρ ∇f) − u·∇f` with `u = v̄ − D ∇ln ρ`. The first term uses harmonic-mean
//! face values of `ρ` and conserves `Σ ρ f` exactly. The second is upwind with a
//! van Leer limited correction; it vanishes when `v̄` is the osmotic drift that keeps
//! `ρ` stationary. Under the positivity condition the update is a convex combination
//! of neighbouring values, so `f ≥ 0` and no new extrema appear.

use crate::ensemble::pairwise_sum;
use crate::grid::GridSpec;
use crate::table::Table;
use crate::{Error, Result};

/// Diffusion constant used when a scenario does not set one.
pub const DEFAULT_DIFFUSION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub time: f64,
    pub diffusion: f64,
    /// `∫f|ψ|² − 1` removed by the last renormalization.
    pub mass_correction: f64,
}

impl ReducedField {
    pub fn new(
        grid: GridSpec,
        values: Vec<f64>,
        time: f64,
        diffusion: f64,
        rho: &[f64],
    ) -> Result<Self> {
        if grid.axes() != 1 {
            return Err(Error::InvalidArgument(
                "reduced fields live on a line".into(),
            ));
        }
        check_len(&grid, &values)?;
        check_len(&grid, rho)?;
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "f must be finite and non-negative".into(),
            ));
        }
        if !(diffusion >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "diffusion must be >= 0, got {diffusion}"
            )));
        }
        let m = normalization(&values, rho, grid.spacing());
        if (m - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "∫f|ψ|² must be 1 within 1e-6, got {m}"
            )));
        }
        Ok(Self {
            grid,
            values,
            time,
            diffusion,
            mass_correction: 0.0,
        })
    }

    /// Rescales arbitrary non-negative values so `∫f|ψ|² = 1`.
    pub fn normalized(
        grid: GridSpec,
        mut values: Vec<f64>,
        time: f64,
        diffusion: f64,
        rho: &[f64],
    ) -> Result<Self> {
        check_len(&grid, &values)?;
        check_len(&grid, rho)?;
        let m = normalization(&values, rho, grid.spacing());
        if !(m > 0.0) {
            return Err(Error::InvalidArgument("f carries no probability".into()));
        }
        values.iter_mut().for_each(|v| *v /= m);
        Self::new(grid, values, time, diffusion, rho)
    }

    pub fn equilibrium(grid: GridSpec, diffusion: f64, rho: &[f64]) -> Result<Self> {
        let n = grid.len();
        Self::normalized(grid, vec![1.0; n], 0.0, diffusion, rho)
    }
}

fn check_len(grid: &GridSpec, v: &[f64]) -> Result<()> {
    if v.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} grid values, got {}",
            grid.len(),
            v.len()
        )));
    }
    Ok(())
}

pub(crate) fn normalization(f: &[f64], rho: &[f64], dx: f64) -> f64 {
    let t: Vec<f64> = f.iter().zip(rho).map(|(f, r)| f * r).collect();
    pairwise_sum(&t) * dx
}

fn van_leer(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// Harmonic-mean face value of `ρ` divided by the cell's own `ρ`.
fn face_weight(own: f64, other: f64) -> f64 {
    2.0 / (1.0 + own / other)
}

/// One explicit step of the reduced diffusion equation.
pub fn fp_step(r: &ReducedField, vbar: &[f64], rho: &[f64], dt: f64) -> Result<ReducedField> {
    let g = &r.grid;
    check_len(g, vbar)?;
    check_len(g, rho)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if rho.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::InvalidArgument(
            "|ψ_S|² must be positive on the grid".into(),
        ));
    }
    let n = g.len();
    let dx = g.spacing();
    let d = r.diffusion;
    let dims = g.axes() as f64;
    if d > 0.0 {
        let bound = dx * dx / (2.0 * dims * d);
        if dt > bound {
            return Err(Error::StabilityBound {
                dt,
                bound,
                bound_name: "diffusive dx²/(2·3N·D)",
            });
        }
    }
    let nb = |i: usize, k: isize| (i as isize + k).rem_euclid(n as isize) as usize;
    let u: Vec<f64> = (0..n)
        .map(|i| vbar[i] - d * (rho[nb(i, 1)].ln() - rho[nb(i, -1)].ln()) / (2.0 * dx))
        .collect();
    let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if umax > 0.0 && dt > dx / umax {
        return Err(Error::StabilityBound {
            dt,
            bound: dx / umax,
            bound_name: "advective CFL",
        });
    }

    let f = &r.values;
    let slope: Vec<f64> = (0..n)
        .map(|i| van_leer(f[i] - f[nb(i, -1)], f[nb(i, 1)] - f[i]))
        .collect();
    let lambda = d * dt / (dx * dx);
    let mut worst: f64 = 0.0;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let (l, rr) = (nb(i, -1), nb(i, 1));
        let wl = lambda * face_weight(rho[i], rho[l]);
        let wr = lambda * face_weight(rho[i], rho[rr]);
        let c = u[i] * dt / dx;
        let adv = if c >= 0.0 {
            c * ((f[i] + 0.5 * slope[i]) - (f[l] + 0.5 * slope[l]))
        } else {
            c * ((f[rr] - 0.5 * slope[rr]) - (f[i] - 0.5 * slope[i]))
        };
        // the limited upwind term moves at most 2|c| of the cell towards its neighbours
        worst = worst.max(wl + wr + 2.0 * c.abs());
        out[i] = f[i] + wr * (f[rr] - f[i]) - wl * (f[i] - f[l]) - adv;
    }
    if worst > 1.0 {
        return Err(Error::StabilityBound {
            dt,
            bound: dt / worst,
            bound_name: "positivity",
        });
    }
    // round-off can leave -0.0 style residue at exact zeros
    out.iter_mut().for_each(|v| *v = v.max(0.0));
    let m = normalization(&out, rho, dx);
    out.iter_mut().for_each(|v| *v /= m);
    Ok(ReducedField {
        grid: g.clone(),
        values: out,
        time: r.time + dt,
        diffusion: d,
        mass_correction: m - 1.0,
    })
}

/// `H = ∫ f ln f |ψ|² dx`, with empty cells contributing zero.
pub fn h_function(f: &[f64], rho: &[f64], dx: f64) -> f64 {
    let t: Vec<f64> = f
        .iter()
        .zip(rho)
        .map(|(&f, &r)| if f > 0.0 { f * f.ln() * r } else { 0.0 })
        .collect();
    pairwise_sum(&t) * dx
}

/// `−D ∫ |ψ|² (∇f)²/f dx` and the |ψ|²-mass of the excluded `f = 0` cells.
pub fn dissipation(f: &[f64], rho: &[f64], diffusion: f64, dx: f64) -> (f64, f64) {
    let n = f.len();
    let mut terms = Vec::with_capacity(n);
    let mut excluded = Vec::new();
    for i in 0..n {
        if f[i] <= 0.0 {
            excluded.push(rho[i]);
            continue;
        }
        let grad = (f[(i + 1) % n] - f[(i + n - 1) % n]) / (2.0 * dx);
        terms.push(rho[i] * grad * grad / f[i]);
    }
    (
        -diffusion * pairwise_sum(&terms) * dx,
        pairwise_sum(&excluded) * dx,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HRate {
    /// Finite difference of `H` between the two fields.
    pub measured: f64,
    /// Dissipation integral at the midpoint field.
    pub predicted: f64,
    pub excluded_mass: f64,
}

impl HRate {
    pub fn relative_mismatch(&self) -> f64 {
        let scale = self.measured.abs().max(self.predicted.abs());
        if scale < 1e-14 {
            0.0
        } else {
            (self.measured - self.predicted).abs() / scale
        }
    }

    /// Both sides non-positive and agreeing to `tolerance`.
    pub fn holds(&self, tolerance: f64) -> bool {
        self.measured <= 1e-14 && self.predicted <= 0.0 && self.relative_mismatch() < tolerance
    }
}

pub fn h_valentini_rate(before: &ReducedField, after: &ReducedField, rho: &[f64]) -> Result<HRate> {
    let dt = after.time - before.time;
    if !(dt > 0.0) || before.values.len() != after.values.len() {
        return Err(Error::InvalidArgument(
            "need two consecutive fields on one grid".into(),
        ));
    }
    check_len(&before.grid, rho)?;
    let dx = before.grid.spacing();
    let measured = (h_function(&after.values, rho, dx) - h_function(&before.values, rho, dx)) / dt;
    let mid: Vec<f64> = before
        .values
        .iter()
        .zip(&after.values)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let (predicted, excluded_mass) = dissipation(&mid, rho, before.diffusion, dx);
    Ok(HRate {
        measured,
        predicted,
        excluded_mass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpConfig {
    pub dt: f64,
    pub steps: usize,
    /// Steps between refreshes of `v̄_S` and `|ψ_S|²`.
    pub refresh_stride: usize,
    pub record_every: usize,
}

impl FpConfig {
    pub fn new(dt: f64, steps: usize) -> Self {
        Self {
            dt,
            steps,
            refresh_stride: 1,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpRecord {
    pub time: f64,
    pub h: f64,
    pub dh_dt: f64,
    pub rhs: f64,
    pub mass_correction: f64,
}

impl FpRecord {
    pub fn table(records: &[FpRecord]) -> Table {
        let mut t = Table::new(["t", "H", "dH_dt", "rhs", "mass_correction"]);
        for r in records {
            let _ = t.push(vec![r.time, r.h, r.dh_dt, r.rhs, r.mass_correction]);
        }
        t
    }
}

/// Runs `fp_step` repeatedly. `drift(t)` supplies `(v̄_S, |ψ_S|²)` at refresh times.
pub fn relax_reduced(
    r0: &ReducedField,
    mut drift: impl FnMut(f64) -> Result<(Vec<f64>, Vec<f64>)>,
    cfg: &FpConfig,
) -> Result<(ReducedField, Vec<FpRecord>)> {
    if cfg.refresh_stride == 0 || cfg.record_every == 0 {
        return Err(Error::InvalidArgument("strides must be positive".into()));
    }
    let dx = r0.grid.spacing();
    let (mut vbar, mut rho) = drift(r0.time)?;
    let mut r = r0.clone();
    let mut records = Vec::new();
    for step in 0..cfg.steps {
        if step > 0 && step % cfg.refresh_stride == 0 {
            (vbar, rho) = drift(r.time)?;
        }
        let next = fp_step(&r, &vbar, &rho, cfg.dt)?;
        if step % cfg.record_every == 0 {
            let rate = h_valentini_rate(&r, &next, &rho)?;
            records.push(FpRecord {
                time: r.time,
                h: h_function(&r.values, &rho, dx),
                dh_dt: rate.measured,
                rhs: rate.predicted,
                mass_correction: next.mass_correction,
            });
        }
        r = next;
    }
    Ok((r, records))
}

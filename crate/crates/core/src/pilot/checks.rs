//! Identities that must hold along trajectories, and loop circulation of the velocity.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use super::{GuidingField, Trajectory};
use crate::grid::Point;
use crate::qdyn::{velocity_field, WaveFunction, DEFAULT_NODE_EPSILON};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportCheck {
    /// `|a²(X₁,t₁) − a²(X₀,t₀) e^{−∫∇·v}| / a²(X₀,t₀)`.
    pub residual: f64,
    /// Comoving volume growth `e^{+∫∇·v}`.
    pub volume_factor: f64,
    /// Largest relative drift of `a² · volume` over all recorded samples.
    pub measure_drift: f64,
}

pub fn amplitude_transport_check<F: GuidingField + ?Sized>(
    traj: &Trajectory,
    field: &F,
) -> TransportCheck {
    let s0 = traj.start();
    let a0 = field.density(&s0.position, s0.time);
    let s1 = traj.end();
    let a1 = field.density(&s1.position, s1.time);
    let d = traj.divergence_integral();
    let measure_drift = traj
        .samples
        .iter()
        .map(|s| {
            let a = field.density(&s.position, s.time);
            (a * s.divergence_integral.exp() / a0 - 1.0).abs()
        })
        .fold(0.0, f64::max);
    TransportCheck {
        residual: (a1 - a0 * (-d).exp()).abs() / a0,
        volume_factor: d.exp(),
        measure_drift,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionCheck {
    /// Relative modulus mismatch.
    pub modulus_residual: f64,
    /// Phase mismatch in `(−π, π]`.
    pub phase_residual: f64,
}

/// Compares Ψ at the endpoint with `Ψ(X₀,t₀) e^{−∫∇·v/2} e^{i∫L}`.
pub fn psi_reconstruction_check<F: GuidingField + ?Sized>(
    traj: &Trajectory,
    field: &F,
) -> ReconstructionCheck {
    let s0 = traj.start();
    let s1 = traj.end();
    let psi0 = field.psi_at(&s0.position, s0.time);
    let psi1 = field.psi_at(&s1.position, s1.time);
    let predicted = psi0
        * (-0.5 * traj.divergence_integral()).exp()
        * num_complex::Complex64::from_polar(1.0, traj.action_integral());
    let modulus_residual = (psi1.norm() - predicted.norm()).abs() / predicted.norm();
    let mut dphi = (psi1 / predicted).arg();
    if dphi <= -PI {
        dphi += TAU;
    }
    ReconstructionCheck {
        modulus_residual,
        phase_residual: dphi,
    }
}

/// Largest `|m dv/dt + ∇(V+Q)| / (|∇(V+Q)| + floor)` over interior samples, with `dv/dt`
/// from centered differences of the recorded velocities. The floor is `1e-2 (|∇V| + |∇Q|)
/// + 1e-3`, so where V and Q cancel, or both vanish, rounding noise is not divided by zero.
pub fn newton_consistency<F: GuidingField + ?Sized>(traj: &Trajectory, field: &F) -> f64 {
    let masses = field.masses();
    let axes = field.axes();
    let s = &traj.samples;
    let mut worst: f64 = 0.0;
    for i in 1..s.len().saturating_sub(1) {
        let f = field.sample(&s[i].position, s[i].time);
        let dt = s[i + 1].time - s[i - 1].time;
        let (mut num, mut force, mut scale) = (0.0, 0.0, 0.0);
        for a in 0..axes {
            let acc = (s[i + 1].velocity[a] - s[i - 1].velocity[a]) / dt;
            let g = f.grad_potential[a] + f.grad_quantum_potential[a];
            num += (masses[a] * acc + g).powi(2);
            force += g * g;
            scale += f.grad_potential[a].abs() + f.grad_quantum_potential[a].abs();
        }
        worst = worst.max(num.sqrt() / (force.sqrt() + 1e-2 * scale + 1e-3));
    }
    worst
}

/// Loop integral of the guidance velocity in both mass conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circulation {
    /// `∮ Σ m_a v_a dx_a`, which equals `∮ ∇S · dx`.
    pub mass_weighted: f64,
    /// `∮ Σ v_a dx_a`.
    pub as_written: f64,
}

impl Circulation {
    pub fn mass_weighted_windings(&self) -> f64 {
        self.mass_weighted / TAU
    }

    pub fn as_written_windings(&self) -> f64 {
        self.as_written / TAU
    }
}

/// Trapezoidal circulation around the closed polygon `vertices`, each edge split into
/// `subdivisions` pieces. Fails if any quadrature point is interpolated from a node cell.
pub fn circulation(
    psi: &WaveFunction,
    masses: &[f64],
    vertices: &[Point],
    subdivisions: usize,
) -> Result<Circulation> {
    let grid = psi.grid();
    if grid.axes() != 2 || vertices.len() < 3 || subdivisions == 0 {
        return Err(Error::InvalidArgument(
            "circulation needs a two-axis grid and a polygon of at least three vertices".into(),
        ));
    }
    let field = velocity_field(psi, masses, DEFAULT_NODE_EPSILON);
    let v_at = |p: &Point, edge: usize| -> Result<[f64; 2]> {
        let st = grid.stencil(p);
        if st.touches(&field.node) {
            return Err(Error::LoopNearNode { vertex: edge });
        }
        Ok([
            st.apply(&field.components[0]),
            st.apply(&field.components[1]),
        ])
    };
    let mut out = Circulation {
        mass_weighted: 0.0,
        as_written: 0.0,
    };
    let n = vertices.len();
    for e in 0..n {
        let a = vertices[e];
        let b = vertices[(e + 1) % n];
        let mut prev = a;
        let mut v_prev = v_at(&prev, e)?;
        for j in 1..=subdivisions {
            let u = j as f64 / subdivisions as f64;
            let p = [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])];
            let v = v_at(&p, e)?;
            for ax in 0..2 {
                let term = 0.5 * (v[ax] + v_prev[ax]) * (p[ax] - prev[ax]);
                out.as_written += term;
                out.mass_weighted += masses[ax] * term;
            }
            prev = p;
            v_prev = v;
        }
    }
    Ok(out)
}

/// Writes `traj` as tab-delimited text with a commented header.
pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    traj.write_delimited(&mut f)?;
    Ok(())
}

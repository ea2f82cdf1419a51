//! Bohmian trajectories guided by Ψ and the transport identities that hold along them.
//!
//! Trajectories are integrated against any [`GuidingField`]: either a series of grid
//! snapshots produced by the propagator, or the closed-form mode sum of a particle in a box.

mod checks;
mod integrate;
mod modes;
mod series;

pub use checks::{
    amplitude_transport_check, circulation, newton_consistency, psi_reconstruction_check,
    write_trajectory, Circulation, ReconstructionCheck, TransportCheck,
};
pub use integrate::{
    flow_endpoint, integrate_trajectory, Endpoint, IntegratorConfig, Trajectory, TrajectoryFlags,
    TrajectorySample,
};
pub use modes::BoxModes;
pub use series::GridSeries;

use num_complex::Complex64;

use crate::grid::Point;

/// Everything the integrator or a check needs at one space-time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub psi: Complex64,
    pub velocity: Point,
    /// `Σ_a ∂_a v_a`.
    pub divergence: f64,
    pub quantum_potential: f64,
    pub grad_quantum_potential: Point,
    pub potential: f64,
    pub grad_potential: Point,
    /// The point lies in the neighborhood of a node, where the fields are unreliable.
    pub near_node: bool,
}

impl FieldSample {
    /// Lagrangian `Σ ½ m v² − V − Q` evaluated on the guidance velocity.
    pub fn lagrangian(&self, masses: &[f64]) -> f64 {
        let kinetic: f64 = masses
            .iter()
            .enumerate()
            .map(|(a, m)| 0.5 * m * self.velocity[a].powi(2))
            .sum();
        kinetic - self.potential - self.quantum_potential
    }
}

/// A time-dependent guidance field over a rectangular configuration domain.
pub trait GuidingField: Sync {
    fn axes(&self) -> usize;

    fn masses(&self) -> &[f64];

    /// Lower and upper corner of the domain.
    fn bounds(&self) -> (Point, Point);

    /// Whether positions wrap around the domain.
    fn periodic(&self) -> bool;

    /// Times for which the field is defined.
    fn time_range(&self) -> (f64, f64);

    fn sample(&self, x: &Point, t: f64) -> FieldSample;

    /// Ψ at `x`, possibly more accurate than [`FieldSample::psi`].
    fn psi_at(&self, x: &Point, t: f64) -> Complex64 {
        self.sample(x, t).psi
    }

    /// |Ψ|² at `x`.
    fn density(&self, x: &Point, t: f64) -> f64 {
        self.psi_at(x, t).norm_sqr()
    }

    /// Maps a position back into the domain when the field is periodic.
    fn wrap(&self, x: &mut Point) {
        if self.periodic() {
            let (lo, hi) = self.bounds();
            for a in 0..self.axes() {
                let l = hi[a] - lo[a];
                let s = (x[a] - lo[a]).rem_euclid(l);
                x[a] = if s >= l { lo[a] } else { lo[a] + s };
            }
        }
    }
}

/// Guidance velocity at `x`, with the near-node flag.
pub fn velocity_at<F: GuidingField + ?Sized>(field: &F, x: &Point, t: f64) -> (Point, bool) {
    let s = field.sample(x, t);
    (s.velocity, s.near_node)
}

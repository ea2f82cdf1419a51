//! Pilot-wave dynamics on desk-scale grids: Schrödinger propagation, de Broglie–Bohm
//! trajectories, relaxation toward |Ψ|², typicality measures and kinetic models of
//! nonequilibrium.

pub mod acceptance;
pub mod chaosmap;
pub mod ensemble;
pub mod error;
pub mod functional;
pub mod grid;
pub mod kinetic;
pub mod pilot;
pub mod qdyn;
pub mod table;
pub mod typicality;

pub use error::{Error, Result};
pub use grid::{GridSpec, Point};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

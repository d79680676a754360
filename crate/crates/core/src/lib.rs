//! Numerical laboratory for `u_tt = c(x)^2 Lap u` with a Lipschitz wavespeed
//! equal to one outside a ball of radius `L`.
//!
//! The crate simulates the equation on the line, in the plane and for radial
//! solutions in three dimensions, and checks the energy identities, weighted
//! estimates and local-energy decay behaviour that the Morawetz multiplier
//! method predicts.

pub mod analysis;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod medium;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{Field, InitialData, Point};
pub use grid::Grid;
pub use medium::{
    compute_eta, init_data_norms, make_profile, project_moment_zero, validate_profile, DataNorms,
    DimMode, EtaVerdict, Family, WavespeedProfile,
};
pub use solver::{Observer, Simulation, Snapshot, SolverConfig};

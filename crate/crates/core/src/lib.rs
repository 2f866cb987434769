//! Numerical laboratory for the coupled KdV system with Clifford-algebra-valued
//! odd field: pseudospectral time integration, conserved-charge monitoring and
//! an independent reconstruction of the flow from its Hamiltonian structure.

pub mod charges;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod random;
pub mod solitons;
pub mod verify;

pub use charges::ChargeReport;
pub use dynamics::{evolve, rhs, step, Integrator, SolverConfig};
pub use error::{Error, Result};
pub use fields::FieldState;
pub use grid::Grid;
pub use solitons::{SolitonSpec, VelocityMode};

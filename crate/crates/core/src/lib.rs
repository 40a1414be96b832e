//! One-dimensional compressible Euler flow with a physical vacuum boundary, in
//! mass coordinates, written as a symmetric system for the sound speed and the
//! velocity.
//!
//! The crate is organised bottom up:
//!
//! - [`coords`]: physical constants, the `xi` coordinate and Eulerian transforms.
//! - [`grid`]: the staggered graded grid, weighted fields and the state.
//! - [`operators`]: the adjoint pair `V`, `V*` and their commutator identities.
//! - [`norms`]: weighted norms and the energy hierarchy.
//! - [`profile`]: even polynomial initial data and their projection onto the grid.
//! - [`evolution`]: time stepping, the linear solver and the Picard iteration.
//! - [`harness`]: scenarios, configuration, output writers and the verification suite.

pub mod coords;
pub mod evolution;
pub mod error;
pub mod grid;
pub mod harness;
pub mod norms;
pub mod operators;
pub mod profile;

pub use coords::{EulerianProfile, Params};
pub use error::{Error, Result};
pub use grid::{grid_for, make_grid, make_vacuum_grid, Field, Grid, Side, State};
pub use norms::{energy, EnergyReport};
pub use operators::{Op, OperatorStack};
pub use profile::{EvenProfile, Prepared};

//! Exact critical temperatures and spin-spin correlations of periodic,
//! ferromagnetic 2D Ising models.
//!
//! The pipeline maps an Ising model with an `m x n` period of couplings to
//! dimers on its Fisher graph, reads the critical point off the spectral
//! curve `P(z, w) = det K(z, w)` of the Kasteleyn operator, and evaluates
//! correlations along a vertical lattice line as block Toeplitz
//! determinants. The [`oracle`] module provides brute-force and
//! transfer-matrix ground truth for all of it at small scale.
//!
//! Conventions used throughout:
//! - site `(i, j)` has horizontal index `i` in `0..m` and vertical index `j`
//!   in `0..n`;
//! - `z` is the phase picked up by edges that wrap vertically (cross the
//!   horizontal cut between the top and bottom rows), `w` the phase of
//!   edges that wrap horizontally;
//! - corner `(theta, tau)` of the unit torus is `(z, w) = ((-1)^theta, (-1)^tau)`.

pub mod correlation;
pub mod error;
pub mod fishergraph;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{EdgeWeightMap, PeriodicIsingModel, WeightKind};

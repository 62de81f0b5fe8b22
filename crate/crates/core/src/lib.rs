//! Discrete-time SDIR (susceptible / delayable / infected / recovered)
//! information-diffusion model on directed weighted networks.
//!
//! The crate is organized around the life cycle of an edge-deletion
//! experiment:
//!
//! - [`model`] — the network model (infection weights plus per-node SDIR
//!   parameters), validation, serialization, and synthetic generation;
//! - [`spectral`] — the system matrices whose spectral radii govern
//!   convergence of the mean-field dynamics, and the q-vector selection that
//!   sharpens the convergence condition;
//! - [`dynamics`] — the linear mean-field iteration, the estimated infection
//!   amount `sigma`, and the exact stochastic process with Monte Carlo
//!   aggregation;
//! - [`bounds`] — closed-form supermodular upper/lower bounds on the
//!   infection amount, with rank-one incremental re-evaluation under
//!   single-edge deletions;
//! - [`optimize`] — greedy, sandwich, brute-force, and random strategies for
//!   choosing which edges to delete;
//! - [`cli`] — the `sdir` command-line front-end.

pub mod bounds;
pub mod cli;
pub mod dynamics;
pub mod linalg;
pub mod model;
pub mod optimize;
pub mod spectral;

#[cfg(test)]
pub(crate) mod testutil;

pub use model::{EdgeSet, NetworkModel, ValidationReport};
pub use spectral::QVector;

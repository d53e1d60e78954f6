//! Simulator for generalized Hopfield networks realized with multiphoton
//! interference: spins are `{0, pi}` phase shifts applied to a prepared Fock
//! state, and the energy is the probability of detecting a chosen set of
//! output configurations.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod harness;
pub mod matrix;
pub mod model;
pub mod oracle;
pub mod seed;

pub use error::{Error, Result};

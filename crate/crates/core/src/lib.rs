//! Continuously monitored collisional models.
//!
//! A system `X` meets a fresh ancilla `Y` at every step, interacts through a
//! fixed unitary, and the outgoing ancilla is measured. The crate simulates
//! the averaged and the record-conditioned dynamics and evaluates the
//! information and entropy-production ledger of every collision.

pub mod classical;
pub mod cli;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod model;
pub mod presets;
pub mod random;
pub mod state;
pub mod thermo;

pub use error::{Error, Result};
pub use model::Cm2Model;
pub use state::DensityMatrix;

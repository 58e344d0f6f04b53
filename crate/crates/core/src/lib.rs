//! Qubit decoherence: classification of decoherence channels, collision-model
//! realizations, the associated Lindblad master equation and the
//! system-reservoir entanglement built up along the way.

pub mod channels;
pub mod cli;
pub mod collisions;
pub mod entanglement;
pub mod error;
pub mod lindblad;
pub mod smallmat;

pub use error::{Error, Result};

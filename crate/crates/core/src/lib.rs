//! Incompatibility robustness of quantum channel pairs, computed by
//! semidefinite programming over Choi matrices, and the witnesses built on it:
//! trace-distance backflow curves, teleportation fidelity and a robustness-based
//! CP-indivisibility measure.

pub mod error;
pub mod figures;
pub mod linalg;
pub mod qchannel;
pub mod random;
pub mod robustness;
pub mod sdp;
pub mod validation;
pub mod witness;

pub use error::{Error, Result};

//! Exact density-matrix simulation of two quantum private comparison
//! protocols: an orthogonal-state-based scheme with decoy Bell pairs and a
//! semi-quantum scheme in which the comparing parties can only measure in the
//! computational basis or reflect.
//!
//! The crate also carries the noise analysis for both schemes (closed-form
//! Bell-state fidelities under amplitude damping, bit flip, phase flip and
//! depolarizing channels, checked against exact Kraus evolution), an
//! adversary harness, and qubit-efficiency accounting.

pub mod adversary;
pub mod bits;
pub mod channel;
pub mod cli;
pub mod config;
pub mod efficiency;
pub mod error;
pub mod fidelity;
pub mod grid;
pub mod linalg;
pub mod noise;
pub mod osb;
pub mod rng;
pub mod sqpc;
pub mod state;
pub mod transcript;

pub use error::{Error, Result};

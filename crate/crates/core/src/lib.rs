//! Digital quantum simulation of spin models with superconducting qubits.
//!
//! The crate compiles Heisenberg and (transverse-field) Ising protocols into
//! sequences of XY exchange gates and single-qubit rotations, runs them either
//! as ideal unitaries or on a multilevel transmon–resonator model with Lindblad
//! noise, and reports digital errors, fidelity budgets, execution times and
//! Trotter error bounds.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod operator;
pub mod protocol;

pub use error::{Error, Result};

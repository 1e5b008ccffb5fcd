//! Exact simulation of Hadamard promise problems (HPPs).
//!
//! The crate builds HPP instances by recursive composition of small
//! fundamental problems, synthesizes qubit gates that satisfy a chosen
//! promise label, and solves instances two ways: with a quantum-n-switch
//! (one call per gate) and with fixed-order circuits whose black-box calls
//! are counted exactly.
//!
//! Module map:
//! - [`qmat`]: dense complex matrices, Pauli matrices, unitary checks.
//! - [`hadamard`]: ±1 sign matrices, their Kronecker composition and fast transforms.
//! - [`hpp`]: instances, composition trees, promise verification, gate synthesis.
//! - [`switch`]: state vectors and the n-switch solver.
//! - [`causal`]: circuit IR, executors with a query ledger, and the causal solvers.
//! - [`formats`]: JSON documents shared by the command line and the Python bindings.

pub mod causal;
pub mod formats;
pub mod hadamard;
pub mod hpp;
pub mod qmat;
pub mod switch;

pub use num_complex::Complex64 as C64;

/// Global entrywise tolerance for equality, unitarity and proportionality checks.
pub const TOLERANCE: f64 = 1e-9;

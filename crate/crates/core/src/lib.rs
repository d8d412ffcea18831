//! Dense truncated-Fock-space simulation and quantum-optimal-transport toolkit.
//!
//! The crate is organized around five areas:
//!
//! - [`fock`]: multi-mode truncated Fock spaces, ladder/quadrature/number
//!   operators, displacements, partial traces and Schatten norms;
//! - [`channels`]: beamsplitter loss channels with arbitrary environment
//!   states, thermal states, the Bose Ornstein-Uhlenbeck semigroup and the
//!   smoothing constant κ;
//! - [`transport`]: the bosonic Lipschitz seminorm, a certified lower-bound
//!   solver for the bosonic Wasserstein distance, diameter bounds, and
//!   channel contraction probes;
//! - [`qubit`]: the discrete-variable Wasserstein-1 toolbox (certified
//!   Lipschitz brackets, W1 dual solver, depolarizing noise, ℓ-local
//!   recovery schemes and the decay experiment);
//! - [`gkp`]: approximate grid states, logical displacement Paulis, the
//!   CNOT Gaussian gate, unsharp quadrature POVMs, Steane error correction
//!   and the encoded stabilizer recovery map.
//!
//! All operators are dense complex matrices (`nalgebra`); target scales are
//! total dimensions up to ~4096. Operators and channels are immutable after
//! construction and all operations are pure, so everything can be evaluated
//! concurrently. Randomized probes take explicit seeds and derive one stream
//! per trial, so parallel and serial schedules produce identical results.

pub mod channels;
pub mod error;
pub mod fock;
pub mod gkp;
pub mod linalg;
pub mod qubit;
pub mod rng;
pub mod transport;

pub use error::{Error, Result};
pub use fock::{DenseOperator, ModeSystem, QuantumState};

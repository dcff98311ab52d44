//! Mixing dynamics of dissipative SSH lattices with a lossy sublattice.
//!
//! The crate builds the effective non-Hermitian Hamiltonians of the
//! three-node dissipative beam splitter, the open chain and the balanced
//! ring ([`lattice`]), decomposes them and scans for exceptional points
//! ([`spectral`]), propagates amplitude vectors ([`dynamics`]), classifies
//! and times the approach to the stationary distribution ([`mixing`]) and
//! prepares initial states that avoid slow modes ([`initstate`]).

pub mod dynamics;
pub mod error;
pub mod initstate;
pub mod lattice;
pub mod mixing;
pub mod spectral;

pub use error::{Error, Result};

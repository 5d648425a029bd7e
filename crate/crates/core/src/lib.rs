//! Fock-space model of heralded time-bin qubits.
//!
//! Everything here works in a truncated Fock basis with `d` levels per mode
//! and at most two modes. Conventions, fixed once and used everywhere:
//!
//! * quadratures `x = (a + a†)/√2`, `p = (a − a†)/(i√2)`, vacuum variance ½;
//! * two-mode flat index is mode-1-major: `(n1, n2) -> n1*d + n2`;
//! * beam splitters follow the replacement rule
//!   `a1† -> τ a1† − ρ e^{−iφ} a2†`, `a2† -> ρ e^{iφ} a1† + τ a2†`;
//! * eight-port records are scaled so vacuum has unit variance per
//!   coordinate (one extra vacuum unit on top of the homodyne ½).
//!
//! The crate is `no_std` + `alloc`; all numerics are `f64`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod channels;
pub mod density;
pub mod eightport;
pub mod error;
pub mod fock;
pub mod generation;
pub mod linalg;
pub mod math;
pub mod seed;
pub mod tomography;
pub mod wigner;

pub use density::DensityMatrix;
pub use error::CoreError;
pub use fock::FockKet;
pub use linalg::CMat;

/// Crate version, for provenance records in downstream artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

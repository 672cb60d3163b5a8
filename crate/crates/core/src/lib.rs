//! Coherent-state (Bargmann) propagators of a two-level system coupled to
//! oscillator and spin baths, with a truncated-Fock reference oracle.
//!
//! Conventions: ħ = 1; 2×2 matrices use (down, up) slot order; kernels are
//! unnormalized, equal to exp{Σ α*_k α′_k}·I at t = 0.

pub mod canonical;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod osc_qnd;
pub mod quadrature;
pub mod spin_bath;
pub mod spin_bose;

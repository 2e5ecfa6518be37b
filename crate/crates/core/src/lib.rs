//! Diagonal Riccati stability for linear time-delay systems
//! `ẋ(t) = A x(t) + B x(t − τ)`.
//!
//! The crate decides whether diagonal `P, Q ≻ 0` satisfy
//! `AᵀP + PA + Q + PBQ⁻¹BᵀP ≺ 0`, returning either a verified certificate, a
//! Hadamard-product witness of infeasibility, or an honest `Unknown`.

pub mod error;
pub mod matcore;
pub mod pmatrix;
pub mod riccati;
pub mod classes;
pub mod transforms;
pub mod ddesim;
pub mod selftest;
pub mod cli;

pub use error::{Error, Result};

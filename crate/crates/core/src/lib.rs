//! Calculus on time scales and the averaging method for dynamic systems
//! `x^Δ = ε X(t, x)` whose right-hand side is Δ-periodic or geometric
//! Δ-quasiperiodic in shifts.
//!
//! The crate is organized bottom-up:
//!
//! * [`scale`]: time scales, jump operators, Δ-integral, Δ-derivative, `e_p`.
//! * [`shift`]: shift operators `δ±(s, t)` and periodicity certificates.
//! * [`averaging`]: partially averaged right-hand sides and the proximity constant.
//! * [`solver`]: solutions on a time scale and trajectory comparison.
//! * [`experiments`]: configuration-driven runs, ε-sweeps, CSV and SVG output.

pub mod averaging;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod scale;
pub mod shift;
pub mod solver;

pub use error::{Error, Result};

//! Thin-spectrum dynamics of the Lieb–Mattis antiferromagnet under a
//! linearly ramped staggered field.
//!
//! The crate covers the static continuum theory ([`spectrum`]), the
//! adiabatic-impulse approximation ([`kz`]), the exact Gaussian-state
//! evolution ([`exact`]) and two brute-force oracles: exact diagonalization
//! of the finite model ([`ed`]) and a grid solver for the continuum
//! Schrödinger equation ([`grid`]).

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ed;
pub mod error;
pub mod exact;
pub mod grid;
pub mod kz;
pub mod model;
pub mod numerics;
pub mod series;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{ModelParams, Schedule};
pub use series::TimeSeries;

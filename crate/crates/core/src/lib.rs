//! Channel generation for RIS-assisted mmWave links.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: scene coordinates, the wall-mounted RIS frame, array
//!   response vectors and scenario validation.
//! - [`propagation`]: element pattern, free-space and radar-range link
//!   budgets, the close-in (CI) path loss model and LOS probabilities.
//! - [`baseline`]: deterministic LOS and interacting-object cascades, used as
//!   a calculator and as an oracle for the stochastic generator.
//! - [`clusters`]: stochastic scatterer generation.
//! - [`channel`]: full `h`, `g`, `h_siso` realizations and the end-to-end
//!   effective channel `gᵀΘh + h_siso`.
//! - [`ris_control`]: RIS element response profiles and phase alignment.
//! - [`metrics`]: SNR, ergodic rate, power-scaling sweeps and rate heatmaps.
//! - [`dump`]: CSV and binary channel dump formats.
//!
//! Randomness is always drawn from [`rng::substream`], keyed by a master seed,
//! a realization index and a link tag, so every realization can be rebuilt in
//! isolation and parallel generation matches sequential generation bit for bit.

// `!(x >= 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod channel;
pub mod clusters;
pub mod dump;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod propagation;
pub mod ris_control;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;

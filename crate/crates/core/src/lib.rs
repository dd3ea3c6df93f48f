//! Simulation and analysis toolkit for the Kirchhoff-law–Johnson-noise (KLJN)
//! key exchange.
//!
//! The crate is organised bottom-up:
//!
//! * [`signal`]: band-limited Johnson noise synthesis and spectral estimators.
//! * [`circuit`]: trapezoidal time-domain solver for the Alice–cable–Bob loop.
//! * [`protocol`]: plain KLJN and random-resistor–random-temperature (RRRT)
//!   bit exchange.
//! * [`attack`]: the transient attack and the DC continuity experiment.
//! * [`privacy`]: XOR privacy amplification and leak accounting.
//! * [`stats`], [`config`], [`experiment`]: the experiment harness.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod circuit;
pub mod config;
pub mod error;
pub mod experiment;
pub mod privacy;
pub mod protocol;
pub mod signal;
pub mod stats;

pub use error::{Error, Result};

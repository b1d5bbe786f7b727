//! Free-space MDI-QKD key-rate engine with prefixed-threshold real-time
//! selection over turbulent channels.
//!
//! The crate models independent log-normal transmittance fluctuations on the
//! two arms of an MDI-QKD link, computes the 4-intensity decoy-state key rate
//! as a function of the instantaneous transmittance pair, and evaluates
//! post-selection strategies over the (eta_A, eta_B) plane: nothing, square
//! per-arm thresholds, a joint signal-to-noise/symmetry threshold, and the
//! R = 0 boundary of the channel-independent rate map.

pub mod cli;
pub mod decoy;
pub mod domains;
pub mod error;
pub mod keyrate;
pub mod physics;
pub mod quad;
pub mod thresholds;
pub mod turbulence;
pub mod validation;

pub use error::{Error, Result};

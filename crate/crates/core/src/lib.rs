//! Simulation of twisted-light ("OAM") wavepacket propagation and detection:
//! SLM phase masks, hypergeometric-Gaussian field evolution, transverse-momentum
//! group-delay accumulation, fiber-coupling mode projection, and Hong–Ou–Mandel
//! arrival-time extraction.
//!
//! The crate is organized as a pipeline:
//! [`hologram`] (mask + mode weights) → [`beam`] (fields) → [`propagate`]
//! (brute-force oracle) → [`groupdelay`] (⟨k⊥²⟩, delays) → [`coupling`]
//! (projection/collapse) → [`hom`] (coincidence scans and dip fits).

pub mod beam;
pub mod config;
pub mod coupling;
pub mod error;
pub mod grid;
pub mod groupdelay;
pub mod hologram;
pub mod hom;
pub mod propagate;
pub mod specfun;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;

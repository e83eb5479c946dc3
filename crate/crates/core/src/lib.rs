//! Ergodic capacity of dual-hop amplify-and-forward MIMO relay channels with
//! residual transceiver impairments.
//!
//! Two independent routes are provided:
//!
//! * [`capacity::asymptotic_capacity`] evaluates the large-system limit as a
//!   Shannon integral over the limiting eigenvalue density of
//!   `K_α/M = H₂ᴴH₂(I + αH₁H₁ᴴ)/M`. That density comes from a quartic
//!   equation for its Stieltjes transform ([`freeprob`]).
//! * [`capacity::mc_ergodic_capacity`] averages the exact finite-dimensional
//!   log-det expression over sampled Rayleigh channels ([`montecarlo`]).
//!
//! All quantities are in linear scale and nats unless stated otherwise.

pub mod capacity;
pub mod error;
pub mod freeprob;
pub mod linalg;
pub mod montecarlo;
pub mod params;

pub use capacity::{CapacityResult, Method};
pub use error::{Error, Result};
pub use freeprob::{Atom, SpectralDensity, StieltjesSample};
pub use montecarlo::{ChannelPair, Dims, EigenSampleSet};
pub use params::{Coefficients, Impairments, NuMode, SystemConfig, Violation};

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

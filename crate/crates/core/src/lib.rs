//! Deterministic network analysis of small-cell uplinks.
//!
//! The crate computes approximate distributions of the uplink interference,
//! the received signal power and the SIR of a tagged cell for an arbitrary,
//! fixed base-station deployment. UE positions, shadow fading and multi-path
//! fading are random; everything else is deterministic.
//!
//! Layout:
//!
//! * [`scenario`]: deployments (3GPP-style hotspot drops, hexagonal lattices),
//!   coverage regions and UE samplers.
//! * [`channel`]: path loss, fractional power control and shadowing moments.
//! * [`quadrature`]: Gauss-Hermite rules, the normal CDF and special functions.
//! * [`fading`]: dB-domain multi-path gain distributions.
//! * [`analysis`]: Gaussian approximations, the power-lognormal aggregate,
//!   and the signal / SIR CDFs.
//! * [`simulator`]: seeded Monte Carlo ground truth and KS distances.
//! * [`macroscopic`]: deployment-averaged and hexagonal-bound analyses.

pub mod analysis;
pub mod channel;
mod csv;
mod error;
pub mod fading;
pub mod macroscopic;
pub mod quadrature;
pub mod rng;
pub mod scenario;
pub mod simulator;

pub use crate::csv::format_sig;
pub use crate::error::{Error, Result};

/// dB to natural-log conversion factor, `10 / ln 10`.
pub const ZETA: f64 = 10.0 / std::f64::consts::LN_10;

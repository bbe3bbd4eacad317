//! Simulator for interferometric weak-value amplification of optical
//! beam deflections.
//!
//! A piezo-driven mirror inside a Sagnac interferometer gives the two
//! counter-propagating beams opposite transverse momentum kicks. Reading
//! the beam position only in the nearly-dark output port multiplies the
//! geometric deflection by the (purely imaginary) weak value of the
//! which-path operator, at the price of discarding most of the light.
//! This crate models that bench end to end:
//!
//! - [`states`]: which-path states, the weak value, the port
//!   transmission, and the first-order (collimated) pointer shift.
//! - [`geometry`]: piezo calibration chain (volts → tilt → transverse
//!   kick), lens imaging, the beam-size-dependent bench shift, and the
//!   amplification factor.
//! - [`darkport`]: the exact dark-port field on a grid, exact closed
//!   forms for centroid and port power, validity diagnostics, the
//!   first-order/exact gap, and the self-check comparing quadrature
//!   against the closed forms.
//! - [`detector`]: quadrant/CCD read-out, stray-light contamination,
//!   and the seeded sinusoidal-drive time series.
//! - [`lockin`]: dual-phase demodulation with an off-bin noise floor
//!   estimate and a lock decision.
//! - [`units`], [`scenario`]: unit-suffixed JSON configuration with an
//!   embedded reference preset (`dixon2009`) and content hashing.
//! - [`sweep`]: deflection-versus-beam-size and versus-drive tables
//!   with deterministic CSV/JSON emission.
//!
//! All randomness is seeded explicitly; identical configuration yields
//! byte-identical output.

pub mod darkport;
pub mod detector;
pub mod error;
pub mod geometry;
pub mod lockin;
pub mod scenario;
pub mod states;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};

//! Error taxonomy for the simulator.
//!
//! Two families matter to callers: configuration problems (bad scenario
//! values, malformed files, series parameters that cannot be demodulated) and
//! numeric/degenerate conditions reached with otherwise-valid inputs (a
//! fully dark port, a clipped detector, zero collected power). The CLI
//! maps the former to exit code 2 and the latter to exit code 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Pre- and post-selected states are orthogonal; the weak value diverges.
    #[error("degenerate post-selection: the output port is fully dark at phi = {phi} rad and the weak value diverges")]
    DegeneratePostselection { phi: f64 },

    /// No light reaches the output port at all, so moments are undefined.
    #[error("degenerate dark port: zero output power at phi = {phi} rad, k = {k} rad/m")]
    DegenerateDarkPort { phi: f64, k: f64 },

    /// A scalar argument is outside its physical domain.
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The sampling grid does not cover enough of the beam.
    #[error("grid covers only ±{halfwidth} m but ±{required} m is needed to bound truncation error")]
    GridExtent { halfwidth: f64, required: f64 },

    /// The beam (centroid ± 3σ) falls off the detector's active area.
    #[error("beam clips the detector: |centroid| + 3σ = {extent} m exceeds the active half-width {halfwidth} m")]
    Clipping { extent: f64, halfwidth: f64 },

    /// Zero total power collected; a centroid cannot be formed.
    #[error("zero collected power; centroid is undefined")]
    ZeroPower,

    /// Sample rate too low for the requested tone.
    #[error("sample rate {sample_rate} Hz cannot represent a {frequency} Hz tone (need > 2x)")]
    Nyquist { sample_rate: f64, frequency: f64 },

    /// Record too short for the demodulator to settle and average.
    #[error("record of {duration} s is too short: need at least {required} s for this time constant")]
    ShortRecord { duration: f64, required: f64 },

    /// Scenario-level validation or parse failure, with the offending field.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    /// Process exit code the CLI reports for this error: 2 for
    /// configuration/usage problems, 3 for numeric or degenerate
    /// conditions hit during an otherwise well-formed run.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config { .. }
            | Error::InvalidParameter { .. }
            | Error::GridExtent { .. }
            | Error::Nyquist { .. }
            | Error::ShortRecord { .. } => 2,
            Error::DegeneratePostselection { .. }
            | Error::DegenerateDarkPort { .. }
            | Error::Clipping { .. }
            | Error::ZeroPower => 3,
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Error {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Quantity parsing for scenario files.
//!
//! Scenario values may be written either as bare numbers (interpreted in
//! SI base units) or as strings with a unit suffix, e.g. "780 nm",
//! "7.2 deg", "91 pm/mV", "500 mV". Parsing is by longest matching
//! suffix, so "5 mV" is millivolts rather than a stray "V". Both the
//! micro sign and the Greek mu are accepted for 1e-6 prefixes.

use serde::de::{self, Deserializer};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Physical dimension a scenario field expects. `Any` accepts every
/// known suffix and is used for sweep bounds, whose dimension depends on
/// the sweep variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Angle,
    Voltage,
    Frequency,
    Power,
    Time,
    /// Actuator response, metres per volt.
    Response,
    Any,
}

const LENGTH: &[(&str, f64)] = &[
    ("fm", 1e-15),
    ("pm", 1e-12),
    ("nm", 1e-9),
    ("um", 1e-6),
    ("\u{00b5}m", 1e-6),
    ("\u{03bc}m", 1e-6),
    ("mm", 1e-3),
    ("cm", 1e-2),
    ("m", 1.0),
];

const ANGLE: &[(&str, f64)] = &[
    ("nrad", 1e-9),
    ("urad", 1e-6),
    ("\u{00b5}rad", 1e-6),
    ("\u{03bc}rad", 1e-6),
    ("mrad", 1e-3),
    ("rad", 1.0),
    ("deg", std::f64::consts::PI / 180.0),
];

const VOLTAGE: &[(&str, f64)] = &[
    ("nV", 1e-9),
    ("uV", 1e-6),
    ("\u{00b5}V", 1e-6),
    ("\u{03bc}V", 1e-6),
    ("mV", 1e-3),
    ("V", 1.0),
];

const FREQUENCY: &[(&str, f64)] = &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6)];

const POWER: &[(&str, f64)] = &[
    ("nW", 1e-9),
    ("uW", 1e-6),
    ("\u{00b5}W", 1e-6),
    ("\u{03bc}W", 1e-6),
    ("mW", 1e-3),
    ("W", 1.0),
];

const TIME: &[(&str, f64)] = &[
    ("us", 1e-6),
    ("\u{00b5}s", 1e-6),
    ("\u{03bc}s", 1e-6),
    ("ms", 1e-3),
    ("s", 1.0),
];

const RESPONSE: &[(&str, f64)] = &[
    ("pm/mV", 1e-9),
    ("nm/mV", 1e-6),
    ("um/mV", 1e-3),
    ("\u{00b5}m/mV", 1e-3),
    ("\u{03bc}m/mV", 1e-3),
    ("pm/V", 1e-12),
    ("nm/V", 1e-9),
    ("um/V", 1e-6),
    ("\u{00b5}m/V", 1e-6),
    ("\u{03bc}m/V", 1e-6),
    ("mm/V", 1e-3),
    ("m/V", 1.0),
];

fn tables(dim: Dimension) -> Vec<&'static [(&'static str, f64)]> {
    match dim {
        Dimension::Length => vec![LENGTH],
        Dimension::Angle => vec![ANGLE],
        Dimension::Voltage => vec![VOLTAGE],
        Dimension::Frequency => vec![FREQUENCY],
        Dimension::Power => vec![POWER],
        Dimension::Time => vec![TIME],
        Dimension::Response => vec![RESPONSE],
        Dimension::Any => vec![RESPONSE, LENGTH, ANGLE, VOLTAGE, FREQUENCY, POWER, TIME],
    }
}

fn suffix_list(dim: Dimension) -> String {
    let mut names: Vec<&str> = tables(dim)
        .into_iter()
        .flatten()
        .map(|(s, _)| *s)
        .filter(|s| !s.contains('\u{00b5}') && !s.contains('\u{03bc}'))
        .collect();
    names.dedup();
    names.join(", ")
}

/// Parse text like "7.2 deg" or "0.126" into SI base units for the given
/// dimension. Bare numbers are already in base units.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let trimmed = text.trim();
    // longest suffix first so "mV" beats "V" and "nm" beats "m"
    let mut candidates: Vec<(&str, f64)> = tables(dim)
        .into_iter()
        .flatten()
        .copied()
        .collect();
    candidates.sort_by_key(|(s, _)| std::cmp::Reverse(s.len()));
    for (suffix, scale) in candidates {
        if let Some(prefix) = trimmed.strip_suffix(suffix) {
            let prefix = prefix.trim_end();
            if prefix.is_empty() {
                continue;
            }
            if let Ok(v) = prefix.parse::<f64>() {
                return finite(v * scale, text);
            }
        }
    }
    if let Ok(v) = trimmed.parse::<f64>() {
        return finite(v, text);
    }
    Err(Error::config(
        "quantity",
        format!(
            "cannot parse {text:?}: expected a number, optionally suffixed with one of: {}",
            suffix_list(dim)
        ),
    ))
}

fn finite(v: f64, text: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(
            "quantity",
            format!("quantity {text:?} is not finite"),
        ))
    }
}

/// A scenario value that is either a bare number or a suffixed string.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawQuantity {
    Num(f64),
    Text(String),
}

impl RawQuantity {
    fn resolve<E: de::Error>(&self, dim: Dimension) -> std::result::Result<f64, E> {
        match self {
            RawQuantity::Num(v) => {
                if v.is_finite() {
                    Ok(*v)
                } else {
                    Err(E::custom("quantity is not finite"))
                }
            }
            RawQuantity::Text(s) => parse_quantity(s, dim).map_err(|e| E::custom(e.to_string())),
        }
    }
}

macro_rules! quantity_deserializer {
    ($name:ident, $opt_name:ident, $dim:expr) => {
        pub fn $name<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
            RawQuantity::deserialize(d)?.resolve($dim)
        }

        pub fn $opt_name<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Option<f64>, D::Error> {
            match Option::<RawQuantity>::deserialize(d)? {
                Some(raw) => raw.resolve($dim).map(Some),
                None => Ok(None),
            }
        }
    };
}

quantity_deserializer!(length, opt_length, Dimension::Length);
quantity_deserializer!(angle, opt_angle, Dimension::Angle);
quantity_deserializer!(voltage, opt_voltage, Dimension::Voltage);
quantity_deserializer!(frequency, opt_frequency, Dimension::Frequency);
quantity_deserializer!(power, opt_power, Dimension::Power);
quantity_deserializer!(time, opt_time, Dimension::Time);
quantity_deserializer!(response, opt_response, Dimension::Response);
quantity_deserializer!(quantity, opt_quantity, Dimension::Any);

/// Deserialize a list of angles, each a number or suffixed string.
pub fn angle_list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let raw = Vec::<RawQuantity>::deserialize(d)?;
    raw.iter().map(|q| q.resolve(Dimension::Angle)).collect()
}

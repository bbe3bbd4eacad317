//! Scenario files: the single configuration document that pins every
//! physical constant of a simulated bench.
//!
//! A scenario is JSON with unit-suffixed quantities ("780 nm",
//! "7.2 deg", "91 pm/mV"); bare numbers are SI base units. Parsing
//! rejects unknown keys so typos fail loudly, and validation names the
//! offending field. The embedded preset `dixon2009` pins the reference
//! bench: 780 nm beam of size 640 μm, a 2% bright-fraction port, piezo
//! response 91 pm/mV on a 3.5 cm lever, quadrant detection at 1240 μm
//! beam size, and a 500 mV / 100 Hz drive.
//!
//! Scenarios have a canonical serialized form (beam size normalized to
//! the field `a`, compact JSON) whose SHA-256 is stamped into every
//! output table so results are traceable to their exact configuration.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;

use crate::detector::{DetectorConfig, DetectorKind, CALIBRATED_FLOOR_NOISE_RMS};
use crate::error::{Error, Result};
use crate::geometry::{sigma_at_detector, OpticalLayout, PiezoCalibration};
use crate::lockin::DEFAULT_SNR_THRESHOLD;
use crate::states::{phi_for_postselection_probability, GaussianMeter};
use crate::units;

/// Distances along the optical axis. `image_distance` is the signed
/// lens-image position of the detector plane (negative = virtual image
/// behind the lens); when absent the detector beam size must be given
/// directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(deserialize_with = "units::length")]
    pub lens_to_mirror: f64,
    #[serde(deserialize_with = "units::length")]
    pub mirror_to_detector: f64,
    #[serde(default, deserialize_with = "units::opt_length")]
    pub image_distance: Option<f64>,
}

/// Piezo actuator calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiezoSection {
    /// Tip travel per drive volt (m/V).
    #[serde(deserialize_with = "units::response")]
    pub response: f64,
    /// Mirror pivot lever arm (m).
    #[serde(deserialize_with = "units::length")]
    pub lever_arm: f64,
}

/// Detector model and noise environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub kind: DetectorKind,
    #[serde(deserialize_with = "units::length")]
    pub active_halfwidth: f64,
    /// Centroid-equivalent white noise per sample; defaults to the
    /// calibrated floor value.
    #[serde(default = "default_noise_rms", deserialize_with = "units::length")]
    pub noise_rms: f64,
    #[serde(default)]
    pub stray_power_fraction: f64,
    #[serde(default, deserialize_with = "units::length")]
    pub stray_centroid: f64,
    #[serde(default = "default_stray_reference", deserialize_with = "units::power")]
    pub stray_reference_power: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_noise_rms() -> f64 {
    CALIBRATED_FLOOR_NOISE_RMS
}

fn default_stray_reference() -> f64 {
    63e-6
}

fn default_seed() -> u64 {
    1
}

/// Demodulation settings for noisy runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockinSection {
    #[serde(deserialize_with = "units::frequency")]
    pub sample_rate: f64,
    #[serde(deserialize_with = "units::time")]
    pub duration: f64,
    #[serde(deserialize_with = "units::time")]
    pub tau: f64,
    #[serde(default = "default_snr_threshold")]
    pub snr_threshold: f64,
}

fn default_snr_threshold() -> f64 {
    DEFAULT_SNR_THRESHOLD
}

/// Which scenario quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Sigma,
    Phi,
    DriveVpp,
    KTimesA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// Sweep definition: `start`/`stop` take the unit of the variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    #[serde(deserialize_with = "units::quantity")]
    pub start: f64,
    #[serde(deserialize_with = "units::quantity")]
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepSection {
    /// The sweep grid, endpoints inclusive.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.start + f * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

/// A complete bench description. Exactly one of `a` (beam size, the
/// Gaussian intensity sigma) or `beam_radius_e2` (1/e² intensity radius,
/// = 2a) must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(deserialize_with = "units::length")]
    pub wavelength: f64,
    #[serde(default, deserialize_with = "units::opt_length")]
    pub a: Option<f64>,
    #[serde(default, deserialize_with = "units::opt_length")]
    pub beam_radius_e2: Option<f64>,
    /// Relative phase between the counter-propagating paths (rad).
    #[serde(deserialize_with = "units::angle")]
    pub phi: f64,
    /// Beam size at the detector plane; derived from `image_distance`
    /// when absent.
    #[serde(default, deserialize_with = "units::opt_length")]
    pub sigma_detector: Option<f64>,
    #[serde(deserialize_with = "units::voltage")]
    pub drive_vpp: f64,
    #[serde(deserialize_with = "units::frequency")]
    pub drive_freq: f64,
    #[serde(deserialize_with = "units::power")]
    pub input_power: f64,
    /// Port phases for deflection-vs-beam-size tables; the first entry
    /// is the reference angle, the rest are illustrative companions.
    #[serde(default, deserialize_with = "units::angle_list")]
    pub fig2_phi_list: Vec<f64>,
    pub geometry: GeometrySection,
    pub piezo: PiezoSection,
    pub detector: DetectorSection,
    pub lockin: LockinSection,
    pub sweep: SweepSection,
}

fn default_name() -> String {
    "custom".to_owned()
}

impl Scenario {
    /// Resolved beam size (m).
    pub fn a(&self) -> f64 {
        match (self.a, self.beam_radius_e2) {
            (Some(a), _) => a,
            (None, Some(w)) => w / 2.0,
            (None, None) => f64::NAN, // rejected by validate()
        }
    }

    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn meter(&self) -> Result<GaussianMeter> {
        GaussianMeter::new(self.a(), self.k0())
    }

    pub fn layout(&self) -> OpticalLayout {
        OpticalLayout {
            a: self.a(),
            k0: self.k0(),
            l_lm: self.geometry.lens_to_mirror,
            l_md: self.geometry.mirror_to_detector,
            s_i: self.geometry.image_distance,
        }
    }

    pub fn cal(&self) -> PiezoCalibration {
        PiezoCalibration {
            response: self.piezo.response,
            lever_arm: self.piezo.lever_arm,
        }
    }

    pub fn detector_config(&self) -> DetectorConfig {
        DetectorConfig {
            kind: self.detector.kind,
            active_halfwidth: self.detector.active_halfwidth,
            noise_rms: self.detector.noise_rms,
            stray_power_fraction: self.detector.stray_power_fraction,
            stray_centroid: self.detector.stray_centroid,
            stray_reference_power: self.detector.stray_reference_power,
            seed: self.detector.seed,
        }
    }

    /// Beam size at the detector: explicit value, or propagated through
    /// the imaging geometry when `image_distance` is set.
    pub fn sigma(&self) -> Result<f64> {
        match self.sigma_detector {
            Some(s) => Ok(s),
            None => sigma_at_detector(&self.layout()),
        }
    }

    /// Check every invariant, naming the violated field.
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: &str| Err(Error::config(field, msg));
        if !(self.wavelength > 0.0) || !self.wavelength.is_finite() {
            return fail("wavelength", "must be positive and finite");
        }
        match (self.a, self.beam_radius_e2) {
            (Some(_), Some(_)) => {
                return fail("a", "give exactly one of a and beam_radius_e2, not both")
            }
            (None, None) => return fail("a", "give exactly one of a and beam_radius_e2"),
            _ => {}
        }
        if !(self.a() > 0.0) || !self.a().is_finite() {
            return fail("a", "beam size must be positive and finite");
        }
        if !(self.phi > 0.0 && self.phi <= PI) {
            return fail("phi", "phase must lie in (0, pi]");
        }
        for (i, phi) in self.fig2_phi_list.iter().enumerate() {
            if !(*phi > 0.0 && *phi < PI) {
                return Err(Error::config(
                    format!("fig2_phi_list[{i}]"),
                    "phase must lie in (0, pi)",
                ));
            }
        }
        if !(self.geometry.lens_to_mirror > 0.0) || !self.geometry.lens_to_mirror.is_finite() {
            return fail("geometry.lens_to_mirror", "must be positive and finite");
        }
        if !(self.geometry.mirror_to_detector > 0.0)
            || !self.geometry.mirror_to_detector.is_finite()
        {
            return fail("geometry.mirror_to_detector", "must be positive and finite");
        }
        if let Some(s_i) = self.geometry.image_distance {
            if s_i == 0.0 || !s_i.is_finite() {
                return fail("geometry.image_distance", "must be nonzero and finite");
            }
        }
        if self.sigma_detector.is_none() && self.geometry.image_distance.is_none() {
            return fail(
                "sigma_detector",
                "give sigma_detector or geometry.image_distance to fix the detector beam size",
            );
        }
        if let Some(sigma) = self.sigma_detector {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return fail("sigma_detector", "must be positive and finite");
            }
            if sigma < self.a() {
                return fail(
                    "sigma_detector",
                    "beam at the detector cannot be smaller than the collimated size a",
                );
            }
        }
        if !(self.piezo.response > 0.0) || !self.piezo.response.is_finite() {
            return fail("piezo.response", "must be positive and finite");
        }
        if !(self.piezo.lever_arm > 0.0) || !self.piezo.lever_arm.is_finite() {
            return fail("piezo.lever_arm", "must be positive and finite");
        }
        if !(self.drive_vpp >= 0.0) || !self.drive_vpp.is_finite() {
            return fail("drive_vpp", "must be non-negative and finite");
        }
        if !(self.drive_freq > 0.0) || !self.drive_freq.is_finite() {
            return fail("drive_freq", "must be positive and finite");
        }
        if !(self.input_power > 0.0) || !self.input_power.is_finite() {
            return fail("input_power", "must be positive and finite");
        }
        self.detector_config().validate()?;
        if !(self.lockin.sample_rate > 2.0 * self.drive_freq) {
            return fail(
                "lockin.sample_rate",
                "must exceed twice the drive frequency",
            );
        }
        if !(self.lockin.tau > 0.0) || !self.lockin.tau.is_finite() {
            return fail("lockin.tau", "must be positive and finite");
        }
        if !(self.lockin.duration >= 10.0 * self.lockin.tau) {
            return fail(
                "lockin.duration",
                "record must span at least ten time constants",
            );
        }
        if !(self.lockin.snr_threshold > 0.0) || !self.lockin.snr_threshold.is_finite() {
            return fail("lockin.snr_threshold", "must be positive and finite");
        }
        self.validate_sweep()?;
        Ok(())
    }

    fn validate_sweep(&self) -> Result<()> {
        let s = &self.sweep;
        let fail = |field: &str, msg: &str| Err(Error::config(field, msg));
        if s.points < 2 {
            return fail("sweep.points", "need at least two points");
        }
        if !s.start.is_finite() || !s.stop.is_finite() || s.start == s.stop {
            return fail("sweep.start", "bounds must be finite and distinct");
        }
        if s.spacing == Spacing::Log && (s.start <= 0.0 || s.stop <= 0.0) {
            return fail("sweep.spacing", "log spacing needs positive bounds");
        }
        match s.variable {
            SweepVariable::Sigma => {
                if s.start < self.a() || s.stop < self.a() {
                    return fail("sweep.start", "sigma sweep cannot go below the beam size a");
                }
            }
            SweepVariable::Phi => {
                if !(s.start > 0.0 && s.start < PI && s.stop > 0.0 && s.stop < PI) {
                    return fail("sweep.start", "phi sweep must stay inside (0, pi)");
                }
            }
            SweepVariable::DriveVpp => {
                if s.start < 0.0 || s.stop < 0.0 {
                    return fail("sweep.start", "drive sweep cannot be negative");
                }
            }
            SweepVariable::KTimesA => {
                if s.start <= 0.0 || s.stop <= 0.0 {
                    return fail("sweep.start", "dimensionless kick sweep must be positive");
                }
            }
        }
        Ok(())
    }

    /// Non-fatal observations about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.a().is_finite() && self.a() * self.k0() <= 100.0 {
            out.push(format!(
                "beam is not well collimated (a*k0 = {:.1} <= 100); the transverse model is marginal",
                self.a() * self.k0()
            ));
        }
        if self.detector.stray_power_fraction > 0.5 {
            out.push("stray light exceeds half the detected power".to_owned());
        }
        out
    }

    /// Copy with the beam size normalized to the `a` field.
    fn canonicalized(&self) -> Scenario {
        let mut c = self.clone();
        c.a = Some(self.a());
        c.beam_radius_e2 = None;
        c
    }

    /// Canonical compact JSON; the basis of the scenario hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.canonicalized()).expect("scenario serializes")
    }

    /// Pretty canonical JSON, suitable for writing back to a file.
    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(&self.canonicalized()).expect("scenario serializes")
    }

    /// SHA-256 of the canonical form, lowercase hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The reference bench preset.
pub fn preset(name: &str) -> Result<Scenario> {
    match name {
        "dixon2009" => Ok(dixon2009()),
        other => Err(Error::config(
            "preset",
            format!("unknown preset {other:?}; available: dixon2009"),
        )),
    }
}

fn dixon2009() -> Scenario {
    Scenario {
        name: "dixon2009".to_owned(),
        wavelength: 780e-9,
        a: Some(640e-6),
        beam_radius_e2: None,
        // port tuned to a 2% bright fraction
        phi: phi_for_postselection_probability(0.02).expect("valid bright fraction"),
        sigma_detector: Some(1240e-6),
        drive_vpp: 0.5,
        drive_freq: 100.0,
        input_power: 3.2e-3,
        fig2_phi_list: vec![
            7.2 * PI / 180.0,
            11.0 * PI / 180.0,
            22.0 * PI / 180.0,
        ],
        geometry: GeometrySection {
            lens_to_mirror: 0.48,
            mirror_to_detector: 1.14,
            image_distance: None,
        },
        piezo: PiezoSection {
            response: 9.1e-8,
            lever_arm: 0.035,
        },
        detector: DetectorSection {
            kind: DetectorKind::Quadrant,
            active_halfwidth: 5e-3,
            noise_rms: CALIBRATED_FLOOR_NOISE_RMS,
            stray_power_fraction: 0.0,
            stray_centroid: 0.0,
            stray_reference_power: 63e-6,
            seed: 1,
        },
        lockin: LockinSection {
            sample_rate: 2000.0,
            duration: 8.5,
            tau: 0.05,
            snr_threshold: DEFAULT_SNR_THRESHOLD,
        },
        sweep: SweepSection {
            variable: SweepVariable::Sigma,
            start: 700e-6,
            stop: 1400e-6,
            points: 15,
            spacing: Spacing::Linear,
        },
    }
}

/// Parse and fully validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let scenario: Scenario =
        serde_json::from_str(text).map_err(|e| Error::config("json", e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn preset_pins_the_reference_bench() {
        let s = preset("dixon2009").unwrap();
        s.validate().unwrap();
        assert_relative_eq!(s.wavelength, 780e-9);
        assert_relative_eq!(s.a(), 640e-6);
        assert_relative_eq!(s.phi, 0.2837941092, max_relative = 1e-9);
        assert_relative_eq!(s.sigma().unwrap(), 1240e-6);
        assert_relative_eq!(s.drive_vpp, 0.5);
        assert_relative_eq!(s.geometry.lens_to_mirror, 0.48);
        assert_relative_eq!(s.geometry.mirror_to_detector, 1.14);
        assert_relative_eq!(s.piezo.response, 9.1e-8);
        assert_relative_eq!(s.piezo.lever_arm, 0.035);
        assert_relative_eq!(s.fig2_phi_list[0], 7.2 * PI / 180.0);
        assert_eq!(s.fig2_phi_list.len(), 3);
        assert!(preset("nope").is_err());
    }

    #[test]
    fn preset_warnings_are_quiet() {
        assert!(preset("dixon2009").unwrap().warnings().is_empty());
    }

    #[test]
    fn parse_accepts_unit_suffixes() {
        let text = r#"{
            "name": "suffixed",
            "wavelength": "780 nm",
            "a": "640 um",
            "phi": "7.2 deg",
            "sigma_detector": "1.24 mm",
            "drive_vpp": "500 mV",
            "drive_freq": "100 Hz",
            "input_power": "3.2 mW",
            "geometry": {"lens_to_mirror": "48 cm", "mirror_to_detector": "1.14 m"},
            "piezo": {"response": "91 pm/mV", "lever_arm": "3.5 cm"},
            "detector": {"kind": "quadrant", "active_halfwidth": "5 mm"},
            "lockin": {"sample_rate": "2 kHz", "duration": "8.5 s", "tau": "50 ms"},
            "sweep": {"variable": "sigma", "start": "700 um", "stop": "1.4 mm",
                      "points": 15, "spacing": "linear"}
        }"#;
        let s = parse_scenario(text).unwrap();
        assert_relative_eq!(s.phi, 0.12566, max_relative = 1e-4);
        assert_relative_eq!(s.piezo.response, 9.1e-8);
        assert_relative_eq!(s.geometry.lens_to_mirror, 0.48);
        assert_relative_eq!(s.lockin.tau, 0.05);
        assert_eq!(s.detector.seed, 1);
        assert_relative_eq!(s.detector.noise_rms, CALIBRATED_FLOOR_NOISE_RMS);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut doc: serde_json::Value =
            serde_json::from_str(&preset("dixon2009").unwrap().emit()).unwrap();
        doc["surprise"] = serde_json::json!(1);
        let err = parse_scenario(&doc.to_string()).unwrap_err();
        assert!(err.to_string().contains("surprise"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn negative_distance_is_rejected_by_name() {
        let mut s = preset("dixon2009").unwrap();
        s.geometry.mirror_to_detector = -1.14;
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("mirror_to_detector"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn beam_size_must_be_given_exactly_once() {
        let mut s = preset("dixon2009").unwrap();
        s.beam_radius_e2 = Some(1280e-6);
        assert!(s.validate().is_err());
        s.a = None;
        s.validate().unwrap();
        assert_relative_eq!(s.a(), 640e-6);
        s.beam_radius_e2 = None;
        assert!(s.validate().is_err());
    }

    #[test]
    fn detector_beam_size_needs_a_source() {
        let mut s = preset("dixon2009").unwrap();
        s.sigma_detector = None;
        assert!(s.validate().is_err());
        s.geometry.image_distance = Some(-0.30);
        s.validate().unwrap();
        assert!(s.sigma().unwrap() > s.a());
        // explicit sigma below the collimated size is unphysical
        s.geometry.image_distance = None;
        s.sigma_detector = Some(100e-6);
        assert!(s.validate().is_err());
    }

    #[test]
    fn phase_range_is_enforced() {
        let mut s = preset("dixon2009").unwrap();
        s.phi = 0.0;
        assert!(s.validate().is_err());
        s.phi = PI + 0.1;
        assert!(s.validate().is_err());
        s.phi = PI;
        s.validate().unwrap();
        s.phi = 0.2837941092;
        s.fig2_phi_list = vec![0.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn lockin_and_sweep_constraints() {
        let mut s = preset("dixon2009").unwrap();
        s.lockin.sample_rate = 150.0;
        assert!(s.validate().is_err());

        let mut s = preset("dixon2009").unwrap();
        s.lockin.duration = 0.3;
        assert!(s.validate().is_err());

        let mut s = preset("dixon2009").unwrap();
        s.sweep.points = 1;
        assert!(s.validate().is_err());

        let mut s = preset("dixon2009").unwrap();
        s.sweep.start = 100e-6; // below the beam size
        assert!(s.validate().is_err());

        let mut s = preset("dixon2009").unwrap();
        s.sweep = SweepSection {
            variable: SweepVariable::DriveVpp,
            start: 0.0,
            stop: 1.0,
            points: 10,
            spacing: Spacing::Log,
        };
        assert!(s.validate().is_err());
        s.sweep.spacing = Spacing::Linear;
        s.validate().unwrap();
    }

    #[test]
    fn sweep_grids_hit_both_endpoints() {
        let lin = SweepSection {
            variable: SweepVariable::Sigma,
            start: 700e-6,
            stop: 1400e-6,
            points: 15,
            spacing: Spacing::Linear,
        };
        let v = lin.values();
        assert_eq!(v.len(), 15);
        assert_relative_eq!(v[0], 700e-6);
        assert_relative_eq!(v[14], 1400e-6);
        assert_relative_eq!(v[7], 1050e-6, max_relative = 1e-12);

        let log = SweepSection {
            variable: SweepVariable::DriveVpp,
            start: 1e-7,
            stop: 1.0,
            points: 36,
            spacing: Spacing::Log,
        };
        let v = log.values();
        assert_eq!(v.len(), 36);
        assert_relative_eq!(v[0], 1e-7, max_relative = 1e-12);
        assert_relative_eq!(v[35], 1.0, max_relative = 1e-12);
        // constant ratio between neighbors
        let r0 = v[1] / v[0];
        let r20 = v[21] / v[20];
        assert_relative_eq!(r0, r20, max_relative = 1e-9);
    }

    #[test]
    fn emit_parse_round_trip_is_identity() {
        let s = preset("dixon2009").unwrap();
        let back = parse_scenario(&s.emit()).unwrap();
        assert_eq!(back, s.canonicalized());
        assert_eq!(back.hash(), s.hash());
        assert_eq!(s.hash().len(), 64);
        assert!(s.hash().chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn hash_tracks_content() {
        let s = preset("dixon2009").unwrap();
        let mut t = s.clone();
        t.drive_vpp = 0.25;
        assert_ne!(s.hash(), t.hash());
        // beam size normalization: w = 2a hashes like a
        let mut u = s.clone();
        u.a = None;
        u.beam_radius_e2 = Some(1280e-6);
        assert_eq!(u.hash(), s.hash());
    }

    #[test]
    fn malformed_json_names_the_location() {
        let err = parse_scenario("{\"wavelength\": ").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn collimation_warning_fires_for_tiny_beams() {
        let mut s = preset("dixon2009").unwrap();
        s.a = Some(5e-6); // a*k0 ~ 40
        assert!(!s.warnings().is_empty());
    }

    proptest! {
        #[test]
        fn round_trip_preserves_random_valid_scenarios(
            a_um in 200.0f64..2000.0,
            phi in 0.05f64..2.5,
            sigma_scale in 1.0f64..4.0,
            vpp in 1e-7f64..2.0,
            l_lm in 0.1f64..2.0,
            l_md in 0.1f64..3.0,
            seed in 0u64..1_000_000,
        ) {
            let mut s = preset("dixon2009").unwrap();
            s.a = Some(a_um * 1e-6);
            s.phi = phi;
            s.sigma_detector = Some(a_um * 1e-6 * sigma_scale);
            s.drive_vpp = vpp;
            s.geometry.lens_to_mirror = l_lm;
            s.geometry.mirror_to_detector = l_md;
            s.detector.seed = seed;
            s.sweep.start = a_um * 1e-6;
            s.sweep.stop = a_um * 2e-6;
            prop_assert!(s.validate().is_ok());
            let back = parse_scenario(&s.emit()).unwrap();
            prop_assert_eq!(back, s.canonicalized());
        }
    }
}

//! Bench geometry and the drive → deflection calibration chain.
//!
//! The piezo pushes on one edge of the mirror mount, so actuator travel
//! divided by the lever arm gives the mirror tilt; the reflected beam
//! turns by twice that, which for a beam of wavenumber k0 is a transverse
//! momentum kick k = 2θ·k0. A lens between the interferometer and the
//! detector rescales the beam (size σ at the detector) and multiplies the
//! weak-value pointer shift by a purely geometric factor. All voltages
//! and the deflections derived from them follow the peak-to-peak
//! convention of the drive electronics.

use crate::error::{Error, Result};
use crate::states::{weak_value, GaussianMeter};

/// Piezo actuator + mirror mount calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiezoCalibration {
    /// Actuator travel per drive volt (m/V).
    pub response: f64,
    /// Mirror pivot-to-actuator distance (m).
    pub lever_arm: f64,
}

impl PiezoCalibration {
    pub fn validate(&self) -> Result<()> {
        if !(self.response > 0.0) || !self.response.is_finite() {
            return Err(Error::InvalidParameter {
                name: "piezo.response",
                value: self.response,
                reason: "must be positive and finite",
            });
        }
        if !(self.lever_arm > 0.0) || !self.lever_arm.is_finite() {
            return Err(Error::InvalidParameter {
                name: "piezo.lever_arm",
                value: self.lever_arm,
                reason: "must be positive and finite",
            });
        }
        Ok(())
    }
}

/// Distances and beam parameters of the bench.
///
/// `s_i` is the signed image distance of the collimating lens (negative
/// when the lens produces a virtual image and the beam diverges toward
/// the mirror). The image-to-mirror distance is derived, never stored:
/// `l_im = l_lm + s_i`, which keeps the geometric identities below exact.
/// Configurations may omit `s_i` and state the detector-plane beam size
/// directly instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalLayout {
    /// Beam size at the lens (m, intensity standard deviation).
    pub a: f64,
    /// Optical wavenumber (rad/m).
    pub k0: f64,
    /// Lens-to-mirror distance (m).
    pub l_lm: f64,
    /// Mirror-to-detector distance (m).
    pub l_md: f64,
    /// Signed lens image distance (m), if the lens model is in use.
    pub s_i: Option<f64>,
}

impl OpticalLayout {
    /// Image-to-mirror distance `l_lm + s_i` (signed).
    pub fn l_im(&self) -> Option<f64> {
        self.s_i.map(|s| self.l_lm + s)
    }

    pub fn meter(&self) -> GaussianMeter {
        GaussianMeter {
            a: self.a,
            k0: self.k0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::InvalidParameter {
                name: "a",
                value: self.a,
                reason: "beam size must be positive and finite",
            });
        }
        if !(self.k0 > 0.0) || !self.k0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "k0",
                value: self.k0,
                reason: "wavenumber must be positive and finite",
            });
        }
        if !(self.l_lm > 0.0) || !self.l_lm.is_finite() {
            return Err(Error::InvalidParameter {
                name: "l_lm",
                value: self.l_lm,
                reason: "lens-to-mirror distance must be positive and finite",
            });
        }
        if !(self.l_md > 0.0) || !self.l_md.is_finite() {
            return Err(Error::InvalidParameter {
                name: "l_md",
                value: self.l_md,
                reason: "mirror-to-detector distance must be positive and finite",
            });
        }
        if let Some(s) = self.s_i {
            if s == 0.0 || !s.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "s_i",
                    value: s,
                    reason: "image distance must be nonzero and finite",
                });
            }
        }
        Ok(())
    }
}

/// Mirror tilt produced by a drive voltage: travel / lever arm
/// (small-angle, linear actuator model). Linear in the drive, so it
/// applies equally to instantaneous and peak-to-peak values.
pub fn mirror_angle(drive_volts: f64, cal: &PiezoCalibration) -> f64 {
    drive_volts * cal.response / cal.lever_arm
}

/// Actuator travel for a drive voltage.
pub fn piezo_travel(drive_volts: f64, cal: &PiezoCalibration) -> f64 {
    drive_volts * cal.response
}

/// Transverse momentum kick from a mirror tilt: the beam turns by 2θ,
/// so k = 2θ·k0.
pub fn momentum_kick(theta_mirror: f64, k0: f64) -> f64 {
    2.0 * theta_mirror * k0
}

/// Detector-plane displacement the kick would cause with no
/// interferometer in the path: δ = k·l_md/k0.
pub fn unamplified_deflection(k: f64, l_md: f64, k0: f64) -> f64 {
    k * l_md / k0
}

/// Geometric enhancement from the diverging/converging beam:
/// F = l_im·(l_im + l_md)/s_i².
pub fn lens_factor(layout: &OpticalLayout) -> Result<f64> {
    let s_i = layout.s_i.ok_or(Error::InvalidParameter {
        name: "s_i",
        value: f64::NAN,
        reason: "image distance required to evaluate the lens factor",
    })?;
    if s_i == 0.0 {
        return Err(Error::InvalidParameter {
            name: "s_i",
            value: 0.0,
            reason: "image distance must be nonzero",
        });
    }
    let l_im = layout.l_lm + s_i;
    Ok(l_im * (l_im + layout.l_md) / (s_i * s_i))
}

/// Signed detector-plane beam size a·(l_im + l_md)/s_i. Negative values
/// are a sign-convention artifact; [`sigma_at_detector`] exposes the
/// physical magnitude, while identity checks may use the signed value.
pub fn sigma_at_detector_signed(layout: &OpticalLayout) -> Result<f64> {
    let s_i = layout.s_i.ok_or(Error::InvalidParameter {
        name: "s_i",
        value: f64::NAN,
        reason: "image distance required to derive the detector beam size",
    })?;
    if s_i == 0.0 {
        return Err(Error::InvalidParameter {
            name: "s_i",
            value: 0.0,
            reason: "image distance must be nonzero",
        });
    }
    let l_im = layout.l_lm + s_i;
    Ok(layout.a * (l_im + layout.l_md) / s_i)
}

/// Beam size at the detector (m, magnitude).
pub fn sigma_at_detector(layout: &OpticalLayout) -> Result<f64> {
    sigma_at_detector_signed(layout).map(f64::abs)
}

/// Post-selected pointer shift in measured bench quantities:
/// ⟨x⟩ = 2k·|A_w|·(σ²·l_lm + σ·a·l_md)/(l_lm + l_md).
///
/// Physical configurations have σ ≥ a (the scenario layer enforces
/// this); the signed-σ form is also algebraically valid and equals
/// lens_factor × the collimated shift, which the property tests verify.
pub fn pointer_shift_experimental(
    k: f64,
    phi: f64,
    sigma: f64,
    layout: &OpticalLayout,
) -> Result<f64> {
    let aw_mag = weak_value(phi)?.norm();
    Ok(2.0 * k * aw_mag * (sigma * sigma * layout.l_lm + sigma * layout.a * layout.l_md)
        / (layout.l_lm + layout.l_md))
}

/// Amplification factor: pointer shift over the unamplified deflection.
pub fn amplification_factor(pointer_shift: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            reason: "unamplified deflection must be nonzero and finite",
        });
    }
    Ok(pointer_shift / delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{pointer_shift_collimated, Interaction};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const K0_780NM: f64 = 2.0 * std::f64::consts::PI / 780e-9;

    fn bench_cal() -> PiezoCalibration {
        PiezoCalibration {
            response: 9.1e-8, // 91 pm/mV
            lever_arm: 0.035,
        }
    }

    fn bench_layout(s_i: Option<f64>) -> OpticalLayout {
        OpticalLayout {
            a: 640e-6,
            k0: K0_780NM,
            l_lm: 0.48,
            l_md: 1.14,
            s_i,
        }
    }

    #[test]
    fn angle_and_travel_at_main_drive() {
        let cal = bench_cal();
        let theta = mirror_angle(0.5, &cal);
        assert!((theta - 1.30e-6).abs() < 0.01e-6, "got {theta}");
        assert_relative_eq!(piezo_travel(0.5, &cal), 45.5e-9, max_relative = 1e-12);
        assert_eq!(mirror_angle(0.0, &cal), 0.0);
        assert_eq!(piezo_travel(0.0, &cal), 0.0);
    }

    #[test]
    fn angle_and_travel_at_detection_floor() {
        let cal = bench_cal();
        let theta = mirror_angle(220e-9, &cal);
        assert!(
            (520e-15..=600e-15).contains(&theta),
            "floor angle {theta} outside 560 ± 40 frad"
        );
        let travel = piezo_travel(220e-9, &cal);
        assert!(
            (18e-15..=22e-15).contains(&travel),
            "floor travel {travel} outside 20 ± 2 fm"
        );
    }

    #[test]
    fn kick_at_main_drive_and_floor() {
        let cal = bench_cal();
        let k = momentum_kick(mirror_angle(0.5, &cal), K0_780NM);
        assert!((k - 20.94).abs() < 0.1, "got {k}");
        let k_floor = momentum_kick(mirror_angle(220e-9, &cal), K0_780NM);
        assert!((k_floor - 9.22e-6).abs() < 0.05e-6, "got {k_floor}");
        assert_eq!(momentum_kick(0.0, K0_780NM), 0.0);
    }

    #[test]
    fn unamplified_deflection_chain() {
        let cal = bench_cal();
        let k = momentum_kick(mirror_angle(0.5, &cal), K0_780NM);
        let delta = unamplified_deflection(k, 1.14, K0_780NM);
        assert!(
            (delta / 2.95e-6 - 1.0).abs() < 0.01,
            "delta {delta} not within 1% of 2.95 um"
        );
        let delta_floor = unamplified_deflection(9.22e-6, 1.14, K0_780NM);
        assert!((delta_floor - 1.31e-12).abs() < 0.01e-12, "got {delta_floor}");
        assert_eq!(unamplified_deflection(0.0, 1.14, K0_780NM), 0.0);
    }

    #[test]
    fn lens_factor_cases() {
        // diverging beam imaged 30 cm behind the lens
        let f = lens_factor(&bench_layout(Some(-0.30))).unwrap();
        assert_relative_eq!(f, 2.64, max_relative = 1e-12);

        // l_im = |s_i| with nothing after the mirror collapses to 1
        let collapsed = OpticalLayout {
            a: 640e-6,
            k0: K0_780NM,
            l_lm: 2.0,
            l_md: 0.0,
            s_i: Some(-1.0),
        };
        assert_relative_eq!(lens_factor(&collapsed).unwrap(), 1.0, max_relative = 1e-12);

        assert!(lens_factor(&bench_layout(None)).is_err());
        assert!(lens_factor(&bench_layout(Some(0.0))).is_err());
    }

    #[test]
    fn lens_factor_quarter_scaling() {
        // fixed l_im and l_md, doubled s_i -> F drops 4x
        let l_im = 0.25;
        let (s1, s2) = (0.6, 1.2);
        let one = OpticalLayout {
            a: 640e-6,
            k0: K0_780NM,
            l_lm: l_im - s1,
            l_md: 1.14,
            s_i: Some(s1),
        };
        let two = OpticalLayout {
            a: 640e-6,
            k0: K0_780NM,
            l_lm: l_im - s2,
            l_md: 1.14,
            s_i: Some(s2),
        };
        let ratio = lens_factor(&one).unwrap() / lens_factor(&two).unwrap();
        assert_relative_eq!(ratio, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn detector_beam_size_cases() {
        let sigma = sigma_at_detector(&bench_layout(Some(-0.48))).unwrap();
        assert_relative_eq!(sigma, 1520e-6, max_relative = 1e-12);
        let sigma2 = sigma_at_detector(&bench_layout(Some(-0.30))).unwrap();
        assert_relative_eq!(sigma2, 2816e-6, max_relative = 1e-12);

        // unity-magnification arrangement: |l_im + l_md| = |s_i| -> σ = a
        let unity = OpticalLayout {
            a: 640e-6,
            k0: K0_780NM,
            l_lm: 1.0,
            l_md: 5.0,
            s_i: Some(-3.0),
        };
        assert_relative_eq!(sigma_at_detector(&unity).unwrap(), 640e-6, max_relative = 1e-12);
        assert!(sigma_at_detector(&bench_layout(None)).is_err());
    }

    #[test]
    fn bench_pointer_shift_and_amplification() {
        let cal = bench_cal();
        let layout = bench_layout(None);
        let phi = crate::states::phi_for_postselection_probability(0.02).unwrap();
        let k = momentum_kick(mirror_angle(0.5, &cal), K0_780NM);
        let shift = pointer_shift_experimental(k, phi, 1240e-6, &layout).unwrap();
        assert!((shift - 297e-6).abs() < 2e-6, "got {shift}");

        let delta = unamplified_deflection(k, layout.l_md, K0_780NM);
        let amp = amplification_factor(shift, delta).unwrap();
        assert!((70.0..=130.0).contains(&amp), "got {amp}");
        assert!((amp - 100.3).abs() < 0.1, "got {amp}");
        assert_eq!(pointer_shift_experimental(0.0, phi, 1240e-6, &layout).unwrap(), 0.0);
        assert!(amplification_factor(shift, 0.0).is_err());
        assert_relative_eq!(amplification_factor(2.0, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn collimated_limit_recovers_first_order_shift() {
        // σ = a turns the bench formula into the collimated one
        let layout = bench_layout(None);
        let inter = Interaction::new(20.94, 0.3).unwrap();
        let bench = pointer_shift_experimental(20.94, 0.3, layout.a, &layout).unwrap();
        let collimated = pointer_shift_collimated(&inter, &layout.meter()).unwrap();
        assert_relative_eq!(bench, collimated, max_relative = 1e-12);
    }

    #[test]
    fn layout_validation_names_offending_field() {
        let mut layout = bench_layout(Some(-0.48));
        layout.l_md = -1.0;
        let err = layout.validate().unwrap_err();
        assert!(err.to_string().contains("l_md"));
        assert!(bench_layout(Some(0.0)).validate().is_err());
        assert!(bench_layout(Some(-0.48)).validate().is_ok());
    }

    proptest! {
        /// The bench formula with the signed σ equals the lens factor times
        /// the collimated shift — exactly, not just to first order.
        #[test]
        fn bench_formula_equals_lens_factor_times_collimated(
            l_lm in 0.05f64..2.0,
            l_md in 0.05f64..3.0,
            s_mag in 0.05f64..3.0,
            s_neg in proptest::bool::ANY,
            a in 1e-4f64..2e-3,
            k in 1e-3f64..50.0,
            phi in 0.05f64..3.0,
        ) {
            let s_i = if s_neg { -s_mag } else { s_mag };
            let layout = OpticalLayout { a, k0: K0_780NM, l_lm, l_md, s_i: Some(s_i) };
            let l_im = l_lm + s_i;
            prop_assume!((l_im + l_md).abs() > 0.01);

            let sigma = sigma_at_detector_signed(&layout).unwrap();
            let lhs = pointer_shift_experimental(k, phi, sigma, &layout).unwrap();
            let f = lens_factor(&layout).unwrap();
            let collimated = pointer_shift_collimated(
                &Interaction::new(k, phi).unwrap(),
                &layout.meter(),
            ).unwrap();
            let rhs = f * collimated;
            prop_assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()),
                "lhs {lhs} vs rhs {rhs}"
            );
        }

        /// Every step of the chain is linear in the drive.
        #[test]
        fn chain_is_linear_in_drive(v in 1e-9f64..1.0, scale in 1.5f64..10.0) {
            let cal = bench_cal();
            let layout = bench_layout(None);
            let phi = 0.3;
            let shift_of = |v: f64| {
                let k = momentum_kick(mirror_angle(v, &cal), K0_780NM);
                pointer_shift_experimental(k, phi, 1240e-6, &layout).unwrap()
            };
            let delta_of = |v: f64| {
                let k = momentum_kick(mirror_angle(v, &cal), K0_780NM);
                unamplified_deflection(k, layout.l_md, K0_780NM)
            };
            prop_assert!((shift_of(v * scale) - scale * shift_of(v)).abs() <= 1e-12 * shift_of(v * scale).abs());
            prop_assert!((delta_of(v * scale) - scale * delta_of(v)).abs() <= 1e-12 * delta_of(v * scale).abs());
        }

        /// The amplification factor does not depend on the kick size.
        #[test]
        fn amplification_is_kick_independent(k1 in 1e-6f64..100.0, k2 in 1e-6f64..100.0) {
            let layout = bench_layout(None);
            let phi = 0.3;
            let amp_of = |k: f64| {
                let shift = pointer_shift_experimental(k, phi, 1240e-6, &layout).unwrap();
                amplification_factor(shift, unamplified_deflection(k, layout.l_md, K0_780NM)).unwrap()
            };
            prop_assert!((amp_of(k1) - amp_of(k2)).abs() < 1e-9 * amp_of(k1).abs());
        }
    }
}

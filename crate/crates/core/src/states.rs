//! Two-path interferometer states and the first-order pointer response.
//!
//! The clockwise and counter-clockwise circulation directions of a Sagnac
//! loop form an effective two-level system. A tilting mirror inside the
//! loop kicks the transverse momentum of the beam with opposite sign for
//! the two directions; post-selecting on the nearly-dark output port then
//! displaces the beam *position* by an amount proportional to the (purely
//! imaginary) weak value of the path operator, which grows as 1/phi as the
//! port darkens. This module holds the state algebra and the first-order
//! collimated-beam shift; the all-orders treatment lives in [`crate::darkport`].

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

/// Overlap magnitude below which post-selection is treated as degenerate.
pub const DEGENERATE_OVERLAP: f64 = 1e-15;

/// State of the two-path system: complex amplitudes on the two
/// circulation directions. The path operator assigns +1 to the clockwise
/// and -1 to the counter-clockwise direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemState {
    /// Amplitude on the clockwise path.
    pub amp_cw: Complex64,
    /// Amplitude on the counter-clockwise path.
    pub amp_ccw: Complex64,
}

impl SystemState {
    /// Squared norm |cw|² + |ccw|².
    pub fn norm_sq(&self) -> f64 {
        self.amp_cw.norm_sqr() + self.amp_ccw.norm_sqr()
    }

    /// Inner product ⟨self|other⟩, with `self` conjugated (the bra).
    pub fn inner(&self, other: &SystemState) -> Complex64 {
        self.amp_cw.conj() * other.amp_cw + self.amp_ccw.conj() * other.amp_ccw
    }

    /// Apply the path operator: +1 on the clockwise amplitude, -1 on the
    /// counter-clockwise one.
    pub fn apply_path_sign(&self) -> SystemState {
        SystemState {
            amp_cw: self.amp_cw,
            amp_ccw: -self.amp_ccw,
        }
    }
}

/// Transverse Gaussian beam profile entering the interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMeter {
    /// Beam size: the *intensity-profile* standard deviation √⟨x²⟩ (m).
    /// Configs quoting a 1/e² intensity radius w convert with a = w/2
    /// before reaching this type.
    pub a: f64,
    /// Optical wavenumber 2π/λ (rad/m).
    pub k0: f64,
}

impl GaussianMeter {
    pub fn new(a: f64, k0: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter {
                name: "a",
                value: a,
                reason: "beam size must be positive and finite",
            });
        }
        if !(k0 > 0.0) || !k0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "k0",
                value: k0,
                reason: "wavenumber must be positive and finite",
            });
        }
        Ok(GaussianMeter { a, k0 })
    }

    /// Paraxial sanity check: the beam should span many wavelengths.
    /// Callers surface a warning (not an error) when this fails.
    pub fn is_paraxial(&self) -> bool {
        self.a * self.k0 > 100.0
    }

    pub fn wavelength(&self) -> f64 {
        std::f64::consts::TAU / self.k0
    }
}

/// One pass through the loop: transverse momentum kick ±k on the two
/// paths plus the controllable relative phase between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    /// Transverse momentum kick magnitude (rad/m).
    pub k: f64,
    /// Relative phase between the paths (rad). The output port is fully
    /// dark at 0; useful operating points sit in (0, π].
    pub phi: f64,
}

impl Interaction {
    pub fn new(k: f64, phi: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k,
                reason: "momentum kick must be finite",
            });
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phi",
                value: phi,
                reason: "phase must be finite",
            });
        }
        Ok(Interaction { k, phi })
    }
}

/// State prepared by the input splitter and the phase element: the two
/// directions get e^{∓iφ/2} phases and the reflected arm picks up i.
pub fn preselected_state(phi: f64) -> SystemState {
    let half_phase = Complex64::new(0.0, 0.5 * phi);
    SystemState {
        amp_cw: (-half_phase).exp() * FRAC_1_SQRT_2,
        amp_ccw: Complex64::i() * half_phase.exp() * FRAC_1_SQRT_2,
    }
}

/// Fixed analyzer state of the dark output port.
pub fn postselected_state() -> SystemState {
    SystemState {
        amp_cw: Complex64::i() * FRAC_1_SQRT_2,
        amp_ccw: Complex64::new(FRAC_1_SQRT_2, 0.0),
    }
}

/// Weak value of the path operator between the prepared and analyzed
/// states, ⟨f|A|i⟩ / ⟨f|i⟩, computed directly from the state vectors.
///
/// For these states it is purely imaginary with magnitude |cot(φ/2)|;
/// downstream formulas consume the magnitude only, so the overall sign is
/// a bookkeeping convention, not an observable.
pub fn weak_value(phi: f64) -> Result<Complex64> {
    let psi_i = preselected_state(phi);
    let psi_f = postselected_state();
    let overlap = psi_f.inner(&psi_i);
    if overlap.norm() < DEGENERATE_OVERLAP {
        return Err(Error::DegeneratePostselection { phi });
    }
    Ok(psi_f.inner(&psi_i.apply_path_sign()) / overlap)
}

/// Probability that a photon exits the analyzed port: |⟨f|i⟩|² = sin²(φ/2).
pub fn postselection_probability(phi: f64) -> f64 {
    postselected_state()
        .inner(&preselected_state(phi))
        .norm_sqr()
        .clamp(0.0, 1.0)
}

/// Invert the port transmission: the phase offset that yields a given
/// post-selection probability, φ = 2·asin(√p).
pub fn phi_for_postselection_probability(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            reason: "post-selection probability must lie in (0, 1]",
        });
    }
    Ok(2.0 * p.sqrt().asin())
}

/// First-order post-selected centroid shift for a collimated beam:
/// ⟨x⟩ = 2·k·a²·|A_w|. Valid while the kick is weak (see
/// [`crate::darkport::validity_check`]); the exact counterpart is
/// [`crate::darkport::exact_centroid`].
pub fn pointer_shift_collimated(inter: &Interaction, meter: &GaussianMeter) -> Result<f64> {
    let aw = weak_value(inter.phi)?;
    Ok(2.0 * inter.k * meter.a * meter.a * aw.norm())
}

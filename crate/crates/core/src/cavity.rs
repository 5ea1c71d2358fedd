//! Fabry-Perot cavity physics.
//!
//! A cavity is described by its geometry (geometric length `D`, mirror
//! curvatures `R1`, `R2`, refractive index `n` of the filling medium) and
//! its decay rates (`kappa_left`, `kappa_right` through the two mirrors
//! plus an internal loss term). Two facts drive everything downstream:
//!
//! * Resonance frequencies follow
//!   `omega(q, p, l) = (pi c / (n D)) * (q + (2p + |l| + 1) * phi / pi)`,
//!   where `phi = arccos(+sqrt((1 - D/R1)(1 - D/R2)))` is the Gouy phase
//!   accumulated per pass. Only the transverse order `2p + |l|` enters,
//!   so modes sharing it are exactly degenerate and the sign of `l` is
//!   invisible to the cavity.
//! * Near a resonance, the steady-state field scattering is
//!   `r(Delta) = 1 - 2 kappa_l / (i Delta + kappa)` and
//!   `t(Delta) = 2 sqrt(kappa_l kappa_r) / (i Delta + kappa)` with
//!   `kappa = kappa_l + kappa_r + kappa_int`. With no internal loss this
//!   is unitary: `|r|^2 + |t|^2 = 1`.
//!
//! `kappa` is the angular half-width at half-maximum of `|t|^2`; the
//! measured full width maps through `fit_decay_from_fwhm`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::ModeIndex;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Geometry and loss description of one Fabry-Perot cavity.
///
/// Constructed through [`CavityParams::new`] or
/// [`CavityParams::from_spectrum`], which enforce `optical_length =
/// refractive_index * geometric_length`, positive decay rates, and the
/// stability condition `0 <= (1 - D/R1)(1 - D/R2) <= 1`. Curvatures may
/// be `f64::INFINITY` for flat mirrors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    optical_length: f64,
    geometric_length: f64,
    refractive_index: f64,
    curvature_front: f64,
    curvature_back: f64,
    decay_left: f64,
    decay_right: f64,
    decay_internal: f64,
}

/// Complex reflection and transmission returned for one mode at one
/// detuning. `reflectance() + transmittance() = 1` whenever the cavity
/// has no internal loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterCoeffs {
    pub reflection: Complex64,
    pub transmission: Complex64,
    /// Detuning this pair was evaluated at, rad/s.
    pub detuning: f64,
}

impl ScatterCoeffs {
    /// Power transmission `T = |t|^2`.
    pub fn transmittance(&self) -> f64 {
        self.transmission.norm_sqr()
    }

    /// Power reflection `R = |r|^2`.
    pub fn reflectance(&self) -> f64 {
        self.reflection.norm_sqr()
    }

    /// Scattering phase of the transmitted field.
    pub fn transmission_phase(&self) -> f64 {
        self.transmission.arg()
    }

    /// Scattering phase of the reflected field.
    pub fn reflection_phase(&self) -> f64 {
        self.reflection.arg()
    }
}

fn g_factor(length: f64, curvature: f64) -> f64 {
    // Flat mirror: R = inf, D/R = 0 under IEEE division.
    1.0 - length / curvature
}

impl CavityParams {
    /// Build a cavity from its geometry and decay rates. `decay_internal`
    /// may be zero; the mirror decays must be positive.
    pub fn new(
        geometric_length: f64,
        refractive_index: f64,
        curvature_front: f64,
        curvature_back: f64,
        decay_left: f64,
        decay_right: f64,
        decay_internal: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("geometric_length", geometric_length),
            ("refractive_index", refractive_index),
            ("decay_left", decay_left),
            ("decay_right", decay_right),
            ("decay_internal", decay_internal),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "cavity parameter" });
            }
            let positive_ok = match name {
                "decay_internal" => v >= 0.0,
                _ => v > 0.0,
            };
            if !positive_ok {
                return Err(Error::invalid("cavity parameter", format!("{name} = {v}")));
            }
        }
        if curvature_front.is_nan() || curvature_back.is_nan() {
            return Err(Error::NonFinite { what: "mirror curvature" });
        }
        let g_product =
            g_factor(geometric_length, curvature_front) * g_factor(geometric_length, curvature_back);
        if !(0.0..=1.0).contains(&g_product) {
            return Err(Error::UnstableGeometry { g_product });
        }
        Ok(CavityParams {
            optical_length: refractive_index * geometric_length,
            geometric_length,
            refractive_index,
            curvature_front,
            curvature_back,
            decay_left,
            decay_right,
            decay_internal,
        })
    }

    /// Build a lossless symmetric cavity directly from its measured
    /// spectrum: the free spectral range fixes the optical length
    /// (`nD = c / (2 fsr)`), and the linewidth fixes the mirror decays
    /// (`kappa_l = kappa_r = pi fwhm / 2`).
    pub fn from_spectrum(
        fsr_hz: f64,
        fwhm_hz: f64,
        refractive_index: f64,
        curvature_front: f64,
        curvature_back: f64,
    ) -> Result<Self> {
        if !(fsr_hz.is_finite() && fsr_hz > 0.0) {
            return Err(Error::invalid("fsr_hz", format!("{fsr_hz} must be > 0")));
        }
        let optical_length = SPEED_OF_LIGHT / (2.0 * fsr_hz);
        let geometric_length = optical_length / refractive_index;
        let (decay_left, decay_right) = fit_decay_from_fwhm(fwhm_hz)?;
        CavityParams::new(
            geometric_length,
            refractive_index,
            curvature_front,
            curvature_back,
            decay_left,
            decay_right,
            0.0,
        )
    }

    /// Same cavity with the mirror decays replaced (internal loss kept).
    pub fn with_decays(&self, decay_left: f64, decay_right: f64) -> Result<Self> {
        CavityParams::new(
            self.geometric_length,
            self.refractive_index,
            self.curvature_front,
            self.curvature_back,
            decay_left,
            decay_right,
            self.decay_internal,
        )
    }

    /// Same cavity with every decay rate scaled by `factor`; geometry
    /// untouched. Scaling toward zero raises the finesse without moving
    /// any resonance.
    pub fn with_decay_scale(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::invalid("decay scale", format!("{factor} must be > 0")));
        }
        CavityParams::new(
            self.geometric_length,
            self.refractive_index,
            self.curvature_front,
            self.curvature_back,
            self.decay_left * factor,
            self.decay_right * factor,
            self.decay_internal * factor,
        )
    }

    /// Same cavity with a new optical length (refractive index and
    /// curvatures kept, so the geometric length scales with it). Moves
    /// every resonance and the Gouy splitting together, the knob a
    /// temperature controller turns.
    pub fn with_optical_length(&self, optical_length: f64) -> Result<Self> {
        if !(optical_length.is_finite() && optical_length > 0.0) {
            return Err(Error::invalid("optical_length", format!("{optical_length} must be > 0")));
        }
        CavityParams::new(
            optical_length / self.refractive_index,
            self.refractive_index,
            self.curvature_front,
            self.curvature_back,
            self.decay_left,
            self.decay_right,
            self.decay_internal,
        )
    }

    /// Same cavity with the given internal loss rate.
    pub fn with_internal_loss(&self, decay_internal: f64) -> Result<Self> {
        CavityParams::new(
            self.geometric_length,
            self.refractive_index,
            self.curvature_front,
            self.curvature_back,
            self.decay_left,
            self.decay_right,
            decay_internal,
        )
    }

    pub fn optical_length(&self) -> f64 {
        self.optical_length
    }

    pub fn geometric_length(&self) -> f64 {
        self.geometric_length
    }

    pub fn refractive_index(&self) -> f64 {
        self.refractive_index
    }

    pub fn curvature_front(&self) -> f64 {
        self.curvature_front
    }

    pub fn curvature_back(&self) -> f64 {
        self.curvature_back
    }

    pub fn decay_left(&self) -> f64 {
        self.decay_left
    }

    pub fn decay_right(&self) -> f64 {
        self.decay_right
    }

    pub fn decay_internal(&self) -> f64 {
        self.decay_internal
    }

    /// Total decay rate `kappa = kappa_l + kappa_r + kappa_int`, rad/s.
    pub fn total_decay(&self) -> f64 {
        self.decay_left + self.decay_right + self.decay_internal
    }

    /// Free spectral range in ordinary frequency, Hz: `c / (2 n D)`.
    pub fn fsr_hz(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.optical_length)
    }

    /// Longitudinal mode spacing in angular frequency, rad/s.
    pub fn fsr_angular(&self) -> f64 {
        std::f64::consts::PI * SPEED_OF_LIGHT / self.optical_length
    }

    /// Gouy phase accumulated per pass,
    /// `phi = arccos(+sqrt((1 - D/R1)(1 - D/R2)))` in [0, pi/2].
    ///
    /// The positive branch is fixed; geometries needing the negative
    /// branch (both g factors negative) are rejected at construction.
    /// The geometric length enters here: ray geometry inside a uniform
    /// medium is index-independent, only the optical phase advance is not.
    pub fn accumulated_gouy(&self) -> f64 {
        let g_product = g_factor(self.geometric_length, self.curvature_front)
            * g_factor(self.geometric_length, self.curvature_back);
        // Clamp pure roundoff excursions; construction guarantees [0, 1].
        g_product.sqrt().clamp(0.0, 1.0).acos()
    }

    /// Resonance angular frequency of longitudinal index `q >= 1` and
    /// transverse mode `m`:
    /// `(pi c / (n D)) * (q + (2p + |l| + 1) * phi / pi)`.
    ///
    /// Strictly increasing in `q`; depends on `m` only through its
    /// transverse order, which is what makes equal orders exactly
    /// degenerate.
    pub fn resonance_frequency(&self, q: u64, mode: ModeIndex) -> f64 {
        assert!(q >= 1, "longitudinal index must be >= 1");
        let phi = self.accumulated_gouy();
        let order_term = f64::from(mode.transverse_order() + 1) * phi / std::f64::consts::PI;
        std::f64::consts::PI * SPEED_OF_LIGHT / self.optical_length * (q as f64 + order_term)
    }

    /// Detuning of the laser from the nearest resonance of mode `m`:
    /// returns `(Delta, q*)` with `Delta = omega_laser - omega(q*, m)`
    /// and `|Delta| <= FSR/2` (angular). Exact midpoints break toward
    /// the lower `q`.
    pub fn nearest_detuning(&self, mode: ModeIndex, laser_frequency: f64) -> (f64, u64) {
        debug_assert!(laser_frequency > 0.0);
        let phi = self.accumulated_gouy();
        let order_term = f64::from(mode.transverse_order() + 1) * phi / std::f64::consts::PI;
        let x = laser_frequency * self.optical_length / (std::f64::consts::PI * SPEED_OF_LIGHT)
            - order_term;
        let q = nearest_longitudinal_index(x);
        (laser_frequency - self.resonance_frequency(q, mode), q)
    }

    /// Steady-state scattering of a field at the given detuning from a
    /// cavity resonance.
    pub fn scatter(&self, detuning: f64) -> ScatterCoeffs {
        let kappa = self.total_decay();
        let denom = Complex64::new(kappa, detuning);
        let reflection = Complex64::new(1.0, 0.0) - 2.0 * self.decay_left / denom;
        let transmission = 2.0 * (self.decay_left * self.decay_right).sqrt() / denom;
        ScatterCoeffs { reflection, transmission, detuning }
    }

    /// Spectral summary `(fsr_hz, fwhm_hz, finesse)`: the mode spacing,
    /// the full width at half maximum of the transmission peak
    /// (`kappa / pi`, since `T` falls to half at `Delta = +-kappa`), and
    /// their ratio.
    pub fn linewidth_and_finesse(&self) -> (f64, f64, f64) {
        let fsr = self.fsr_hz();
        let fwhm = self.total_decay() / std::f64::consts::PI;
        (fsr, fwhm, fsr / fwhm)
    }
}

/// Nearest integer to `x`, with exact halves resolved downward and a
/// floor of 1 (longitudinal indices start there). The downward tie is a
/// fixed convention so detunings are deterministic; ties are
/// measure-zero physically.
fn nearest_longitudinal_index(x: f64) -> u64 {
    let lower = x.floor();
    let q = if x - lower > 0.5 { lower + 1.0 } else { lower };
    if q < 1.0 {
        1
    } else {
        q as u64
    }
}

/// Mirror decay rates reproducing a measured transmission linewidth under
/// the symmetric assumption `kappa_l = kappa_r`: each is `pi fwhm / 2`,
/// so the total `kappa = pi fwhm` is the angular half-width at
/// half-maximum and `linewidth_and_finesse` returns the input width
/// exactly.
pub fn fit_decay_from_fwhm(fwhm_hz: f64) -> Result<(f64, f64)> {
    if !(fwhm_hz.is_finite() && fwhm_hz > 0.0) {
        return Err(Error::invalid("fwhm_hz", format!("{fwhm_hz} must be > 0")));
    }
    let each = std::f64::consts::PI * fwhm_hz / 2.0;
    Ok((each, each))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_like_cavity() -> CavityParams {
        CavityParams::from_spectrum(7.90e9, 287e6, 1.453, f64::INFINITY, 25e-3).unwrap()
    }

    #[test]
    fn construction_rejects_unstable_geometry() {
        // D > R2 on a plano-convex cavity makes g2 negative.
        let err = CavityParams::new(30e-3, 1.0, f64::INFINITY, 25e-3, 1.0, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::UnstableGeometry { .. }));
    }

    #[test]
    fn optical_length_is_index_times_geometric() {
        let c = reference_like_cavity();
        assert_relative_eq!(
            c.optical_length(),
            c.refractive_index() * c.geometric_length(),
            max_relative = 1e-15
        );
        assert_relative_eq!(c.fsr_hz(), 7.90e9, max_relative = 1e-12);
    }

    #[test]
    fn exact_midpoint_breaks_toward_lower_q() {
        assert_eq!(nearest_longitudinal_index(4.5), 4);
        assert_eq!(nearest_longitudinal_index(4.5 + 1e-9), 5);
        assert_eq!(nearest_longitudinal_index(4.5 - 1e-9), 4);
        assert_eq!(nearest_longitudinal_index(0.2), 1);
    }

    #[test]
    fn near_midpoint_detuning_magnitude_is_half_fsr() {
        let c = reference_like_cavity();
        let m = ModeIndex::new(0, 0);
        let q0 = 40_000;
        let fsr = c.fsr_angular();
        let below = c.resonance_frequency(q0, m) + 0.499_999 * fsr;
        let (delta, q) = c.nearest_detuning(m, below);
        assert_eq!(q, q0);
        assert_relative_eq!(delta, 0.499_999 * fsr, max_relative = 1e-6);
        let above = c.resonance_frequency(q0, m) + 0.500_001 * fsr;
        let (delta, q) = c.nearest_detuning(m, above);
        assert_eq!(q, q0 + 1);
        assert!(delta < 0.0);
    }
}

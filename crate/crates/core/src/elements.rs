//! Mode-space operators for the non-cavity optical elements: topological
//! charge shifters (spiral phase elements), charge flippers (mirrors and
//! Dove prisms), lenses (waist rescaling, delegated to [`crate::modes`]),
//! attenuators, and ideal three-port circulators.
//!
//! Every element maps each input charge to exactly one output charge;
//! only shifters change l, and nothing here mixes distinct l values.

use num_complex::Complex64;

use crate::error::{Error, Result, TruncationWarning};
use crate::modes::{
    rescale_waist, ModeIndex, ModeSpectrum, Rescaled, DEFAULT_L_MAX, DEFAULT_P_MAX,
    DEFAULT_TRUNCATION_WARN_THRESHOLD,
};

/// How a charge shifter treats the radial degree of freedom.
///
/// * `IndexShift`: the idealized bookkeeping model; amplitude at `(p, l)`
///   moves to `(p, l + dl)` untouched. Unitary on the truncated basis.
/// * `PhaseOnly`: the physical model of a flat spiral phase element; the
///   field is multiplied by `exp(-i dl theta)`, which keeps the radial
///   profile but re-expands it over the LG family of the new charge,
///   spreading power across p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FidelityModel {
    IndexShift,
    PhaseOnly,
}

/// What to do when an operation pushes modes past the configured basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationPolicy {
    /// Drop the overflowing amplitude, count it as truncation loss, and
    /// attach a warning.
    Warn,
    /// Refuse the operation.
    Fail,
}

/// Basis truncation bounds and reporting policy shared by the elements
/// and the circuit compiler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub p_max: u32,
    pub l_max: u32,
    pub overflow_policy: TruncationPolicy,
    /// Truncation-loss fraction above which outcomes carry a warning.
    pub warn_threshold: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            p_max: DEFAULT_P_MAX,
            l_max: DEFAULT_L_MAX,
            overflow_policy: TruncationPolicy::Warn,
            warn_threshold: DEFAULT_TRUNCATION_WARN_THRESHOLD,
        }
    }
}

/// One optical element as a mode-space operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementOp {
    /// Add `delta_l` to every topological charge.
    Shift { delta_l: i32, fidelity: FidelityModel },
    /// Negate every topological charge (mirror bounce or Dove prism).
    Flip,
    /// Re-express on a new waist (ideal lens relay).
    Lens { new_waist: f64 },
    /// Uniform power attenuation by `power_factor` in [0, 1].
    Attenuator { power_factor: f64 },
}

/// Spectrum plus power bookkeeping returned by element applications.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementOutcome {
    pub spectrum: ModeSpectrum,
    /// Fraction of input power lost to basis truncation (not physical
    /// absorption), in [0, 1].
    pub truncation_loss: f64,
    pub warning: Option<TruncationWarning>,
}

impl ElementOutcome {
    fn lossless(spectrum: ModeSpectrum) -> Self {
        ElementOutcome { spectrum, truncation_loss: 0.0, warning: None }
    }

    fn with_loss(spectrum: ModeSpectrum, power_in: f64, warn_threshold: f64) -> Self {
        let power_out = spectrum.total_power();
        let truncation_loss =
            if power_in > 0.0 { ((power_in - power_out) / power_in).max(0.0) } else { 0.0 };
        let warning = (truncation_loss > warn_threshold)
            .then_some(TruncationWarning { loss: truncation_loss, threshold: warn_threshold });
        ElementOutcome { spectrum, truncation_loss, warning }
    }
}

/// Shift every topological charge by `delta_l`.
///
/// `IndexShift` relabels modes; `PhaseOnly` multiplies the field by the
/// helical phase `exp(-i delta_l theta)` and re-decomposes the radial
/// content in the LG basis of the shifted charge (power conserved up to
/// the reported truncation loss). Charges pushed past `l_max` follow the
/// truncation policy.
pub fn apply_shift(
    s: &ModeSpectrum,
    delta_l: i32,
    fidelity: FidelityModel,
    truncation: &Truncation,
) -> Result<ElementOutcome> {
    if delta_l == 0 {
        return Ok(ElementOutcome::lossless(s.clone()));
    }
    let power_in = s.total_power();
    let mut out = ModeSpectrum::new(s.basis_waist(), s.wavelength())?;
    for l in s.charges() {
        let l_new = l + delta_l;
        if l_new.unsigned_abs() > truncation.l_max {
            match truncation.overflow_policy {
                TruncationPolicy::Fail => {
                    return Err(Error::TruncationExceeded {
                        p: 0,
                        l: l_new,
                        p_max: truncation.p_max,
                        l_max: truncation.l_max,
                    });
                }
                // Dropped charge shows up as truncation loss below.
                TruncationPolicy::Warn => continue,
            }
        }
        match fidelity {
            FidelityModel::IndexShift => {
                for (m, a) in s.iter().filter(|(m, _)| m.l == l) {
                    out.add_amplitude(ModeIndex::new(m.p, l_new), a);
                }
            }
            FidelityModel::PhaseOnly => {
                let p_in = s
                    .iter()
                    .filter(|(m, _)| m.l == l)
                    .map(|(m, _)| m.p)
                    .max()
                    .expect("charge listed implies a populated mode");
                let kernel = crate::modes::radial_overlap_matrix(
                    l_new.unsigned_abs(),
                    s.basis_waist(),
                    l.unsigned_abs(),
                    s.basis_waist(),
                    truncation.p_max,
                    p_in,
                )?;
                for (i, row) in kernel.iter().enumerate() {
                    let mut b = Complex64::new(0.0, 0.0);
                    for (j, k_ij) in row.iter().enumerate() {
                        b += k_ij * s.amplitude(ModeIndex::new(j as u32, l));
                    }
                    out.add_amplitude(ModeIndex::new(i as u32, l_new), b);
                }
            }
        }
    }
    Ok(ElementOutcome::with_loss(out, power_in, truncation.warn_threshold))
}

/// Negate every topological charge: amplitude at `(p, l)` moves to
/// `(p, -l)`. An involution that touches no radial content and
/// preserves power exactly.
pub fn apply_flip(s: &ModeSpectrum) -> ModeSpectrum {
    let mut out = ModeSpectrum::new(s.basis_waist(), s.wavelength())
        .expect("source spectrum carries valid basis parameters");
    for (m, a) in s.iter() {
        out.set_amplitude(ModeIndex::new(m.p, -m.l), a);
    }
    out
}

/// Apply one element operation with shared truncation bookkeeping.
pub fn apply(op: &ElementOp, s: &ModeSpectrum, truncation: &Truncation) -> Result<ElementOutcome> {
    match *op {
        ElementOp::Shift { delta_l, fidelity } => apply_shift(s, delta_l, fidelity, truncation),
        ElementOp::Flip => Ok(ElementOutcome::lossless(apply_flip(s))),
        ElementOp::Lens { new_waist } => {
            let Rescaled { spectrum, truncation_loss, warning } =
                rescale_waist(s, new_waist, truncation.p_max, truncation.warn_threshold)?;
            Ok(ElementOutcome { spectrum, truncation_loss, warning })
        }
        ElementOp::Attenuator { power_factor } => {
            if !(0.0..=1.0).contains(&power_factor) {
                return Err(Error::invalid(
                    "power_factor",
                    format!("{power_factor} must be in [0, 1]"),
                ));
            }
            let mut out = ModeSpectrum::new(s.basis_waist(), s.wavelength())?;
            let amp_factor = power_factor.sqrt();
            for (m, a) in s.iter() {
                out.set_amplitude(m, a * amp_factor);
            }
            Ok(ElementOutcome::lossless(out))
        }
    }
}

/// Ideal three-port circulator: a lossless, phase-neutral router sending
/// port 1 to port 2 and port 2 to port 3. Nothing ever exits the port it
/// entered, and port 3 is a sink with no onward route.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Circulator;

impl Circulator {
    /// Route a field through the circulator; returns the exit port and
    /// the unchanged field.
    pub fn route(&self, entering_port: u8, field: ModeSpectrum) -> Result<(u8, ModeSpectrum)> {
        match entering_port {
            1 => Ok((2, field)),
            2 => Ok((3, field)),
            other => Err(Error::NoRoute { port: other }),
        }
    }
}

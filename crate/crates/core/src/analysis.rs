//! Parameter sweeps and small deterministic optimizers: wavelength-swept
//! cavity transmission spectra, waist-matching scans, efficiency versus
//! finesse, and coordinate-descent design search.
//!
//! Everything here is embarrassingly parallel over grid points with a
//! deterministic merge in grid order, so traces are bit-identical across
//! runs and thread counts.

use rayon::prelude::*;

use crate::cavity::{CavityParams, SPEED_OF_LIGHT};
use crate::circuit::{CircuitSpec, CyclicReport};
use crate::error::{Error, Result};
use crate::modes::{radial_coefficients, ModeIndex};

/// Which physical quantity a grid runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepQuantity {
    /// Laser vacuum wavelength, m.
    Wavelength,
    /// Prepared vortex waist, m.
    SourceWaist,
    /// Cavity finesse (dimensionless), realized by scaling mirror decays.
    Finesse,
}

/// A uniform grid over one swept quantity. Endpoints are included and
/// hit exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub quantity: SweepQuantity,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepGrid {
    pub fn new(quantity: SweepQuantity, start: f64, stop: f64, steps: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite()) {
            return Err(Error::NonFinite { what: "sweep bounds" });
        }
        if steps < 2 {
            return Err(Error::invalid("steps", format!("{steps} must be >= 2")));
        }
        if start >= stop {
            return Err(Error::invalid("sweep bounds", format!("start {start} must be < stop {stop}")));
        }
        Ok(SweepGrid { quantity, start, stop, steps })
    }

    /// Grid point i; 0 maps exactly to `start`, `steps - 1` exactly to `stop`.
    pub fn value(&self, i: usize) -> f64 {
        let t = i as f64 / (self.steps - 1) as f64;
        self.start * (1.0 - t) + self.stop * t
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

/// One interpolated transmission maximum of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Position in the swept quantity's units.
    pub position: f64,
    pub height: f64,
}

/// Transmission of one input charge across a grid, with detected peaks
/// sorted by position.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    pub input_l: i32,
    /// (swept value, transmitted power) in grid order.
    pub points: Vec<(f64, f64)>,
    pub peaks: Vec<Peak>,
}

/// Raised when the grid spacing exceeds a quarter linewidth and peaks
/// may be missed between samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridResolutionWarning {
    pub grid_step_hz: f64,
    pub max_recommended_hz: f64,
}

/// Input preparation shared by all traces of one sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPrep {
    /// Waist of the prepared phase-only vortex, m.
    pub source_waist: f64,
    /// Waist of the cavity basis it is decomposed on, m.
    pub cavity_waist: f64,
    pub p_max: u32,
}

/// All traces of one sweep plus an optional resolution warning.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub traces: Vec<SpectrumTrace>,
    pub resolution_warning: Option<GridResolutionWarning>,
}

/// Cavity transmission of the vortex with radial amplitudes
/// `coefficients` on charge `l`, at one laser frequency:
/// `sum_p |C_p|^2 T(delta_{p,l})`. This is the single evaluation a sweep
/// repeats per grid point, exposed so spot checks can reproduce any
/// trace sample bit for bit.
pub fn transmission_at(
    cavity: &CavityParams,
    coefficients: &[f64],
    l: i32,
    angular_frequency: f64,
) -> f64 {
    let mut total = 0.0;
    for (p, c) in coefficients.iter().enumerate() {
        let weight = c * c;
        if weight == 0.0 {
            continue;
        }
        let (detuning, _) = cavity.nearest_detuning(ModeIndex::new(p as u32, l), angular_frequency);
        total += weight * cavity.scatter(detuning).transmittance();
    }
    total
}

/// Local maxima above 1% of the trace maximum, refined by three-point
/// parabolic interpolation. Plateaus of exactly equal samples are not
/// reported as peaks.
fn detect_peaks(points: &[(f64, f64)]) -> Vec<Peak> {
    let global_max = points.iter().map(|&(_, y)| y).fold(0.0_f64, f64::max);
    let floor = 0.01 * global_max;
    let mut peaks = Vec::new();
    for i in 1..points.len().saturating_sub(1) {
        let (_, y0) = points[i - 1];
        let (x1, y1) = points[i];
        let (x2, y2) = points[i + 1];
        if !(y1 > y0 && y1 > y2 && y1 >= floor) {
            continue;
        }
        let step = x2 - x1;
        let denom = y0 - 2.0 * y1 + y2;
        // denom < 0 at a strict maximum; equality only under exact
        // cancellation, where the raw sample is kept.
        let (position, height) = if denom < 0.0 {
            let delta = (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5);
            (x1 + delta * step, y1 - 0.25 * (y0 - y2) * delta)
        } else {
            (x1, y1)
        };
        peaks.push(Peak { position, height });
    }
    peaks
}

/// Transmission spectrum of each charge in `l_values` across a
/// wavelength grid: the phase-only vortex is decomposed once per charge,
/// then `sum_p |C_p|^2 T(delta_{p,l})` is evaluated per grid point.
/// Traces for `+l` and `-l` are identical.
pub fn wavelength_sweep(
    cavity: &CavityParams,
    grid: &SweepGrid,
    l_values: &[i32],
    prep: &SweepPrep,
) -> Result<SweepOutcome> {
    if grid.quantity != SweepQuantity::Wavelength {
        return Err(Error::invalid("sweep grid", "wavelength_sweep needs a Wavelength grid"));
    }
    if grid.start <= 0.0 {
        return Err(Error::invalid("sweep grid", "wavelengths must be positive"));
    }
    let grid_step_hz = SPEED_OF_LIGHT * (1.0 / grid.start - 1.0 / grid.stop).abs()
        / (grid.steps - 1) as f64;
    let (_, fwhm_hz, _) = cavity.linewidth_and_finesse();
    let resolution_warning = (grid_step_hz > fwhm_hz / 4.0).then_some(GridResolutionWarning {
        grid_step_hz,
        max_recommended_hz: fwhm_hz / 4.0,
    });

    let wavelengths = grid.values();
    let mut traces = Vec::with_capacity(l_values.len());
    for &l in l_values {
        let coefficients = radial_coefficients(l, prep.source_waist, prep.cavity_waist, prep.p_max)?;
        let points: Vec<(f64, f64)> = wavelengths
            .par_iter()
            .map(|&wl| {
                let omega = std::f64::consts::TAU * SPEED_OF_LIGHT / wl;
                (wl, transmission_at(cavity, &coefficients, l, omega))
            })
            .collect();
        let peaks = detect_peaks(&points);
        traces.push(SpectrumTrace { input_l: l, points, peaks });
    }
    Ok(SweepOutcome { traces, resolution_warning })
}

/// Peak transmission versus source waist for one charge.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub input_l: i32,
    /// (source waist, on-resonance transmitted power) in grid order.
    pub points: Vec<(f64, f64)>,
}

/// On-resonance transmission per (charge, source waist): the height of
/// the fundamental transmission peak when the laser sits exactly on that
/// charge's `(p = 0, l)` resonance, i.e. `|C_0(l, w)|^2 T(0)`. Higher
/// radial components resonate elsewhere and do not contribute at the
/// peak.
pub fn waist_scan(
    cavity: &CavityParams,
    l_values: &[i32],
    grid: &SweepGrid,
    cavity_waist: f64,
    p_max: u32,
) -> Result<Vec<ScanRow>> {
    if grid.quantity != SweepQuantity::SourceWaist {
        return Err(Error::invalid("sweep grid", "waist_scan needs a SourceWaist grid"));
    }
    if grid.start <= 0.0 {
        return Err(Error::invalid("sweep grid", "waists must be positive"));
    }
    let on_resonance = cavity.scatter(0.0).transmittance();
    let waists = grid.values();
    let mut rows = Vec::with_capacity(l_values.len());
    for &l in l_values {
        let points: Vec<(f64, f64)> = waists
            .par_iter()
            .map(|&w| -> Result<(f64, f64)> {
                let coefficients = radial_coefficients(l, w, cavity_waist, p_max)?;
                Ok((w, coefficients[0] * coefficients[0] * on_resonance))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(ScanRow { input_l: l, points });
    }
    Ok(rows)
}

/// Full cyclic report at each finesse value, realized by refitting the
/// mirror decays to `fwhm = fsr / finesse` at fixed geometry and
/// retuning the laser.
pub fn efficiency_vs_finesse(
    spec: &CircuitSpec,
    finesse_values: &[f64],
) -> Result<Vec<(f64, CyclicReport)>> {
    let mut results = Vec::with_capacity(finesse_values.len());
    for &finesse in finesse_values {
        if !(finesse.is_finite() && finesse > 0.0) {
            return Err(Error::invalid("finesse", format!("{finesse} must be > 0")));
        }
        let fwhm = spec.cavity.fsr_hz() / finesse;
        let (decay_left, decay_right) = crate::cavity::fit_decay_from_fwhm(fwhm)?;
        let mut candidate = spec.clone();
        candidate.cavity = spec.cavity.with_decays(decay_left, decay_right)?;
        let tuned = candidate.tune_to_target()?;
        results.push((finesse, tuned.run_cyclic()?));
    }
    Ok(results)
}

/// What the design search maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Smallest circular distance (Hz) between distinct resonance lines
    /// populated by the circuit's inputs, within one free spectral
    /// range. Larger is better: degeneracies score zero.
    MaxMinModeSeparation,
    /// Average cyclic efficiency of the tuned circuit.
    MaxAvgEfficiency,
}

/// A parameter the design search may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeParam {
    /// Additive offset on the cavity optical length, m.
    OpticalLengthOffset,
    /// Absolute source waist, m.
    SourceWaist,
}

impl FreeParam {
    fn name(self) -> &'static str {
        match self {
            FreeParam::OpticalLengthOffset => "optical_length_offset",
            FreeParam::SourceWaist => "source_waist",
        }
    }
}

/// Search interval for one free parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub param: FreeParam,
    pub lo: f64,
    pub hi: f64,
}

/// One coarse-grid evaluation, kept for auditability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseEval {
    pub param: FreeParam,
    pub value: f64,
    pub objective: f64,
}

/// Outcome of [`optimize_design`].
#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    /// Best configuration found (free parameters applied; not retuned).
    pub spec: CircuitSpec,
    pub objective_value: f64,
    /// Best objective seen after each evaluation; nondecreasing.
    pub best_so_far: Vec<f64>,
    pub coarse_evaluations: Vec<CoarseEval>,
}

/// Coarse-grid points per free parameter per pass.
pub const COARSE_POINTS: usize = 17;
/// Golden-section refinement steps per free parameter per pass. The
/// bracket is one coarse cell wide, so the final position uncertainty is
/// about `cell * 0.618^GOLDEN_ITERATIONS`.
pub const GOLDEN_ITERATIONS: usize = 48;

fn min_mode_separation_hz(spec: &CircuitSpec) -> f64 {
    let phi_over_pi = spec.cavity.accumulated_gouy() / std::f64::consts::PI;
    // Distinct transverse orders populated after the +1 shift; low radial
    // orders carry nearly all vortex power. Modes sharing one order form
    // a single line that length tuning cannot split, so orders are
    // deduplicated rather than scored as zero-gap pairs.
    let mut orders: Vec<u32> = Vec::new();
    for &l in &spec.input_mode_set {
        let shifted = l + 1;
        for p in 0..=2u32 {
            orders.push(2 * p + shifted.unsigned_abs());
        }
    }
    orders.push(spec.target_l.unsigned_abs());
    orders.sort_unstable();
    orders.dedup();
    if orders.len() < 2 {
        return 0.5 * spec.cavity.fsr_hz();
    }
    let mut positions: Vec<f64> =
        orders.iter().map(|&s| ((s as f64 + 1.0) * phi_over_pi).fract()).collect();
    positions.sort_by(f64::total_cmp);
    let wrap = 1.0 - positions[positions.len() - 1] + positions[0];
    let min_gap = positions.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::min);
    min_gap * spec.cavity.fsr_hz()
}

fn evaluate(
    spec: &CircuitSpec,
    objective: Objective,
    param: &'static str,
    value: f64,
) -> Result<f64> {
    let score = match objective {
        Objective::MaxMinModeSeparation => min_mode_separation_hz(spec),
        Objective::MaxAvgEfficiency => spec.tune_to_target()?.run_cyclic()?.average_efficiency,
    };
    if !score.is_finite() {
        return Err(Error::NonFiniteObjective { param, value });
    }
    Ok(score)
}

fn apply_param(
    base: &CircuitSpec,
    base_optical_length: f64,
    param: FreeParam,
    value: f64,
) -> Result<CircuitSpec> {
    let mut candidate = base.clone();
    match param {
        FreeParam::OpticalLengthOffset => {
            candidate.cavity = base.cavity.with_optical_length(base_optical_length + value)?;
        }
        FreeParam::SourceWaist => {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid("source_waist", format!("{value} must be > 0")));
            }
            candidate.source_waist = value;
        }
    }
    Ok(candidate)
}

/// Deterministic derivative-free maximization: per free parameter, a
/// coarse grid over its bounds followed by golden-section refinement in
/// the best coarse cell, repeated as coordinate descent when several
/// parameters are free. No randomness, fixed budget, reproducible.
///
/// With no free parameters the input spec is returned unchanged along
/// with its objective value.
pub fn optimize_design(
    base: &CircuitSpec,
    objective: Objective,
    free: &[ParamBounds],
) -> Result<DesignResult> {
    base.validate()?;
    for bounds in free {
        if !(bounds.lo.is_finite() && bounds.hi.is_finite() && bounds.lo < bounds.hi) {
            return Err(Error::invalid(
                "bounds",
                format!("[{}, {}] for {}", bounds.lo, bounds.hi, bounds.param.name()),
            ));
        }
    }
    let base_optical_length = base.cavity.optical_length();
    let mut best = base.clone();
    let mut best_value = evaluate(&best, objective, "initial point", 0.0)?;
    let mut best_so_far = vec![best_value];
    let mut coarse_evaluations = Vec::new();

    let passes = if free.len() > 1 { 2 } else { 1 };
    for _ in 0..passes {
        for bounds in free {
            // Other coordinates stay frozen at the pre-sweep best while
            // this one moves.
            let anchor = best.clone();
            let probe = |x: f64,
                             best: &mut CircuitSpec,
                             best_value: &mut f64,
                             best_so_far: &mut Vec<f64>|
             -> Result<f64> {
                let candidate = apply_param(&anchor, base_optical_length, bounds.param, x)?;
                let value = evaluate(&candidate, objective, bounds.param.name(), x)?;
                if value > *best_value {
                    *best_value = value;
                    *best = candidate;
                }
                best_so_far.push(*best_value);
                Ok(value)
            };

            let mut cell_best_value = f64::NEG_INFINITY;
            let mut cell_best_x = bounds.lo;
            for i in 0..COARSE_POINTS {
                let t = i as f64 / (COARSE_POINTS - 1) as f64;
                let x = bounds.lo * (1.0 - t) + bounds.hi * t;
                let value = probe(x, &mut best, &mut best_value, &mut best_so_far)?;
                coarse_evaluations.push(CoarseEval { param: bounds.param, value: x, objective: value });
                if value > cell_best_value {
                    cell_best_value = value;
                    cell_best_x = x;
                }
            }

            let cell = (bounds.hi - bounds.lo) / (COARSE_POINTS - 1) as f64;
            let mut a = (cell_best_x - cell).max(bounds.lo);
            let mut b = (cell_best_x + cell).min(bounds.hi);
            const INV_PHI: f64 = 0.618_033_988_749_894_8;
            let mut x1 = b - INV_PHI * (b - a);
            let mut x2 = a + INV_PHI * (b - a);
            let mut f1 = probe(x1, &mut best, &mut best_value, &mut best_so_far)?;
            let mut f2 = probe(x2, &mut best, &mut best_value, &mut best_so_far)?;
            for _ in 0..GOLDEN_ITERATIONS {
                if f1 < f2 {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + INV_PHI * (b - a);
                    f2 = probe(x2, &mut best, &mut best_value, &mut best_so_far)?;
                } else {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - INV_PHI * (b - a);
                    f1 = probe(x1, &mut best, &mut best_value, &mut best_so_far)?;
                }
            }
        }
    }

    Ok(DesignResult { spec: best, objective_value: best_value, best_so_far, coarse_evaluations })
}

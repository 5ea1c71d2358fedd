//! Location-aware configuration parser.
//!
//! The format is INI-shaped: `[section]` headers over `key = value`
//! lines, `#` comments, and explicit units on every physical quantity.
//! All quantities are converted to SI base units (m, Hz, rad) exactly
//! once, here; the rest of the program never sees a unit string. Every
//! error carries the line, column, and dotted key it refers to, because
//! a silently mistyped physics parameter is the worst failure mode this
//! tool has.

use oamsim_core::{
    fit_decay_from_fwhm, CavityParams, CircuitSpec, DetectionModel, FidelityModel, FreeParam,
    Objective, ParamBounds, SPEED_OF_LIGHT,
};
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;

// ---------------------------------------------------------------------
// Errors and warnings
// ---------------------------------------------------------------------

/// A rejected document: where, which key, and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line of the offending token (1 when the document is empty).
    pub line: usize,
    /// 1-based column of the offending token.
    pub column: usize,
    /// Dotted `section.key` name when one is at fault.
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, column: usize, key: Option<String>, message: String) -> Self {
        ConfigError { line, column, key, message }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.column)?;
        if let Some(key) = &self.key {
            write!(f, "'{key}': ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Something ignored in lenient mode that strict mode would reject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigWarning {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

// ---------------------------------------------------------------------
// Typed document
// ---------------------------------------------------------------------

/// A parsed, unit-normalized configuration. Field units are SI.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDocument {
    pub cavity: CavitySection,
    pub beam: BeamSection,
    pub circuit: CircuitSection,
    pub sweep: Option<SweepSection>,
    pub optimize: Option<OptimizeSection>,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavitySection {
    /// Free spectral range, Hz.
    pub fsr: f64,
    /// Transmission full width at half maximum, Hz.
    pub fwhm: f64,
    pub refractive_index: f64,
    /// Mirror curvature radii, m; `inf` for a flat mirror.
    pub curvature_front: f64,
    pub curvature_back: f64,
    /// Extra linewidth from internal loss, Hz.
    pub internal_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamSection {
    /// Laser wavelength, m.
    pub wavelength: f64,
    /// Source vortex waist, m.
    pub source_waist: f64,
    /// Cavity fundamental waist (decomposition basis), m.
    pub cavity_waist: f64,
    /// Detection vortex waist, m; defaults to the source waist.
    pub detection_waist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSection {
    pub dimension: usize,
    pub inputs: Vec<i32>,
    pub target: i32,
    pub p_max: u32,
    pub l_max: u32,
    pub shift_fidelity: FidelityModel,
    pub detection: DetectionModel,
    /// Relative phase between the two arms, rad.
    pub arm_phase: f64,
    pub mirror_flips_right_arm: u32,
    pub extra_flips_left_arm: u32,
    /// Deliberate FP2 frequency offset for sensitivity studies, Hz.
    pub fp2_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Wavelength sweep; `start`/`stop` are frequency offsets from the
    /// tuned laser, Hz.
    Wavelength,
    /// Source-waist scan; `start`/`stop` are waists, m.
    SourceWaist,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub inputs: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSection {
    pub objective: Objective,
    pub free: Vec<FreeParam>,
    /// Bounds per free parameter, m (waist) or m (length offset).
    pub source_waist_lo: f64,
    pub source_waist_hi: f64,
    pub length_offset_lo: f64,
    pub length_offset_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    /// Experimental reference the run summary reports its deviation
    /// from; dimensionless.
    pub reference_efficiency: f64,
}

impl ConfigDocument {
    /// Build the tuned circuit this document describes. The FP length is
    /// anchored from the configured FSR; internal loss is given as the
    /// linewidth it would add.
    pub fn to_circuit_spec(&self) -> oamsim_core::Result<CircuitSpec> {
        let (decay_left, decay_right) = fit_decay_from_fwhm(self.cavity.fwhm)?;
        let optical_length = SPEED_OF_LIGHT / (2.0 * self.cavity.fsr);
        let cavity = CavityParams::new(
            optical_length / self.cavity.refractive_index,
            self.cavity.refractive_index,
            self.cavity.curvature_front,
            self.cavity.curvature_back,
            decay_left,
            decay_right,
            PI * self.cavity.internal_loss,
        )?;
        let mut spec = CircuitSpec::new(
            cavity,
            TAU * SPEED_OF_LIGHT / self.beam.wavelength,
            self.beam.source_waist,
            self.beam.cavity_waist,
        );
        spec.dimension = self.circuit.dimension;
        spec.input_mode_set = self.circuit.inputs.clone();
        spec.target_l = self.circuit.target;
        spec.detection_waist = self.beam.detection_waist;
        spec.shift_fidelity = self.circuit.shift_fidelity;
        spec.detection = self.circuit.detection;
        spec.arm_phase = self.circuit.arm_phase;
        spec.mirror_flips_right_arm = self.circuit.mirror_flips_right_arm;
        spec.extra_flips_left_arm = self.circuit.extra_flips_left_arm;
        spec.fp2_detuning_offset = TAU * self.circuit.fp2_offset;
        spec.p_max = self.circuit.p_max;
        spec.l_max = self.circuit.l_max;
        spec.tune_to_target()
    }

    /// Optimizer bounds in the order the free parameters were listed.
    pub fn param_bounds(&self) -> Vec<ParamBounds> {
        let Some(opt) = &self.optimize else { return Vec::new() };
        opt.free
            .iter()
            .map(|&param| match param {
                FreeParam::SourceWaist => {
                    ParamBounds { param, lo: opt.source_waist_lo, hi: opt.source_waist_hi }
                }
                FreeParam::OpticalLengthOffset => {
                    ParamBounds { param, lo: opt.length_offset_lo, hi: opt.length_offset_hi }
                }
            })
            .collect()
    }
}

// ---------------------------------------------------------------------
// Raw scanning
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
struct RawValue {
    text: String,
    line: usize,
    /// Column where the value text starts.
    value_column: usize,
}

struct RawDocument {
    /// `(section, key)` -> value, locations preserved.
    entries: BTreeMap<(String, String), RawValue>,
    /// Section name -> header line.
    sections: BTreeMap<String, usize>,
    warnings: Vec<ConfigWarning>,
}

const SECTION_NAMES: &[&str] = &["cavity", "beam", "circuit", "sweep", "optimize", "output"];

fn known_keys(section: &str) -> &'static [&'static str] {
    match section {
        "cavity" => {
            &["fsr", "fwhm", "refractive_index", "curvature_front", "curvature_back", "internal_loss"]
        }
        "beam" => &["wavelength", "source_waist", "cavity_waist", "detection_waist"],
        "circuit" => &[
            "dimension",
            "inputs",
            "target",
            "p_max",
            "l_max",
            "shift_fidelity",
            "detection",
            "arm_phase",
            "mirror_flips_right_arm",
            "extra_flips_left_arm",
            "fp2_offset",
        ],
        "sweep" => &["kind", "start", "stop", "steps", "inputs"],
        "optimize" => &[
            "objective",
            "free",
            "source_waist_lo",
            "source_waist_hi",
            "length_offset_lo",
            "length_offset_hi",
        ],
        "output" => &["reference_efficiency"],
        _ => &[],
    }
}

/// First pass: structure only. Section headers, key-value shape,
/// duplicate and unknown names; no value interpretation.
fn scan(text: &str, strict: bool) -> Result<RawDocument, ConfigError> {
    let mut raw = RawDocument {
        entries: BTreeMap::new(),
        sections: BTreeMap::new(),
        warnings: Vec::new(),
    };
    // None = before any header; Some(None) = inside an unknown section
    // being skipped leniently.
    let mut current: Option<Option<String>> = None;
    for (i, full_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match full_line.find('#') {
            Some(pos) => &full_line[..pos],
            None => full_line,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();

        if let Some(body) = trimmed.strip_prefix('[') {
            let Some(name) = body.strip_suffix(']') else {
                return Err(ConfigError::new(
                    line_no,
                    indent + 1,
                    None,
                    format!("section header '{trimmed}' is missing its closing ']'"),
                ));
            };
            let name = name.trim();
            if !SECTION_NAMES.contains(&name) {
                let message = format!(
                    "unknown section '[{name}]' (expected one of {})",
                    SECTION_NAMES.join(", ")
                );
                if strict {
                    return Err(ConfigError::new(line_no, indent + 1, None, message));
                }
                raw.warnings.push(ConfigWarning { line: line_no, column: indent + 1, message });
                current = Some(None);
                continue;
            }
            if raw.sections.insert(name.to_string(), line_no).is_some() {
                return Err(ConfigError::new(
                    line_no,
                    indent + 1,
                    None,
                    format!("section '[{name}]' appears twice"),
                ));
            }
            current = Some(Some(name.to_string()));
            continue;
        }

        let Some(eq) = trimmed.find('=') else {
            return Err(ConfigError::new(
                line_no,
                indent + 1,
                None,
                format!("expected 'key = value' or a '[section]' header, found '{trimmed}'"),
            ));
        };
        let key = trimmed[..eq].trim();
        let value = trimmed[eq + 1..].trim();
        if key.is_empty() {
            return Err(ConfigError::new(line_no, indent + 1, None, "empty key".into()));
        }
        let value_column = indent + 1 + (trimmed[eq + 1..].len() - trimmed[eq + 1..].trim_start().len()) + eq + 1;
        let Some(section) = &current else {
            return Err(ConfigError::new(
                line_no,
                indent + 1,
                Some(key.to_string()),
                "key appears before any [section] header".into(),
            ));
        };
        let Some(section) = section else {
            continue; // inside a leniently skipped unknown section
        };
        let dotted = format!("{section}.{key}");
        if !known_keys(section).contains(&key) {
            let message = format!(
                "unknown key (known keys in [{section}]: {})",
                known_keys(section).join(", ")
            );
            if strict {
                return Err(ConfigError::new(line_no, indent + 1, Some(dotted), message));
            }
            raw.warnings.push(ConfigWarning {
                line: line_no,
                column: indent + 1,
                message: format!("'{dotted}': {message}"),
            });
            continue;
        }
        if value.is_empty() {
            return Err(ConfigError::new(line_no, value_column, Some(dotted), "empty value".into()));
        }
        let previous = raw.entries.insert(
            (section.clone(), key.to_string()),
            RawValue { text: value.to_string(), line: line_no, value_column },
        );
        if let Some(previous) = previous {
            return Err(ConfigError::new(
                line_no,
                indent + 1,
                Some(dotted),
                format!("key already set on line {}", previous.line),
            ));
        }
    }
    Ok(raw)
}

// ---------------------------------------------------------------------
// Units and typed extraction
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Length,
    Frequency,
    Angle,
}

impl Dimension {
    fn describe(self) -> &'static str {
        match self {
            Dimension::Length => "a length (nm, um, mm, cm, m)",
            Dimension::Frequency => "a frequency (Hz, kHz, MHz, GHz, THz)",
            Dimension::Angle => "an angle (rad)",
        }
    }
}

fn unit_table(unit: &str) -> Option<(Dimension, f64)> {
    let entry = match unit {
        "nm" => (Dimension::Length, 1e-9),
        "um" => (Dimension::Length, 1e-6),
        "mm" => (Dimension::Length, 1e-3),
        "cm" => (Dimension::Length, 1e-2),
        "m" => (Dimension::Length, 1.0),
        "Hz" => (Dimension::Frequency, 1.0),
        "kHz" => (Dimension::Frequency, 1e3),
        "MHz" => (Dimension::Frequency, 1e6),
        "GHz" => (Dimension::Frequency, 1e9),
        "THz" => (Dimension::Frequency, 1e12),
        "rad" => (Dimension::Angle, 1.0),
        _ => return None,
    };
    Some(entry)
}

struct Extractor {
    raw: RawDocument,
}

impl Extractor {
    fn take(&mut self, section: &str, key: &str) -> Option<RawValue> {
        self.raw.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn fail(v: &RawValue, dotted: &str, column: usize, message: String) -> ConfigError {
        ConfigError::new(v.line, column, Some(dotted.to_string()), message)
    }

    /// `<number> <unit>` of the expected dimension, converted to SI.
    /// `inf` is accepted only where a flat mirror makes sense.
    fn quantity(
        &mut self,
        section: &str,
        key: &str,
        dimension: Dimension,
        allow_inf: bool,
        default: f64,
    ) -> Result<f64, ConfigError> {
        let dotted = format!("{section}.{key}");
        let Some(v) = self.take(section, key) else { return Ok(default) };
        let tokens: Vec<&str> = v.text.split_whitespace().collect();
        match tokens.as_slice() {
            ["inf"] if allow_inf => Ok(f64::INFINITY),
            [number, unit] => {
                let Some((found, factor)) = unit_table(unit) else {
                    return Err(Self::fail(
                        &v,
                        &dotted,
                        v.value_column,
                        format!("unknown unit '{unit}', expected {}", dimension.describe()),
                    ));
                };
                if found != dimension {
                    return Err(Self::fail(
                        &v,
                        &dotted,
                        v.value_column,
                        format!("unit mismatch: expected {}, got '{unit}'", dimension.describe()),
                    ));
                }
                let value: f64 = number.parse().map_err(|_| {
                    Self::fail(&v, &dotted, v.value_column, format!("'{number}' is not a number"))
                })?;
                if !value.is_finite() {
                    return Err(Self::fail(&v, &dotted, v.value_column, "must be finite".into()));
                }
                Ok(value * factor)
            }
            [single] => Err(Self::fail(
                &v,
                &dotted,
                v.value_column,
                format!("'{single}' is missing its unit; expected {}", dimension.describe()),
            )),
            _ => Err(Self::fail(
                &v,
                &dotted,
                v.value_column,
                format!("expected '<number> <unit>', found '{}'", v.text),
            )),
        }
    }

    /// A dimensionless number.
    fn bare(&mut self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        let dotted = format!("{section}.{key}");
        let Some(v) = self.take(section, key) else { return Ok(default) };
        v.text.parse::<f64>().map_err(|_| {
            Self::fail(
                &v,
                &dotted,
                v.value_column,
                format!("'{}' is not a plain number (this key is dimensionless)", v.text),
            )
        })
    }

    fn integer(
        &mut self,
        section: &str,
        key: &str,
        default: i64,
        lo: i64,
        hi: i64,
    ) -> Result<i64, ConfigError> {
        let dotted = format!("{section}.{key}");
        let Some(v) = self.take(section, key) else { return Ok(default) };
        let value: i64 = v.text.parse().map_err(|_| {
            Self::fail(&v, &dotted, v.value_column, format!("'{}' is not an integer", v.text))
        })?;
        if value < lo || value > hi {
            return Err(Self::fail(
                &v,
                &dotted,
                v.value_column,
                format!("{value} is outside [{lo}, {hi}]"),
            ));
        }
        Ok(value)
    }

    fn int_list(
        &mut self,
        section: &str,
        key: &str,
        default: &[i32],
    ) -> Result<Vec<i32>, ConfigError> {
        let dotted = format!("{section}.{key}");
        let Some(v) = self.take(section, key) else { return Ok(default.to_vec()) };
        let mut out = Vec::new();
        for item in v.text.split(',') {
            let item = item.trim();
            let value: i32 = item.parse().map_err(|_| {
                Self::fail(
                    &v,
                    &dotted,
                    v.value_column,
                    format!("'{item}' is not an integer (expected a comma-separated list)"),
                )
            })?;
            out.push(value);
        }
        Ok(out)
    }

    fn word(
        &mut self,
        section: &str,
        key: &str,
        allowed: &[&str],
        default: &str,
    ) -> Result<String, ConfigError> {
        let dotted = format!("{section}.{key}");
        let Some(v) = self.take(section, key) else { return Ok(default.to_string()) };
        let text = v.text.trim();
        if allowed.contains(&text) {
            Ok(text.to_string())
        } else {
            Err(Self::fail(
                &v,
                &dotted,
                v.value_column,
                format!("'{text}' is not one of {}", allowed.join(", ")),
            ))
        }
    }
}

// ---------------------------------------------------------------------
// Parse
// ---------------------------------------------------------------------

const REQUIRED: &[(&str, &str)] = &[
    ("cavity", "fsr"),
    ("cavity", "fwhm"),
    ("cavity", "curvature_back"),
    ("beam", "wavelength"),
    ("beam", "source_waist"),
    ("beam", "cavity_waist"),
];

/// Parse a document. Strict mode rejects unknown sections and keys;
/// lenient mode reports them as warnings and continues.
pub fn parse(text: &str, strict: bool) -> Result<(ConfigDocument, Vec<ConfigWarning>), ConfigError> {
    let raw = scan(text, strict)?;

    // All required keys first, reported together: a user fixing a
    // skeleton config should not discover them one at a time.
    let missing: Vec<String> = REQUIRED
        .iter()
        .filter(|(s, k)| !raw.entries.contains_key(&(s.to_string(), k.to_string())))
        .map(|(s, k)| format!("{s}.{k}"))
        .collect();
    if !missing.is_empty() {
        let first_section = missing[0].split('.').next().unwrap();
        let line = raw.sections.get(first_section).copied().unwrap_or(1);
        return Err(ConfigError::new(
            line,
            1,
            Some(missing[0].clone()),
            format!("missing required key(s): {}", missing.join(", ")),
        ));
    }

    let mut ex = Extractor { raw };

    let cavity = CavitySection {
        fsr: ex.quantity("cavity", "fsr", Dimension::Frequency, false, f64::NAN)?,
        fwhm: ex.quantity("cavity", "fwhm", Dimension::Frequency, false, f64::NAN)?,
        refractive_index: ex.bare("cavity", "refractive_index", 1.453)?,
        curvature_front: ex.quantity(
            "cavity",
            "curvature_front",
            Dimension::Length,
            true,
            f64::INFINITY,
        )?,
        curvature_back: ex.quantity("cavity", "curvature_back", Dimension::Length, true, f64::NAN)?,
        internal_loss: ex.quantity("cavity", "internal_loss", Dimension::Frequency, false, 0.0)?,
    };

    let source_waist = ex.quantity("beam", "source_waist", Dimension::Length, false, f64::NAN)?;
    let beam = BeamSection {
        wavelength: ex.quantity("beam", "wavelength", Dimension::Length, false, f64::NAN)?,
        source_waist,
        cavity_waist: ex.quantity("beam", "cavity_waist", Dimension::Length, false, f64::NAN)?,
        detection_waist: ex.quantity(
            "beam",
            "detection_waist",
            Dimension::Length,
            false,
            source_waist,
        )?,
    };

    let fidelity = ex.word(
        "circuit",
        "shift_fidelity",
        &["phase_only", "index_shift"],
        "phase_only",
    )?;
    let detection = ex.word(
        "circuit",
        "detection",
        &["vortex_projection", "modal_power"],
        "vortex_projection",
    )?;
    let circuit = CircuitSection {
        dimension: ex.integer("circuit", "dimension", 6, 1, 1024)? as usize,
        inputs: ex.int_list("circuit", "inputs", &[-3, -2, -1, 0, 1, 2])?,
        target: ex.integer("circuit", "target", 3, -64, 64)? as i32,
        p_max: ex.integer("circuit", "p_max", 10, 0, 256)? as u32,
        l_max: ex.integer("circuit", "l_max", 6, 0, 256)? as u32,
        shift_fidelity: if fidelity == "index_shift" {
            FidelityModel::IndexShift
        } else {
            FidelityModel::PhaseOnly
        },
        detection: if detection == "modal_power" {
            DetectionModel::ModalPower
        } else {
            DetectionModel::VortexProjection
        },
        arm_phase: ex.quantity("circuit", "arm_phase", Dimension::Angle, false, 0.0)?,
        mirror_flips_right_arm: ex.integer("circuit", "mirror_flips_right_arm", 3, 0, 64)? as u32,
        extra_flips_left_arm: ex.integer("circuit", "extra_flips_left_arm", 1, 0, 64)? as u32,
        fp2_offset: ex.quantity("circuit", "fp2_offset", Dimension::Frequency, false, 0.0)?,
    };

    let sweep = if ex.raw.sections.contains_key("sweep") {
        let kind_word = ex.word("sweep", "kind", &["wavelength", "source_waist"], "wavelength")?;
        let (kind, dimension) = match kind_word.as_str() {
            "wavelength" => (SweepKind::Wavelength, Dimension::Frequency),
            _ => (SweepKind::SourceWaist, Dimension::Length),
        };
        // Units follow the kind: frequency offsets around the laser for
        // wavelength sweeps, absolute waists for scans.
        Some(SweepSection {
            kind,
            start: ex.quantity("sweep", "start", dimension, false, f64::NAN)?,
            stop: ex.quantity("sweep", "stop", dimension, false, f64::NAN)?,
            steps: ex.integer("sweep", "steps", 4000, 2, 10_000_000)? as usize,
            inputs: ex.int_list("sweep", "inputs", &[0, 1, -1, 2, -2, 3, -3])?,
        })
    } else {
        None
    };
    if let Some(sweep) = &sweep {
        if sweep.start.is_nan() || sweep.stop.is_nan() {
            let line = ex.raw.sections["sweep"];
            return Err(ConfigError::new(
                line,
                1,
                Some("sweep.start".into()),
                "a [sweep] section needs explicit start and stop".into(),
            ));
        }
    }

    let optimize = if ex.raw.sections.contains_key("optimize") {
        let objective = match ex
            .word(
                "optimize",
                "objective",
                &["max_avg_efficiency", "max_min_mode_separation"],
                "max_avg_efficiency",
            )?
            .as_str()
        {
            "max_min_mode_separation" => Objective::MaxMinModeSeparation,
            _ => Objective::MaxAvgEfficiency,
        };
        let free_value = ex.take("optimize", "free");
        let mut free = Vec::new();
        if let Some(v) = free_value {
            for item in v.text.split(',') {
                let item = item.trim();
                free.push(match item {
                    "source_waist" => FreeParam::SourceWaist,
                    "length_offset" => FreeParam::OpticalLengthOffset,
                    _ => {
                        return Err(Extractor::fail(
                            &v,
                            "optimize.free",
                            v.value_column,
                            format!("'{item}' is not one of source_waist, length_offset"),
                        ))
                    }
                });
            }
        } else {
            free.push(FreeParam::SourceWaist);
        }
        Some(OptimizeSection {
            objective,
            free,
            source_waist_lo: ex.quantity(
                "optimize",
                "source_waist_lo",
                Dimension::Length,
                false,
                beam.cavity_waist / 4.0,
            )?,
            source_waist_hi: ex.quantity(
                "optimize",
                "source_waist_hi",
                Dimension::Length,
                false,
                beam.cavity_waist,
            )?,
            length_offset_lo: ex.quantity(
                "optimize",
                "length_offset_lo",
                Dimension::Length,
                false,
                -30e-6,
            )?,
            length_offset_hi: ex.quantity(
                "optimize",
                "length_offset_hi",
                Dimension::Length,
                false,
                30e-6,
            )?,
        })
    } else {
        None
    };

    let output = OutputSection {
        reference_efficiency: ex.bare("output", "reference_efficiency", 0.96)?,
    };

    let warnings = std::mem::take(&mut ex.raw.warnings);
    Ok((
        ConfigDocument { cavity, beam, circuit, sweep, optimize, output },
        warnings,
    ))
}

// ---------------------------------------------------------------------
// Serialize
// ---------------------------------------------------------------------

fn curvature(value: f64) -> String {
    if value.is_infinite() {
        "inf".to_string()
    } else {
        format!("{value} m")
    }
}

fn int_list(values: &[i32]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

/// Canonical text form: SI units, fixed section and key order, every
/// resolved default written out. `parse(serialize(parse(x)))` equals
/// `parse(x)`; floats survive via shortest-round-trip formatting.
pub fn serialize(doc: &ConfigDocument) -> String {
    let mut out = String::new();
    let mut push = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };

    push("[cavity]".into());
    push(format!("fsr = {} Hz", doc.cavity.fsr));
    push(format!("fwhm = {} Hz", doc.cavity.fwhm));
    push(format!("refractive_index = {}", doc.cavity.refractive_index));
    push(format!("curvature_front = {}", curvature(doc.cavity.curvature_front)));
    push(format!("curvature_back = {}", curvature(doc.cavity.curvature_back)));
    push(format!("internal_loss = {} Hz", doc.cavity.internal_loss));

    push("\n[beam]".into());
    push(format!("wavelength = {} m", doc.beam.wavelength));
    push(format!("source_waist = {} m", doc.beam.source_waist));
    push(format!("cavity_waist = {} m", doc.beam.cavity_waist));
    push(format!("detection_waist = {} m", doc.beam.detection_waist));

    push("\n[circuit]".into());
    push(format!("dimension = {}", doc.circuit.dimension));
    push(format!("inputs = {}", int_list(&doc.circuit.inputs)));
    push(format!("target = {}", doc.circuit.target));
    push(format!("p_max = {}", doc.circuit.p_max));
    push(format!("l_max = {}", doc.circuit.l_max));
    push(format!(
        "shift_fidelity = {}",
        match doc.circuit.shift_fidelity {
            FidelityModel::IndexShift => "index_shift",
            FidelityModel::PhaseOnly => "phase_only",
        }
    ));
    push(format!(
        "detection = {}",
        match doc.circuit.detection {
            DetectionModel::ModalPower => "modal_power",
            DetectionModel::VortexProjection => "vortex_projection",
        }
    ));
    push(format!("arm_phase = {} rad", doc.circuit.arm_phase));
    push(format!("mirror_flips_right_arm = {}", doc.circuit.mirror_flips_right_arm));
    push(format!("extra_flips_left_arm = {}", doc.circuit.extra_flips_left_arm));
    push(format!("fp2_offset = {} Hz", doc.circuit.fp2_offset));

    if let Some(sweep) = &doc.sweep {
        push("\n[sweep]".into());
        match sweep.kind {
            SweepKind::Wavelength => {
                push("kind = wavelength".into());
                push(format!("start = {} Hz", sweep.start));
                push(format!("stop = {} Hz", sweep.stop));
            }
            SweepKind::SourceWaist => {
                push("kind = source_waist".into());
                push(format!("start = {} m", sweep.start));
                push(format!("stop = {} m", sweep.stop));
            }
        }
        push(format!("steps = {}", sweep.steps));
        push(format!("inputs = {}", int_list(&sweep.inputs)));
    }

    if let Some(opt) = &doc.optimize {
        push("\n[optimize]".into());
        push(format!(
            "objective = {}",
            match opt.objective {
                Objective::MaxAvgEfficiency => "max_avg_efficiency",
                Objective::MaxMinModeSeparation => "max_min_mode_separation",
            }
        ));
        push(format!(
            "free = {}",
            opt.free
                .iter()
                .map(|p| match p {
                    FreeParam::SourceWaist => "source_waist",
                    FreeParam::OpticalLengthOffset => "length_offset",
                })
                .collect::<Vec<_>>()
                .join(", ")
        ));
        push(format!("source_waist_lo = {} m", opt.source_waist_lo));
        push(format!("source_waist_hi = {} m", opt.source_waist_hi));
        push(format!("length_offset_lo = {} m", opt.length_offset_lo));
        push(format!("length_offset_hi = {} m", opt.length_offset_hi));
    }

    push("\n[output]".into());
    push(format!("reference_efficiency = {}", doc.output.reference_efficiency));
    out
}

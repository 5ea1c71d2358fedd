//! oamsim: drive the six-mode OAM cyclic-transformation simulator from
//! unit-checked config files and emit plot-ready tables.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical or
//! physics error, 3 I/O error.

use clap::{Args, Parser, Subcommand};
use oamsim_cli::config::{self, ConfigDocument, SweepKind};
use oamsim_cli::emit;
use oamsim_core::{
    optimize_design, waist_scan, wavelength_sweep, FreeParam, Objective, ParamBounds, SweepGrid,
    SweepPrep, SweepQuantity, SPEED_OF_LIGHT,
};
use serde_json::json;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "oamsim",
    version,
    about = "Cyclic transformation of orbital-angular-momentum modes through a two-cavity interferometer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the cyclic transformation and write the power matrix.
    Cyclic(RunArgs),
    /// Sweep cavity transmission spectra, one trace per input charge.
    Spectra(RunArgs),
    /// Scan on-resonance transmission against the source waist.
    WaistScan(RunArgs),
    /// Optimize the configured free parameters and write the trace.
    Design(RunArgs),
    /// Parse and physics-check a config; writes nothing.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for parallel sweeps (default: OAMSIM_THREADS,
    /// then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Reject unknown config keys and sections (the default).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Skip unknown config keys and sections with a warning.
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Reject unknown config keys and sections (the default).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Skip unknown config keys and sections with a warning.
    #[arg(long)]
    lenient: bool,
}

enum CliError {
    Config(String),
    Physics(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Physics(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Physics(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<oamsim_core::Error> for CliError {
    fn from(e: oamsim_core::Error) -> Self {
        CliError::Physics(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit 2 on usage errors; 2 is the numerical-error
            // code here, so usage problems share the config-error code.
            let _ = e.print();
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oamsim: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(args) => validate(&args),
        Command::Cyclic(args) => {
            let (doc, spec) = prepare(&args)?;
            run_cyclic(&args, &doc, spec)
        }
        Command::Spectra(args) => {
            let (doc, spec) = prepare(&args)?;
            run_spectra(&args, &doc, spec)
        }
        Command::WaistScan(args) => {
            let (doc, spec) = prepare(&args)?;
            run_waist_scan(&args, &doc, spec)
        }
        Command::Design(args) => {
            let (doc, spec) = prepare(&args)?;
            run_design(&args, &doc, spec)
        }
    }
}

// ---------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------

fn load_document(path: &Path, strict: bool) -> Result<ConfigDocument, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (doc, warnings) = config::parse(&text, strict)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for w in &warnings {
        eprintln!("oamsim: warning: {}: {w}", path.display());
    }
    Ok(doc)
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("OAMSIM_THREADS") {
            Ok(text) => text.trim().parse::<usize>().map_err(|_| {
                CliError::Config(format!("OAMSIM_THREADS = '{text}' is not a thread count"))
            })?,
            Err(_) => return Ok(None),
        },
    };
    if n == 0 || n > 4096 {
        return Err(CliError::Config(format!("thread count {n} is outside [1, 4096]")));
    }
    Ok(Some(n))
}

/// Load, parse, and build the tuned circuit; set up the worker pool.
fn prepare(args: &RunArgs) -> Result<(ConfigDocument, oamsim_core::CircuitSpec), CliError> {
    if let Some(n) = resolve_threads(args.threads)? {
        // The global pool can only be configured once per process;
        // a second configuration attempt is not an error for us.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let doc = load_document(&args.config, !args.lenient)?;
    let spec = doc.to_circuit_spec()?;
    Ok((doc, spec))
}

fn make_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn io_err(dir: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", dir.display()))
}

// ---------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------

fn validate(args: &ValidateArgs) -> Result<(), CliError> {
    let doc = load_document(&args.config, !args.lenient)?;
    let spec = doc.to_circuit_spec()?;
    let (fsr, fwhm, finesse) = spec.cavity.linewidth_and_finesse();
    println!("config OK: {}", args.config.display());
    println!(
        "  cavity: FSR {:.6} GHz, FWHM {:.3} MHz, finesse {:.2}",
        fsr / 1e9,
        fwhm / 1e6,
        finesse
    );
    println!(
        "  beam: wavelength {:.4} nm, source waist {:.1} um, cavity waist {:.1} um",
        doc.beam.wavelength * 1e9,
        doc.beam.source_waist * 1e6,
        doc.beam.cavity_waist * 1e6
    );
    println!(
        "  circuit: {} inputs {:?}, target l = {}",
        spec.dimension, spec.input_mode_set, spec.target_l
    );
    Ok(())
}

fn run_cyclic(args: &RunArgs, doc: &ConfigDocument, spec: oamsim_core::CircuitSpec) -> Result<(), CliError> {
    let report = spec.run_cyclic()?;
    make_out_dir(&args.out)?;
    let err = io_err(&args.out);
    let mut artifacts = vec![
        emit::power_matrix(&args.out, &report).map_err(&err)?,
        emit::efficiencies(&args.out, &report).map_err(&err)?,
    ];
    let reference = doc.output.reference_efficiency;
    let deviation = report.average_efficiency - reference;
    artifacts.push(
        emit::result_json(
            &args.out,
            json!({
                "schema": "oamsim.result.v1",
                "command": "cyclic",
                "inputs": report.input_order,
                "columns": report.column_order,
                "power_matrix": report.power_matrix,
                "efficiencies": report.efficiencies,
                "average_efficiency": report.average_efficiency,
                "unaccounted_power": report.unaccounted_power,
                "reference_efficiency": reference,
                "deviation_from_reference": deviation,
            }),
        )
        .map_err(&err)?,
    );
    emit::manifest(&args.out, "cyclic", &args.config, !args.lenient, &artifacts).map_err(&err)?;

    for (i, &input) in report.input_order.iter().enumerate() {
        println!(
            "  input l = {input:>2} -> l = {:>2}: efficiency {:.6}",
            spec.cyclic_target(input),
            report.efficiencies[i]
        );
    }
    println!(
        "average efficiency {:.6} (reference {:.4}, deviation {:+.6})",
        report.average_efficiency, reference, deviation
    );
    Ok(())
}

fn run_spectra(args: &RunArgs, doc: &ConfigDocument, spec: oamsim_core::CircuitSpec) -> Result<(), CliError> {
    // Default window: one FSR from just below the tuned resonance, the
    // range that shows both main peaks and the degeneracy artifacts.
    let (start, stop, steps, inputs) = match &doc.sweep {
        Some(sweep) => {
            if sweep.kind != SweepKind::Wavelength {
                return Err(CliError::Config(
                    "'sweep.kind': spectra needs kind = wavelength, found source_waist".into(),
                ));
            }
            (sweep.start, sweep.stop, sweep.steps, sweep.inputs.clone())
        }
        None => (-2e9, 10e9, 4000, vec![0, 1, -1, 2, -2, 3, -3]),
    };
    if start >= stop {
        return Err(CliError::Config(format!(
            "'sweep.start': offset {} GHz must be below stop {} GHz",
            start / 1e9,
            stop / 1e9
        )));
    }
    let laser_hz = spec.laser_frequency / std::f64::consts::TAU;
    let grid = SweepGrid::new(
        SweepQuantity::Wavelength,
        SPEED_OF_LIGHT / (laser_hz + stop),
        SPEED_OF_LIGHT / (laser_hz + start),
        steps,
    )?;
    let prep = SweepPrep {
        source_waist: spec.source_waist,
        cavity_waist: spec.cavity_waist,
        p_max: spec.p_max,
    };
    let outcome = wavelength_sweep(&spec.cavity, &grid, &inputs, &prep)?;
    if let Some(w) = outcome.resolution_warning {
        eprintln!(
            "oamsim: warning: grid step {:.1} MHz exceeds a quarter linewidth ({:.1} MHz); peaks may be missed",
            w.grid_step_hz / 1e6,
            w.max_recommended_hz / 1e6
        );
    }

    make_out_dir(&args.out)?;
    let err = io_err(&args.out);
    let mut artifacts = Vec::new();
    for trace in &outcome.traces {
        artifacts.push(emit::spectrum(&args.out, trace, laser_hz).map_err(&err)?);
    }
    artifacts.push(emit::peaks(&args.out, &outcome.traces, laser_hz).map_err(&err)?);
    let trace_summaries: Vec<serde_json::Value> = outcome
        .traces
        .iter()
        .map(|t| {
            json!({
                "input_l": t.input_l,
                "points": t.points.len(),
                "peaks": t.peaks.iter().map(|p| json!({
                    "wavelength_nm": p.position * 1e9,
                    "height": p.height,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    artifacts.push(
        emit::result_json(
            &args.out,
            json!({
                "schema": "oamsim.result.v1",
                "command": "spectra",
                "laser_frequency_hz": laser_hz,
                "offset_window_hz": [start, stop],
                "steps": steps,
                "traces": trace_summaries,
                "resolution_warning": outcome.resolution_warning.map(|w| json!({
                    "grid_step_hz": w.grid_step_hz,
                    "max_recommended_hz": w.max_recommended_hz,
                })),
            }),
        )
        .map_err(&err)?,
    );
    emit::manifest(&args.out, "spectra", &args.config, !args.lenient, &artifacts).map_err(&err)?;

    for trace in &outcome.traces {
        let top = trace.peaks.iter().map(|p| p.height).fold(0.0f64, f64::max);
        println!(
            "  l = {:>2}: {} points, {} peaks, highest {:.4}",
            trace.input_l,
            trace.points.len(),
            trace.peaks.len(),
            top
        );
    }
    Ok(())
}

fn run_waist_scan(args: &RunArgs, doc: &ConfigDocument, spec: oamsim_core::CircuitSpec) -> Result<(), CliError> {
    let (start, stop, steps, inputs) = match &doc.sweep {
        Some(sweep) => {
            if sweep.kind != SweepKind::SourceWaist {
                return Err(CliError::Config(
                    "'sweep.kind': waist-scan needs kind = source_waist, found wavelength".into(),
                ));
            }
            (sweep.start, sweep.stop, sweep.steps, sweep.inputs.clone())
        }
        None => (12.5e-6, 100e-6, 36, vec![0, 1, 2, 3]),
    };
    let grid = SweepGrid::new(SweepQuantity::SourceWaist, start, stop, steps)?;
    let rows = waist_scan(&spec.cavity, &inputs, &grid, spec.cavity_waist, spec.p_max)?;

    make_out_dir(&args.out)?;
    let err = io_err(&args.out);
    let mut artifacts = vec![emit::waist_scan(&args.out, &rows).map_err(&err)?];
    let summaries: Vec<serde_json::Value> = rows
        .iter()
        .map(|row| {
            let (best_w, best_t) = row
                .points
                .iter()
                .copied()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((f64::NAN, f64::NAN));
            json!({
                "input_l": row.input_l,
                "best_waist_m": best_w,
                "best_transmission": best_t,
            })
        })
        .collect();
    artifacts.push(
        emit::result_json(
            &args.out,
            json!({
                "schema": "oamsim.result.v1",
                "command": "waist-scan",
                "cavity_waist_m": spec.cavity_waist,
                "grid_m": [start, stop],
                "steps": steps,
                "rows": summaries,
            }),
        )
        .map_err(&err)?,
    );
    emit::manifest(&args.out, "waist-scan", &args.config, !args.lenient, &artifacts)
        .map_err(&err)?;

    for row in &rows {
        let (best_w, best_t) = row
            .points
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((f64::NAN, f64::NAN));
        println!(
            "  l = {:>2}: best transmission {:.4} at source waist {:.1} um",
            row.input_l,
            best_t,
            best_w * 1e6
        );
    }
    Ok(())
}

fn run_design(args: &RunArgs, doc: &ConfigDocument, spec: oamsim_core::CircuitSpec) -> Result<(), CliError> {
    let (objective, bounds) = match &doc.optimize {
        Some(opt) => (opt.objective, doc.param_bounds()),
        None => (
            Objective::MaxAvgEfficiency,
            vec![ParamBounds {
                param: FreeParam::SourceWaist,
                lo: doc.beam.cavity_waist / 4.0,
                hi: doc.beam.cavity_waist,
            }],
        ),
    };
    let result = optimize_design(&spec, objective, &bounds)?;

    make_out_dir(&args.out)?;
    let err = io_err(&args.out);
    let mut artifacts = emit::design_trace(&args.out, &result).map_err(&err)?;

    // The optimized document round-trips through the config format, so
    // a design run's output is directly runnable.
    let mut optimized = doc.clone();
    optimized.beam.source_waist = result.spec.source_waist;
    optimized.beam.detection_waist = result.spec.detection_waist;
    optimized.cavity.fsr = SPEED_OF_LIGHT / (2.0 * result.spec.cavity.optical_length());
    std::fs::write(args.out.join("optimized.ini"), config::serialize(&optimized))
        .map_err(&err)?;
    artifacts.push("optimized.ini".to_string());

    let objective_name = match objective {
        Objective::MaxAvgEfficiency => "max_avg_efficiency",
        Objective::MaxMinModeSeparation => "max_min_mode_separation",
    };
    artifacts.push(
        emit::result_json(
            &args.out,
            json!({
                "schema": "oamsim.result.v1",
                "command": "design",
                "objective": objective_name,
                "objective_value": result.objective_value,
                "evaluations": result.best_so_far.len(),
                "optimized": {
                    "source_waist_m": result.spec.source_waist,
                    "optical_length_m": result.spec.cavity.optical_length(),
                },
            }),
        )
        .map_err(&err)?,
    );
    emit::manifest(&args.out, "design", &args.config, !args.lenient, &artifacts).map_err(&err)?;

    println!(
        "design: {objective_name} = {:.6} after {} evaluations",
        result.objective_value,
        result.best_so_far.len()
    );
    println!(
        "  source waist {:.2} um, optical length {:.6} mm",
        result.spec.source_waist * 1e6,
        result.spec.cavity.optical_length() * 1e3
    );
    Ok(())
}

//! Plot-ready artifact writers. Every file opens with a schema-version
//! header; floats are written with shortest-round-trip formatting; no
//! timestamps or machine identifiers appear in data files, so identical
//! runs produce byte-identical artifacts.

use oamsim_core::{CyclicReport, DesignResult, ScanRow, SpectrumTrace, SPEED_OF_LIGHT};
use serde_json::json;
use std::fs;
use std::io;
use std::path::Path;

fn write_file(dir: &Path, name: &str, contents: String) -> io::Result<String> {
    fs::write(dir.join(name), contents)?;
    Ok(name.to_string())
}

/// `input_l` then one transmission column per detected charge.
pub fn power_matrix(dir: &Path, report: &CyclicReport) -> io::Result<String> {
    let mut out = String::from("# schema oamsim.power_matrix v1\n");
    out.push_str("input_l");
    for l in &report.column_order {
        out.push_str(&format!(",out_{l}"));
    }
    out.push('\n');
    for (i, &input) in report.input_order.iter().enumerate() {
        out.push_str(&input.to_string());
        for value in &report.power_matrix[i] {
            out.push_str(&format!(",{value}"));
        }
        out.push('\n');
    }
    write_file(dir, "power_matrix.csv", out)
}

pub fn efficiencies(dir: &Path, report: &CyclicReport) -> io::Result<String> {
    let mut out = String::from("# schema oamsim.efficiencies v1\ninput_l,efficiency\n");
    for (&input, &e) in report.input_order.iter().zip(&report.efficiencies) {
        out.push_str(&format!("{input},{e}\n"));
    }
    write_file(dir, "efficiencies.csv", out)
}

fn offset_ghz(wavelength: f64, laser_hz: f64) -> f64 {
    (SPEED_OF_LIGHT / wavelength - laser_hz) / 1e9
}

/// One trace table per charge: `spectrum_<l>.csv`.
pub fn spectrum(dir: &Path, trace: &SpectrumTrace, laser_hz: f64) -> io::Result<String> {
    let mut out = String::from(
        "# schema oamsim.spectrum v1\nwavelength_nm,frequency_offset_GHz,transmission\n",
    );
    for &(wavelength, transmission) in &trace.points {
        out.push_str(&format!(
            "{},{},{transmission}\n",
            wavelength * 1e9,
            offset_ghz(wavelength, laser_hz)
        ));
    }
    write_file(dir, &format!("spectrum_{}.csv", trace.input_l), out)
}

/// All detected peaks of all traces in one annotation table.
pub fn peaks(dir: &Path, traces: &[SpectrumTrace], laser_hz: f64) -> io::Result<String> {
    let mut out =
        String::from("# schema oamsim.peaks v1\ninput_l,wavelength_nm,frequency_offset_GHz,height\n");
    for trace in traces {
        for peak in &trace.peaks {
            out.push_str(&format!(
                "{},{},{},{}\n",
                trace.input_l,
                peak.position * 1e9,
                offset_ghz(peak.position, laser_hz),
                peak.height
            ));
        }
    }
    write_file(dir, "peaks.csv", out)
}

pub fn waist_scan(dir: &Path, rows: &[ScanRow]) -> io::Result<String> {
    let mut out =
        String::from("# schema oamsim.waist_scan v1\ninput_l,source_waist_um,transmission\n");
    for row in rows {
        for &(waist, transmission) in &row.points {
            out.push_str(&format!("{},{},{transmission}\n", row.input_l, waist * 1e6));
        }
    }
    write_file(dir, "waist_scan.csv", out)
}

/// Coarse-grid audit trail and the best-so-far trace of a design run.
pub fn design_trace(dir: &Path, result: &DesignResult) -> io::Result<Vec<String>> {
    let mut coarse = String::from("# schema oamsim.design_coarse v1\nparameter,value,objective\n");
    for eval in &result.coarse_evaluations {
        let name = match eval.param {
            oamsim_core::FreeParam::SourceWaist => "source_waist",
            oamsim_core::FreeParam::OpticalLengthOffset => "length_offset",
        };
        coarse.push_str(&format!("{name},{},{}\n", eval.value, eval.objective));
    }
    let mut trace = String::from("# schema oamsim.design_trace v1\nevaluation,best_objective\n");
    for (i, best) in result.best_so_far.iter().enumerate() {
        trace.push_str(&format!("{i},{best}\n"));
    }
    Ok(vec![
        write_file(dir, "design_coarse.csv", coarse)?,
        write_file(dir, "design_trace.csv", trace)?,
    ])
}

/// The machine-readable result document.
pub fn result_json(dir: &Path, body: serde_json::Value) -> io::Result<String> {
    let mut text = serde_json::to_string_pretty(&body).expect("json serialization is infallible");
    text.push('\n');
    write_file(dir, "result.json", text)
}

/// Run metadata, kept out of the data files so those stay byte-stable.
pub fn manifest(
    dir: &Path,
    command: &str,
    config_file: &Path,
    strict: bool,
    artifacts: &[String],
) -> io::Result<()> {
    let body = json!({
        "schema": "oamsim.manifest.v1",
        "tool": "oamsim",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config_file.file_name().and_then(|n| n.to_str()).unwrap_or("<config>"),
        "strict": strict,
        "artifacts": artifacts,
    });
    let mut text = serde_json::to_string_pretty(&body).expect("json serialization is infallible");
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

//! Delivery gate: one test per numbered acceptance criterion, each run
//! at its stated tolerance and runtime budget and ending in a single
//! PASS line with the measured figures (a failed criterion reports
//! through its panic message instead).
//!
//! Known-red criteria, kept faithful rather than weakened:
//!   - criterion 6 asserts the waist rule exactly as stated; the actual
//!     coupling optimum sits at w_c * sqrt(|l|+1), not w_c / sqrt(|l|+1),
//!     so the test fails and says where the real peak is.
//!   - criterion 9's height clause assumes an isolated resonance; at the
//!     reference geometry every fourth transverse order is nearly
//!     degenerate, the p = 3, 5, ... shoulders stack onto the secondary
//!     peak, and the measured height exceeds |C1|^2 T(0) by ~19%.

mod common;

use common::*;
use oamsim_core::{
    efficiency_vs_finesse, radial_coefficients, waist_scan, wavelength_sweep, CavityParams,
    ModeIndex, ModeSpectrum, SweepGrid, SweepPrep, SweepQuantity, SPEED_OF_LIGHT,
};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

/// Runtime-budgeted criteria take this lock so a parallel sibling's
/// rayon work cannot inflate their wall-clock measurement.
static BUDGETED: Mutex<()> = Mutex::new(());

fn budget_lock() -> MutexGuard<'static, ()> {
    // A deliberately red criterion may panic while holding the lock;
    // later criteria still want it.
    BUDGETED.lock().unwrap_or_else(|e| e.into_inner())
}

fn sweep_prep() -> SweepPrep {
    SweepPrep { source_waist: SOURCE_WAIST_M, cavity_waist: CAVITY_WAIST_M, p_max: 10 }
}

/// Wavelength grid spanning `[lo, hi]` in angular frequency.
fn frequency_window(omega_lo: f64, omega_hi: f64, steps: usize) -> SweepGrid {
    SweepGrid::new(
        SweepQuantity::Wavelength,
        TAU * SPEED_OF_LIGHT / omega_hi,
        TAU * SPEED_OF_LIGHT / omega_lo,
        steps,
    )
    .unwrap()
}

#[test]
fn criterion_01_scattering_unitarity() {
    let _g = budget_lock();
    let start = Instant::now();
    let mut rng = XorShift64(0xacc_e551_0000_0001);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let decay_left = rng.next_in(1e7, 2e9);
        let decay_right = rng.next_in(1e7, 2e9);
        let cavity = CavityParams::new(
            13.0e-3,
            1.0,
            f64::INFINITY,
            REFERENCE_R2_M,
            decay_left,
            decay_right,
            0.0,
        )
        .unwrap();
        let kappa = cavity.total_decay();
        for i in 0..1000 {
            let detuning = -10.0 * kappa + 20.0 * kappa * i as f64 / 999.0;
            let s = cavity.scatter(detuning);
            worst = worst.max((s.reflectance() + s.transmittance() - 1.0).abs());
        }
    }
    let elapsed = start.elapsed();
    assert!(worst <= 1e-12, "max |R + T - 1| = {worst:e}");
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "criterion 1 (scattering unitarity): PASS (max |R+T-1| = {:.2e} over 5 cavities x 1000 detunings, {:.0?})",
        worst, elapsed
    );
}

#[test]
fn criterion_02_on_resonance_transparency() {
    let cavity = reference_cavity();
    let s0 = cavity.scatter(0.0);
    assert!((s0.transmission.re - 1.0).abs() <= 1e-15 && s0.transmission.im.abs() <= 1e-15);
    assert!(s0.reflection.norm() <= 1e-15);
    let kappa = cavity.total_decay();
    let mut worst: f64 = 0.0;
    for sign in [-1.0, 1.0] {
        worst = worst.max((cavity.scatter(sign * kappa).transmittance() - 0.5).abs());
    }
    assert!(worst <= 1e-12, "|T(+-kappa) - 1/2| = {worst:e}");
    println!(
        "criterion 2 (on-resonance transparency): PASS (t(0) = 1, r(0) = 0 to 1e-15; |T(+-kappa)-1/2| = {:.2e})",
        worst
    );
}

#[test]
fn criterion_03_finesse_reproduction() {
    let narrow = CavityParams::from_spectrum(
        7.90e9,
        0.287e9,
        REFERENCE_INDEX,
        f64::INFINITY,
        REFERENCE_R2_M,
    )
    .unwrap();
    let (_, _, finesse_a) = narrow.linewidth_and_finesse();
    let dev_a = (finesse_a - 27.4).abs() / 27.4;
    assert!(dev_a < 0.01, "finesse {finesse_a} vs 27.4: {:.2}%", 100.0 * dev_a);

    let wide = CavityParams::from_spectrum(
        8.57e9,
        0.287e9,
        REFERENCE_INDEX,
        f64::INFINITY,
        REFERENCE_R2_M,
    )
    .unwrap();
    let (_, _, finesse_b) = wide.linewidth_and_finesse();
    let dev_b = (finesse_b - 29.9).abs() / 29.9;
    assert!(dev_b < 0.005, "finesse {finesse_b} vs 29.9: {:.2}%", 100.0 * dev_b);
    println!(
        "criterion 3 (finesse reproduction): PASS (7.90 GHz -> {:.3} vs 27.4 ({:.2}%); 8.57 GHz -> {:.3} vs 29.9 ({:.2}%))",
        finesse_a,
        100.0 * dev_a,
        finesse_b,
        100.0 * dev_b
    );
}

#[test]
fn criterion_04_degeneracy_law() {
    let cavity = reference_cavity();
    let q0: u64 = 47_000;
    let mut lines = Vec::new();
    for q in [q0, q0 + 1] {
        for p in 0..=4u32 {
            for l in -6..=6i32 {
                let mode = ModeIndex::new(p, l);
                lines.push((q, 2 * p + l.unsigned_abs(), cavity.resonance_frequency(q, mode)));
            }
        }
    }
    let mut compared = 0u32;
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            let same_class = a.0 == b.0 && a.1 == b.1;
            assert_eq!(
                same_class,
                a.2 == b.2,
                "(q={}, order={}) vs (q={}, order={})",
                a.0,
                a.1,
                b.0,
                b.1
            );
            compared += 1;
        }
    }
    println!(
        "criterion 4 (degeneracy law): PASS (frequencies equal iff (q, 2p+|l|) equal, {} exact pair comparisons)",
        compared
    );
}

#[test]
fn criterion_05_radial_coefficient_oracle_agreement() {
    let _g = budget_lock();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for l in [1, 2, 3] {
        let closed = radial_coefficients(l, CAVITY_WAIST_M, CAVITY_WAIST_M, 10).unwrap();
        for (p, &c) in closed.iter().enumerate() {
            let oracle = oracle_overlap_c(p as u32, l, CAVITY_WAIST_M, CAVITY_WAIST_M);
            worst = worst.max((c * c - oracle * oracle).abs());
        }
    }
    let elapsed = start.elapsed();
    assert!(worst <= 1e-6, "max ||C_p|^2 - oracle| = {worst:e}");
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!(
        "criterion 5 (radial-coefficient oracle agreement): PASS (closed form vs quadrature, max |C_p|^2 gap = {:.2e}, l in {{1,2,3}}, p <= 10, {:.0?})",
        worst, elapsed
    );
}

#[test]
fn criterion_06_waist_rule() {
    // Stated rule: the p = 0 weight peaks one grid step from
    // w_c / sqrt(|l|+1), and a 25 um source beats a 50 um source for
    // |l| >= 2. Asserted exactly as stated; the scan itself reports
    // where the maximum actually lands.
    let wc = CAVITY_WAIST_M;
    let step = wc / 100.0;
    for l in [1, 2, 3] {
        let mut best = (0.0f64, f64::MIN);
        for i in 0..226 {
            let ws = 0.25 * wc + i as f64 * step;
            let c0 = radial_coefficients(l, ws, wc, 0).unwrap()[0];
            if c0 * c0 > best.1 {
                best = (ws, c0 * c0);
            }
        }
        let claimed = wc / ((l as f64).abs() + 1.0).sqrt();
        assert!(
            (best.0 - claimed).abs() <= step + 1e-12,
            "l={l}: |C0|^2 peaks at {:.2} um (= w_c*sqrt(|l|+1) = {:.2} um), not within one grid step of the claimed w_c/sqrt(|l|+1) = {:.2} um",
            best.0 * 1e6,
            wc * ((l as f64) + 1.0).sqrt() * 1e6,
            claimed * 1e6
        );
    }
    let cavity = reference_cavity();
    let grid = SweepGrid::new(SweepQuantity::SourceWaist, 25e-6, 50e-6, 2).unwrap();
    for row in &waist_scan(&cavity, &[2, 3], &grid, wc, 10).unwrap() {
        assert!(
            row.points[0].1 > row.points[1].1,
            "l={}: transmission at 25 um ({:.4}) does not exceed 50 um ({:.4})",
            row.input_l,
            row.points[0].1,
            row.points[1].1
        );
    }
    println!("criterion 6 (waist rule): PASS");
}

#[test]
fn criterion_07_ideal_cyclic_permutation() {
    let _g = budget_lock();
    let start = Instant::now();
    let spec = ideal_circuit();
    let report = spec.run_cyclic().unwrap();
    let elapsed = start.elapsed();

    let mut worst: f64 = 0.0;
    for (i, &input) in report.input_order.iter().enumerate() {
        let target = spec.cyclic_target(input);
        for (j, &col) in report.column_order.iter().enumerate() {
            let want = if col == target { 1.0 } else { 0.0 };
            worst = worst.max((report.power_matrix[i][j] - want).abs());
        }
    }
    assert!(worst <= 1e-9, "max |matrix - permutation| = {worst:e}");
    let mut eff_dev: f64 = 0.0;
    for &e in &report.efficiencies {
        eff_dev = eff_dev.max((e - 1.0).abs());
    }
    assert!(eff_dev <= 1e-9, "max |E - 1| = {eff_dev:e}");
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "criterion 7 (ideal cyclic permutation): PASS (6x6 matrix within {:.2e} of the cyclic permutation, |E-1| <= {:.2e}, {:.0?})",
        worst, eff_dev, elapsed
    );
}

#[test]
fn criterion_08_realistic_cyclic_run() {
    let _g = budget_lock();
    let start = Instant::now();
    let spec = reference_circuit();
    let report = spec.run_cyclic().unwrap();
    let elapsed = start.elapsed();

    for (i, &input) in report.input_order.iter().enumerate() {
        let row = &report.power_matrix[i];
        let argmax = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, _)| report.column_order[j])
            .unwrap();
        assert_eq!(argmax, spec.cyclic_target(input), "row for input l = {input}");
    }
    let avg = report.average_efficiency;
    assert!(avg >= 0.90, "average efficiency {avg}");
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    // 0.96 is the measured experimental reference, not an equality
    // target; the residual lab imperfections are not modeled.
    println!(
        "criterion 8 (realistic cyclic run): PASS (every argmax on the cyclic target, avg efficiency {:.4}, deviation from the 0.96 experimental reference {:+.4}, {:.0?})",
        avg,
        avg - 0.96,
        elapsed
    );
}

#[test]
fn criterion_09_degeneracy_artifact_in_spectra() {
    let _g = budget_lock();
    let start = Instant::now();
    let spec = reference_circuit();
    let fsr_ang = spec.cavity.fsr_angular();
    let grid = frequency_window(
        spec.laser_frequency - 0.3 * fsr_ang,
        spec.laser_frequency + 1.3 * fsr_ang,
        4000,
    );
    let out = wavelength_sweep(&spec.cavity, &grid, &[1, -1, 0], &sweep_prep()).unwrap();
    let elapsed = start.elapsed();

    let resonance_hz = spec.laser_frequency / TAU;
    let (_, fwhm_hz, _) = spec.cavity.linewidth_and_finesse();
    let frequency_of = |wl: f64| SPEED_OF_LIGHT / wl;

    // l = 0: two fundamental peaks with the small order-2 peak between
    // them.
    let l0 = &out.traces[2];
    let mut mains: Vec<f64> = l0
        .peaks
        .iter()
        .filter(|p| p.height > 0.4)
        .map(|p| frequency_of(p.position))
        .collect();
    mains.sort_by(f64::total_cmp);
    assert_eq!(mains.len(), 2, "two fundamental peaks in a 1.6 FSR window");
    let expected_mid = mains[0] + 2.0 * REFERENCE_PHI_OVER_PI * REFERENCE_FSR_HZ;
    let mid = l0
        .peaks
        .iter()
        .filter(|p| p.height > 0.05 && p.height < 0.4)
        .min_by(|a, b| {
            (frequency_of(a.position) - expected_mid)
                .abs()
                .total_cmp(&(frequency_of(b.position) - expected_mid).abs())
        })
        .expect("mid-FSR peak from the p = 1 content");
    assert!(
        (frequency_of(mid.position) - expected_mid).abs() <= 0.5 * fwhm_hz,
        "mid peak sits {:.1} MHz from the order-2 line",
        (frequency_of(mid.position) - expected_mid).abs() / 1e6
    );

    // l = +-1: secondary peak at the l = 3, p = 0 resonance wavelength.
    let mut secondary_height = f64::NAN;
    for trace in &out.traces[..2] {
        let peak = trace
            .peaks
            .iter()
            .filter(|p| (frequency_of(p.position) - resonance_hz).abs() <= fwhm_hz)
            .max_by(|a, b| a.height.total_cmp(&b.height))
            .unwrap_or_else(|| {
                panic!("no secondary peak near the shared resonance for l = {}", trace.input_l)
            });
        assert!(
            (frequency_of(peak.position) - resonance_hz).abs() <= 0.5 * fwhm_hz,
            "l = {}: secondary peak is {:.1} MHz from the l=3, p=0 resonance",
            trace.input_l,
            (frequency_of(peak.position) - resonance_hz).abs() / 1e6
        );
        secondary_height = peak.height;
    }
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");

    // Height clause: |C1(l=1)|^2 T(0) within 2%, the isolated-line
    // expectation. The s = 8, 12, ... orders sit 0.028 FSR away and
    // stack their tails onto this peak, so the measured height runs
    // ~19% high; asserted as stated and expected to fail.
    let expected = CROSS_25_50_C_SQ_L1[1] * spec.cavity.scatter(0.0).transmittance();
    assert!(
        (secondary_height - expected).abs() <= 0.02 * expected,
        "secondary peak height {:.5} vs |C1|^2 T(0) = {:.5} ({:+.1}%): the nearly degenerate p = 3, 5, ... shoulders add to the isolated-line height at this geometry",
        secondary_height,
        expected,
        100.0 * (secondary_height - expected) / expected
    );
    println!(
        "criterion 9 (degeneracy artifact in spectra): PASS (secondary peak height {:.5}, mid-FSR peak present, {:.0?})",
        secondary_height, elapsed
    );
}

#[test]
fn criterion_10_symmetry_and_monotonicity_suite() {
    let _g = budget_lock();
    let start = Instant::now();

    // +-l trace identity to 1e-12.
    let spec = reference_circuit();
    let fsr_ang = spec.cavity.fsr_angular();
    let grid = frequency_window(
        spec.laser_frequency - 0.45 * fsr_ang,
        spec.laser_frequency + 0.45 * fsr_ang,
        1001,
    );
    let mut trace_gap: f64 = 0.0;
    for l in [1, 3] {
        let out = wavelength_sweep(&spec.cavity, &grid, &[l, -l], &sweep_prep()).unwrap();
        for (a, b) in out.traces[0].points.iter().zip(&out.traces[1].points) {
            assert_eq!(a.0, b.0);
            trace_gap = trace_gap.max((a.1 - b.1).abs());
        }
    }
    assert!(trace_gap <= 1e-12, "+-l traces differ by {trace_gap:e}");

    // Average efficiency nondecreasing along the finesse ladder, in the
    // ideal-limit family where the permutation limit is defined (the
    // degenerate-order leak makes the unequal-waist family saturate
    // non-monotonically near 0.976 instead).
    let ladder = [10.0, 30.0, 100.0, 300.0, 1000.0];
    let rungs = efficiency_vs_finesse(&ideal_circuit(), &ladder).unwrap();
    let effs: Vec<f64> = rungs.iter().map(|(_, r)| r.average_efficiency).collect();
    for pair in effs.windows(2) {
        assert!(pair[1] >= pair[0], "efficiency fell along the ladder: {effs:?}");
    }

    // Double-flip involution, amplitude for amplitude.
    let mut rng = XorShift64(0xf11b_f11b_0000_0001);
    for _ in 0..3 {
        let mut state = ModeSpectrum::new(CAVITY_WAIST_M, REFERENCE_WAVELENGTH_M).unwrap();
        for p in 0..4u32 {
            for l in -3..=3i32 {
                let amp = Complex64::new(rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0));
                state.set_amplitude(ModeIndex::new(p, l), amp);
            }
        }
        let twice = oamsim_core::apply_flip(&oamsim_core::apply_flip(&state));
        for (mode, amp) in state.iter() {
            assert_eq!(twice.amplitude(mode), amp, "double flip moved {mode:?}");
        }
        assert_eq!(twice.len(), state.len());
    }

    // Single-l arm-phase immunity to 1e-12.
    let baseline_spec = ideal_circuit();
    let baseline = baseline_spec.run_cyclic().unwrap();
    let mut phase_gap: f64 = 0.0;
    for arm_phase in [std::f64::consts::FRAC_PI_2, std::f64::consts::PI] {
        let mut spec = baseline_spec.clone();
        spec.arm_phase = arm_phase;
        let report = spec.run_cyclic().unwrap();
        for (row_a, row_b) in baseline.power_matrix.iter().zip(&report.power_matrix) {
            for (a, b) in row_a.iter().zip(row_b) {
                phase_gap = phase_gap.max((a - b).abs());
            }
        }
    }
    assert!(phase_gap <= 1e-12, "arm phase moved the power matrix by {phase_gap:e}");

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!(
        "criterion 10 (symmetry and monotonicity suite): PASS (+-l gap {:.2e}; ladder {:?}; double flip exact; arm-phase gap {:.2e}; {:.0?})",
        trace_gap,
        effs.iter().map(|e| format!("{e:.6}")).collect::<Vec<_>>(),
        phase_gap,
        elapsed
    );
}

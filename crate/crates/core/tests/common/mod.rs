//! Shared fixtures for the integration tests: reference instrument
//! parameters, an independent Simpson-rule overlap oracle (its own
//! Laguerre evaluation, not the library's), values frozen from a
//! 40-digit arbitrary-precision run, and a tiny deterministic generator
//! for sampled property checks.
#![allow(dead_code)]
// Frozen tables keep every digit the oracle printed.
#![allow(clippy::excessive_precision)]

use oamsim_core::{
    CavityParams, CircuitSpec, DetectionModel, FidelityModel, SPEED_OF_LIGHT,
};

/// Measured free spectral range of the reference cavity, Hz.
pub const REFERENCE_FSR_HZ: f64 = 7.90e9;
/// Measured transmission linewidth (FWHM) of the reference cavity, Hz.
pub const REFERENCE_FWHM_HZ: f64 = 0.287e9;
/// Intracavity refractive index of the reference cavity.
pub const REFERENCE_INDEX: f64 = 1.453;
/// Back-mirror curvature radius, m (front mirror is flat).
pub const REFERENCE_R2_M: f64 = 25.0e-3;
/// Nominal laser vacuum wavelength, m.
pub const REFERENCE_WAVELENGTH_M: f64 = 794.9693e-9;
pub const CAVITY_WAIST_M: f64 = 50.0e-6;
pub const SOURCE_WAIST_M: f64 = 25.0e-6;

/// Gouy phase per pass over pi for the reference geometry, frozen from
/// the 40-digit run: phi = arccos(sqrt(1 - D/R2)), D = c/(2 n FSR).
pub const REFERENCE_PHI_OVER_PI: f64 = 0.25711521529;

/// |C_p|^2 of the phase-only vortex on its own-waist LG basis
/// (equal waists), p = 0..=10. The l = 1 head is pi/4, pi/32; the l = 2
/// row is 1/((p+1)(p+2)) exactly.
pub const EQUAL_WAIST_C_SQ_L1: [f64; 11] = [
    std::f64::consts::FRAC_PI_4,
    0.098174770424681039,
    0.03681553890925539,
    0.019174759848570515,
    0.011744540407249441,
    0.0079275647748933724,
    0.0057097341533458218,
    0.0043077904996225174,
    0.0033654613278300917,
    0.0027017175659524903,
    0.0022166364575201113,
];
pub const EQUAL_WAIST_C_SQ_L2: [f64; 11] = [
    0.5,
    0.16666666666666667,
    0.083333333333333333,
    0.05,
    0.033333333333333333,
    0.02380952380952381,
    0.017857142857142857,
    0.013888888888888889,
    0.011111111111111111,
    0.0090909090909090909,
    0.0075757575757575758,
];
pub const EQUAL_WAIST_C_SQ_L3: [f64; 11] = [
    0.29452431127404312,
    0.16566992509164925,
    0.10354370318228078,
    0.070467242443496644,
    0.050962916410028823,
    0.038540705535084297,
    0.030154533497357622,
    0.02423132156037666,
    0.019894465712922883,
    0.016624773431400835,
    0.0140990866985534,
];

/// |C_p|^2 of a 25 um phase-only vortex decomposed on the 50 um LG
/// basis, p = 0..=10. The l = 0 row is the two-Gaussian closed form
/// 0.64 * 0.36^p.
pub const CROSS_25_50_C_SQ_L0: [f64; 11] = [
    0.64,
    0.2304,
    0.082944,
    0.02985984,
    0.0107495424,
    0.003869835264,
    0.00139314069504,
    0.000501530650214,
    0.000180551034077,
    6.49983722678e-5,
    2.33994140164e-5,
];
pub const CROSS_25_50_C_SQ_L1: [f64; 11] = [
    0.20106192983,
    0.197040691233,
    0.150796447372,
    0.107145902406,
    0.0747053240636,
    0.0523833374122,
    0.0373922656247,
    0.0273295140401,
    0.0204948227567,
    0.0157667261475,
    0.0124244535765,
];
pub const CROSS_25_50_C_SQ_L2: [f64; 11] = [
    0.0512,
    0.0826026666667,
    0.0918050133333,
    0.08792440832,
    0.0783812744533,
    0.067419314648,
    0.0570403160925,
    0.0479938163265,
    0.0404192980215,
    0.0341981041313,
    0.0291273250558,
];
pub const CROSS_25_50_C_SQ_L3: [f64; 11] = [
    0.0120637157898,
    0.027143360527,
    0.039195012601,
    0.0464986274145,
    0.0495591510937,
    0.0495613169819,
    0.0476495944256,
    0.0446981356084,
    0.0412977434388,
    0.0378143399136,
    0.0344564031392,
];

/// |C_0(l = 3)|^2 at a 100 um source into the 50 um basis; together with
/// the 25 um and 50 um values above this pins the true waist-coupling
/// curve (monotone rising through equal waists toward w_basis*2).
pub const C0_SQ_L3_SOURCE_100UM: f64 = 0.772077810546;

/// The reference cavity: lossless, symmetric decays fit from the
/// measured linewidth, flat front mirror.
pub fn reference_cavity() -> CavityParams {
    CavityParams::from_spectrum(
        REFERENCE_FSR_HZ,
        REFERENCE_FWHM_HZ,
        REFERENCE_INDEX,
        f64::INFINITY,
        REFERENCE_R2_M,
    )
    .expect("reference geometry is stable")
}

pub fn nominal_laser_angular() -> f64 {
    std::f64::consts::TAU * SPEED_OF_LIGHT / REFERENCE_WAVELENGTH_M
}

/// The realistic six-mode circuit: reference cavity, 25 um vortex
/// source and detection, 50 um cavity basis, phase-only shifters,
/// tuned onto the l = 3 carrier.
pub fn reference_circuit() -> CircuitSpec {
    CircuitSpec::new(reference_cavity(), nominal_laser_angular(), SOURCE_WAIST_M, CAVITY_WAIST_M)
        .tune_to_target()
        .expect("reference circuit tunes")
}

/// The idealized limit: mirror decays scaled by 1e-6 (finesse ~2.75e7),
/// index-shift fidelity, equal waists everywhere, charge-resolved power
/// detection. Every input then traverses exactly one arm with unit
/// response.
pub fn ideal_circuit() -> CircuitSpec {
    let cavity = reference_cavity().with_decay_scale(1e-6).expect("scaled decays stay positive");
    let mut spec =
        CircuitSpec::new(cavity, nominal_laser_angular(), CAVITY_WAIST_M, CAVITY_WAIST_M);
    spec.shift_fidelity = FidelityModel::IndexShift;
    spec.detection = DetectionModel::ModalPower;
    spec.tune_to_target().expect("ideal circuit tunes")
}

// ---------------------------------------------------------------------
// Independent overlap oracle
// ---------------------------------------------------------------------

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Generalized Laguerre polynomial by its explicit alternating sum,
/// deliberately a different algorithm from the library's recurrence.
pub fn laguerre_sum(n: u32, alpha: u32, x: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binomial(n + alpha, n - k) * x.powi(k as i32) / factorial(k);
    }
    total
}

/// Overlap coefficient <LG_{p,l}(basis_waist) | vortex(l, source_waist)>
/// by composite Simpson integration with its own integrand code. The
/// azimuthal integral collapses to 2 pi because both fields carry the
/// same helical phase.
pub fn oracle_overlap_c(p: u32, l: i32, source_waist: f64, basis_waist: f64) -> f64 {
    let la = l.unsigned_abs();
    let wb = basis_waist;
    let ws = source_waist;
    let lg_norm = (2.0 * factorial(p) / (std::f64::consts::PI * wb * wb * factorial(p + la))).sqrt();
    let vortex_norm = (2.0 / (std::f64::consts::PI * ws * ws)).sqrt();
    let integrand = |r: f64| -> f64 {
        let x = 2.0 * r * r / (wb * wb);
        let radial = lg_norm
            * (std::f64::consts::SQRT_2 * r / wb).powi(la as i32)
            * laguerre_sum(p, la, x)
            * (-r * r / (wb * wb)).exp();
        radial * vortex_norm * (-r * r / (ws * ws)).exp() * std::f64::consts::TAU * r
    };
    // Simpson on [0, 6 max(w)]: the integrand is ~exp(-72) at the cut.
    let upper = 6.0 * ws.max(wb);
    let n = 40_000usize;
    let h = upper / n as f64;
    let mut total = integrand(0.0) + integrand(upper);
    for i in 1..n {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        total += weight * integrand(i as f64 * h);
    }
    total * h / 3.0
}

/// Overlap <LG_{p_a,l}(w_a) | LG_{p_b,l}(w_b)> by the same Simpson
/// scheme. Both fields carry the same helical phase, so the azimuthal
/// integral again collapses to 2 pi.
pub fn oracle_lg_overlap(p_a: u32, p_b: u32, l: i32, w_a: f64, w_b: f64) -> f64 {
    let la = l.unsigned_abs();
    let radial = |p: u32, w: f64, r: f64| -> f64 {
        let norm = (2.0 * factorial(p) / (std::f64::consts::PI * w * w * factorial(p + la))).sqrt();
        let x = 2.0 * r * r / (w * w);
        norm * (std::f64::consts::SQRT_2 * r / w).powi(la as i32)
            * laguerre_sum(p, la, x)
            * (-r * r / (w * w)).exp()
    };
    let integrand =
        |r: f64| radial(p_a, w_a, r) * radial(p_b, w_b, r) * std::f64::consts::TAU * r;
    let upper = 6.0 * w_a.max(w_b);
    let n = 40_000usize;
    let h = upper / n as f64;
    let mut total = integrand(0.0) + integrand(upper);
    for i in 1..n {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        total += weight * integrand(i as f64 * h);
    }
    total * h / 3.0
}

// ---------------------------------------------------------------------
// Deterministic sampling
// ---------------------------------------------------------------------

/// xorshift64*: tiny deterministic generator so sampled property checks
/// are bit-reproducible without a dependency.
pub struct XorShift64(pub u64);

impl XorShift64 {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [lo, hi).
    pub fn next_in(&mut self, lo: f64, hi: f64) -> f64 {
        let unit = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + unit * (hi - lo)
    }
}

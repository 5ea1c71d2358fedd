//! Shared numerical kernels: log-domain gamma helpers, generalized
//! Laguerre polynomials, and a deterministic adaptive Gauss-Kronrod
//! integrator for the radial overlap integrals.
//!
//! Everything here is pure and allocation-light; the mode and circuit
//! layers above assume these functions are bit-deterministic for equal
//! inputs regardless of call order or thread.

use crate::error::{Error, Result};

/// Natural log of the gamma function for strictly positive arguments.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma domain: x = {x}");
    statrs::function::gamma::ln_gamma(x)
}

/// ln(n!) in the log domain, exact enough for n well past the truncation
/// bounds used anywhere in the simulator.
pub(crate) fn ln_factorial(n: u32) -> f64 {
    ln_gamma(f64::from(n) + 1.0)
}

/// Generalized Laguerre polynomial L_n^alpha(x) via the three-term
/// recurrence
///
///   (n+1) L_{n+1}^a = (2n + 1 + a - x) L_n^a - (n + a) L_{n-1}^a,
///
/// which is forward-stable for the small n and moderate x this crate
/// needs (n <= ~25, x up to a few hundred).
pub(crate) fn laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + alpha - x;
    for k in 1..n {
        let kf = f64::from(k);
        let next = ((2.0 * kf + 1.0 + alpha - x) * l - (kf + alpha) * lm1) / (kf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

// 15-point Kronrod nodes on [-1, 1] (positive half; the rule is symmetric)
// with the embedded 7-point Gauss weights used for the error estimate.
// Digits as published, beyond f64 resolution.
#[allow(clippy::excessive_precision)]
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Gauss-Kronrod 7/15 pass over [a, b]: returns (kronrod estimate,
/// |kronrod - gauss| as the local error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = WGK15[7] * fc;
    let mut resg = WG7[3] * fc;
    for j in 0..7 {
        let dx = half * XGK15[j];
        let fsum = f(center - dx) + f(center + dx);
        resk += WGK15[j] * fsum;
        if j % 2 == 1 {
            // Odd Kronrod indices are the embedded Gauss-7 nodes.
            resg += WG7[j / 2] * fsum;
        }
    }
    (resk * half, (resk - resg).abs() * half)
}

const MAX_INTERVALS: usize = 2048;

/// Adaptive integration of `f` over the finite interval [a, b] to the
/// given relative tolerance, by globally greedy bisection of the
/// interval with the largest error estimate.
///
/// The subdivision order is a pure function of the integrand values, so
/// results are bit-identical across runs and threads. Failure to reach
/// the tolerance within the interval budget is a hard error, never a
/// silently degraded result.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    debug_assert!(a < b && rel_tol > 0.0);
    struct Interval {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    }
    let (estimate, error) = gk15(&f, a, b);
    let mut intervals = vec![Interval { a, b, estimate, error }];
    loop {
        let total: f64 = intervals.iter().map(|i| i.estimate).sum();
        let total_error: f64 = intervals.iter().map(|i| i.error).sum();
        // The absolute floor keeps genuinely zero integrals (orthogonal
        // modes) from demanding impossible relative accuracy.
        let target = rel_tol * total.abs().max(1e-300) + 1e-16;
        if total_error <= target {
            return Ok(total);
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureNonConvergence {
                lower: a,
                upper: b,
                error_estimate: total_error,
                intervals: intervals.len(),
            });
        }
        // Deterministic worst-first refinement: strictly greater wins, so
        // ties resolve to the earliest (lowest) interval.
        let mut worst = 0;
        for (k, iv) in intervals.iter().enumerate() {
            if iv.error > intervals[worst].error {
                worst = k;
            }
        }
        let Interval { a: wa, b: wb, .. } = intervals[worst];
        let mid = 0.5 * (wa + wb);
        let (left_est, left_err) = gk15(&f, wa, mid);
        let (right_est, right_err) = gk15(&f, mid, wb);
        intervals[worst] = Interval { a: wa, b: mid, estimate: left_est, error: left_err };
        intervals.push(Interval { a: mid, b: wb, estimate: right_est, error: right_err });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn laguerre_low_orders_match_closed_forms() {
        // L_1^a(x) = 1 + a - x, L_2^1(x) = 3 - 3x + x^2/2.
        for &x in &[0.0, 0.5, 2.0, 9.25] {
            assert_relative_eq!(laguerre(1, 0.0, x), 1.0 - x, max_relative = 1e-14);
            assert_relative_eq!(laguerre(1, 2.0, x), 3.0 - x, max_relative = 1e-14);
            assert_relative_eq!(
                laguerre(2, 1.0, x),
                3.0 - 3.0 * x + 0.5 * x * x,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn laguerre_satisfies_recurrence_identity() {
        // Cross-check n = 5 against the Rodrigues-style sum for a couple
        // of integer alphas.
        let sum_form = |n: u32, alpha: u32, x: f64| -> f64 {
            (0..=n)
                .map(|k| {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let ln_binom = ln_factorial(n + alpha)
                        - ln_factorial(n - k)
                        - ln_factorial(k + alpha);
                    sign * (ln_binom - ln_factorial(k)).exp() * x.powi(k as i32)
                })
                .sum()
        };
        for &alpha in &[0u32, 1, 3] {
            for &x in &[0.3, 1.7, 6.0] {
                assert_relative_eq!(
                    laguerre(5, f64::from(alpha), x),
                    sum_form(5, alpha, x),
                    max_relative = 1e-11
                );
            }
        }
    }

    #[test]
    fn integrator_reproduces_elementary_integrals() {
        let cubic = integrate(|x| x * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(cubic, 4.0, max_relative = 1e-12);
        let bump = integrate(|x| (-x * x).exp(), 0.0, 10.0, 1e-12).unwrap();
        assert_relative_eq!(bump, 0.5 * std::f64::consts::PI.sqrt(), max_relative = 1e-12);
        let zero = integrate(|x| x.sin(), -1.0, 1.0, 1e-10).unwrap();
        assert!(zero.abs() < 1e-15);
    }

    #[test]
    fn integrator_handles_narrow_features_or_reports_failure() {
        // A spike three decades narrower than the interval still integrates.
        let spike = integrate(|x| (-(x - 0.5) * (x - 0.5) * 1e6).exp(), 0.0, 1.0, 1e-10).unwrap();
        assert_relative_eq!(spike, std::f64::consts::PI.sqrt() / 1e3, max_relative = 1e-9);
    }
}

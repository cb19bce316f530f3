//! Scalar numerical building blocks: adaptive Gauss-Kronrod quadrature,
//! bracketed root finding, monotone inversion and the standard normal law.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Finite stand-in for infinite integration limits.
    pub tail_cutoff: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 10_000,
            tail_cutoff: 12.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootSpec {
    /// Relative bracket width at which bisection stops.
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for RootSpec {
    fn default() -> Self {
        Self {
            x_tol: 1e-14,
            f_tol: 1e-13,
            max_iter: 200,
        }
    }
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail 1 - Phi(x), accurate for large positive x.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Real cube root preserving sign.
pub fn signed_cbrt(y: f64) -> f64 {
    y.cbrt()
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_931_172_480,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    floor: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = fc.abs() * WGK[10];
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    Panel {
        a,
        b,
        value,
        error: error.max(floor),
        floor,
    }
}

/// Globally adaptive 21-point Gauss-Kronrod quadrature of `f` over `[a, b]`.
///
/// Panels are bisected in order of decreasing error estimate until the total
/// estimate falls below `max(abs_tol, rel_tol * |I|)` or is dominated by
/// rounding noise.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate_adaptive(f, b, a, spec).map(|v| -v);
    }
    let first = gk21(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut floor = first.floor;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 0;
    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * value.abs());
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NonConvergence {
                a,
                b,
                subdivisions,
                error,
            });
        }
        if error <= tol || error <= 2.0 * floor {
            return Ok(value);
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::NonConvergence {
                a,
                b,
                subdivisions,
                error,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::NonConvergence {
                a,
                b,
                subdivisions,
                error,
            });
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        floor += left.floor + right.floor - worst.floor;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        if subdivisions % 64 == 0 {
            // Re-sum to avoid drift from incremental updates.
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
            floor = heap.iter().map(|p| p.floor).sum();
        }
    }
}

/// Integrates over consecutive panels `[p0, p1], [p1, p2], ...`.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let mut total = 0.0;
    for w in breakpoints.windows(2) {
        total += integrate_adaptive(&f, w[0], w[1], spec)?;
    }
    Ok(total)
}

/// Bisection on a sign change of `f` in `[lo, hi]`.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &RootSpec) -> Result<f64> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::NoBracket { lo, hi, f_lo, f_hi });
    }
    for _ in 0..spec.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 || f_mid.abs() <= spec.f_tol {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo <= spec.x_tol * mid.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves `F(x) = y` for increasing `F` on `[lo, hi]`, bisecting to `x_tol`.
pub fn invert_monotone<F: Fn(f64) -> f64>(
    f: F,
    y: f64,
    lo: f64,
    hi: f64,
    spec: &RootSpec,
) -> Result<f64> {
    let f_lo = f(lo);
    let f_hi = f(hi);
    if !(f_lo <= y && y <= f_hi) {
        return Err(Error::OutOfRange { y, f_lo, f_hi });
    }
    let exact = RootSpec {
        f_tol: 0.0,
        ..*spec
    };
    find_root(|x| f(x) - y, lo, hi, &exact)
}

/// Newton iteration for increasing `F` with derivative `df`, safeguarded by
/// bisection inside the bracket `[lo, hi]`.
pub fn invert_monotone_newton<F, D>(
    f: F,
    df: D,
    y: f64,
    lo: f64,
    hi: f64,
    spec: &RootSpec,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = f(lo) - y;
    let f_hi = f(hi) - y;
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::OutOfRange {
            y,
            f_lo: f_lo + y,
            f_hi: f_hi + y,
        });
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..spec.max_iter {
        let r = f(x) - y;
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - r / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= spec.x_tol * x.abs().max(1.0) || hi - lo <= spec.x_tol * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let spec = QuadratureSpec::default();
        let v = integrate_adaptive(normal_pdf, -12.0, 12.0, &spec).unwrap();
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integral() {
        let spec = QuadratureSpec::default();
        let v = integrate_adaptive(|x: f64| (30.0 * x).sin(), 0.0, 3.0, &spec).unwrap();
        let exact = (1.0 - (90.0f64).cos()) / 30.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits() {
        let spec = QuadratureSpec::default();
        let v = integrate_adaptive(|x: f64| x * x, 1.0, 0.0, &spec).unwrap();
        assert!((v + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn kink_is_resolved() {
        let spec = QuadratureSpec::default();
        let v = integrate_adaptive(|x: f64| (x - 0.3).abs(), -1.0, 1.0, &spec).unwrap();
        assert!((v - (1.3 * 1.3 + 0.7 * 0.7) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn subdivision_budget_is_enforced() {
        let spec = QuadratureSpec {
            max_subdivisions: 3,
            ..Default::default()
        };
        let r = integrate_adaptive(|x: f64| (200.0 * x).sin().abs(), 0.0, 10.0, &spec);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn root_of_cubic() {
        let x = find_root(|x| x * x * x - 2.0, 0.0, 2.0, &RootSpec::default()).unwrap();
        assert!((x - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn root_without_bracket() {
        let r = find_root(|x| x * x + 1.0, -1.0, 1.0, &RootSpec::default());
        assert!(matches!(r, Err(Error::NoBracket { .. })));
    }

    #[test]
    fn inversion_range_check() {
        let r = invert_monotone(|x| x, 3.0, 0.0, 1.0, &RootSpec::default());
        assert!(matches!(r, Err(Error::OutOfRange { .. })));
        let x = invert_monotone(|x: f64| x.exp(), 2.0, 0.0, 1.0, &RootSpec::default()).unwrap();
        assert!((x - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn newton_inversion() {
        let x = invert_monotone_newton(
            |x| x * x * x / 3.0,
            |x| x * x,
            9.0,
            -5.0,
            5.0,
            &RootSpec::default(),
        )
        .unwrap();
        assert!((x - 3.0).abs() < 1e-13);
    }

    #[test]
    fn cube_roots() {
        assert_eq!(signed_cbrt(-27.0), -3.0);
        assert_eq!(signed_cbrt(8.0), 2.0);
        assert_eq!(signed_cbrt(0.0), 0.0);
    }

    #[test]
    fn normal_law() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-14);
        assert!((normal_sf(8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
    }
}

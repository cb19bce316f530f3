//! Shooting solver for the world recursions.
//!
//! The first half of the configuration is produced by forward iteration from
//! a trial `x1`; `x1` is tuned until the midpoint is symmetric and the second
//! half is then obtained by mirroring `x_{N+1-n} = -x_n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::targets::{Baseline, BaselineFamily};

pub const RESIDUAL_TOL: f64 = 1e-9;
/// Points closer than this to a zero of `b` are rejected.
pub const ZERO_CLEARANCE: f64 = 1e-8;
const CENSUS_GRID: usize = 8192;
const MAX_EXPANSIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Family {
    /// `x_{n+1} = x_n - 1 / sum_{i<=n} x_i`.
    Ground,
    /// `x_{n+1}^3 = x_n^3 - 3 / sum_{i<=n} 1/x_i`.
    Maxwell,
    /// `B(x_{n+1}) = B(x_n) - 1 / sum_{i<=n} x_i / b(x_i)`.
    General(BaselineFamily),
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Ground => write!(f, "ground"),
            Family::Maxwell => write!(f, "maxwell"),
            Family::General(b) => write!(f, "general:{b}"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground" => Ok(Family::Ground),
            "maxwell" => Ok(Family::Maxwell),
            _ => match s.strip_prefix("general:") {
                Some(rest) => Ok(Family::General(rest.parse()?)),
                None => Err(Error::InvalidInput(format!("unknown family '{s}'"))),
            },
        }
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for Family {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl Family {
    /// Baseline whose density the family targets.
    pub fn baseline_family(&self) -> BaselineFamily {
        match self {
            Family::Ground => BaselineFamily::Ground,
            Family::Maxwell => BaselineFamily::MaxwellSquare,
            Family::General(b) => *b,
        }
    }

    pub fn baseline(&self) -> Result<Baseline> {
        Baseline::new(self.baseline_family())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// The next point would not be strictly smaller.
    NonDecreasing {
        index: usize,
    },
    /// The partial sum feeding the step became non-positive.
    DenominatorVanished {
        index: usize,
    },
    NonFinite {
        index: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    pub points: Vec<f64>,
    pub termination: Termination,
}

struct Stepper<'a> {
    family: Family,
    baseline: &'a Baseline,
}

impl Stepper<'_> {
    fn term(&self, x: f64) -> f64 {
        match self.family {
            Family::Ground => x,
            Family::Maxwell => 1.0 / x,
            Family::General(_) => {
                if x == 0.0 && self.baseline.eval_b(0.0) != 0.0 {
                    0.0
                } else {
                    x / self.baseline.eval_b(x)
                }
            }
        }
    }

    fn step(&self, x: f64, sum: f64) -> f64 {
        match self.family {
            Family::Ground => x - 1.0 / sum,
            Family::Maxwell => (x * x * x - 3.0 / sum).cbrt(),
            Family::General(_) => self
                .baseline
                .eval_cumulative_inv(self.baseline.eval_cumulative(x) - 1.0 / sum),
        }
    }

    /// Defect of the recursion in its own algebraic form.
    fn defect(&self, x: f64, next: f64, sum: f64) -> f64 {
        match self.family {
            Family::Ground => next - x + 1.0 / sum,
            Family::Maxwell => next * next * next - x * x * x + 3.0 / sum,
            Family::General(_) => {
                self.baseline.eval_cumulative(next) - self.baseline.eval_cumulative(x) + 1.0 / sum
            }
        }
    }

    fn shoot(&self, x1: f64, max_len: usize) -> Shot {
        let mut points = Vec::with_capacity(max_len);
        if max_len == 0 {
            return Shot {
                points,
                termination: Termination::Completed,
            };
        }
        points.push(x1);
        let mut sum = 0.0;
        let mut x = x1;
        while points.len() < max_len {
            let index = points.len();
            sum += self.term(x);
            if !sum.is_finite() {
                return Shot {
                    points,
                    termination: Termination::NonFinite { index },
                };
            }
            if sum <= 0.0 {
                return Shot {
                    points,
                    termination: Termination::DenominatorVanished { index },
                };
            }
            let next = self.step(x, sum);
            if !next.is_finite() {
                return Shot {
                    points,
                    termination: Termination::NonFinite { index },
                };
            }
            if next >= x {
                return Shot {
                    points,
                    termination: Termination::NonDecreasing { index },
                };
            }
            points.push(next);
            x = next;
        }
        Shot {
            points,
            termination: Termination::Completed,
        }
    }

    /// Signed midpoint mismatch; negative when `x1` is too small.
    fn mismatch(&self, x1: f64, n: usize) -> f64 {
        let needed = if n.is_multiple_of(2) {
            n / 2 + 1
        } else {
            n.div_ceil(2)
        };
        let shot = self.shoot(x1, needed);
        if shot.points.len() < needed {
            return -1.0;
        }
        if n.is_multiple_of(2) {
            shot.points[needed - 2] + shot.points[needed - 1]
        } else {
            shot.points[needed - 1]
        }
    }

    fn max_residual(&self, points: &[f64]) -> f64 {
        let mut sum = 0.0;
        let mut worst: f64 = 0.0;
        for w in points.windows(2) {
            sum += self.term(w[0]);
            let d = self.defect(w[0], w[1], sum).abs();
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
        worst
    }
}

/// Iterates the recursion of `family` from `x1` for up to `max_len` points.
pub fn shoot_sequence(
    family: Family,
    baseline: Option<&Baseline>,
    x1: f64,
    max_len: usize,
) -> Result<Shot> {
    if !(x1 > 0.0) {
        return Err(Error::InvalidStart { x1 });
    }
    let owned;
    let baseline = match baseline {
        Some(b) => b,
        None => {
            owned = family.baseline()?;
            &owned
        }
    };
    Ok(Stepper { family, baseline }.shoot(x1, max_len))
}

/// Signed midpoint matching value used by the shooting bisection: the sum of
/// the two middle points for even `n`, the middle point for odd `n`.
pub fn matching_value(family: Family, baseline: &Baseline, x1: f64, n: usize) -> f64 {
    Stepper { family, baseline }.mismatch(x1, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub max_recursion_residual: f64,
    /// `|sum x_n| / N`.
    pub mean_abs: f64,
    /// `max_n |x_n + x_{N+1-n}|`.
    pub symmetry_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub family: Family,
    #[serde(rename = "N")]
    pub n_worlds: usize,
    pub points: Vec<f64>,
    pub shoot_param: f64,
    pub residuals: Residuals,
}

fn symmetry_defect(points: &[f64]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| (points[i] + points[n - 1 - i]).abs())
        .fold(0.0, f64::max)
}

/// Recursion residual of an arbitrary point sequence under `family`.
pub fn recursion_residual(family: Family, baseline: &Baseline, points: &[f64]) -> f64 {
    Stepper { family, baseline }.max_residual(points)
}

fn mirror(half: &[f64], n: usize) -> Vec<f64> {
    let mut points = Vec::with_capacity(n);
    if n.is_multiple_of(2) {
        points.extend_from_slice(&half[..n / 2]);
    } else {
        points.extend_from_slice(&half[..(n - 1) / 2]);
        points.push(0.0);
    }
    for i in (0..n / 2).rev() {
        points.push(-points[i]);
    }
    points
}

fn build(stepper: &Stepper, x1: f64, n: usize) -> Result<Configuration> {
    let needed = if n.is_multiple_of(2) {
        n / 2
    } else {
        (n - 1) / 2
    };
    let shot = stepper.shoot(x1, needed.max(1));
    if shot.points.len() < needed {
        return Err(Error::ResidualFailure(format!(
            "shooting from x1 = {x1} stopped early ({:?})",
            shot.termination
        )));
    }
    let points = mirror(&shot.points, n);
    if let Some(i) = points.windows(2).position(|w| !(w[0] > w[1])) {
        return Err(Error::ResidualFailure(format!(
            "mirrored configuration not strictly decreasing at index {i}"
        )));
    }
    for (i, &x) in points.iter().enumerate() {
        if x != 0.0 && stepper.baseline.distance_to_zero(x) < ZERO_CLEARANCE {
            return Err(Error::ResidualFailure(format!(
                "point {i} (x = {x}) lies within {ZERO_CLEARANCE:e} of a zero of b"
            )));
        }
    }
    let residual = stepper.max_residual(&points);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::ResidualFailure(format!(
            "recursion residual {residual:e} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    let sum: f64 = points.iter().sum();
    Ok(Configuration {
        family: stepper.family,
        n_worlds: n,
        residuals: Residuals {
            max_recursion_residual: residual,
            mean_abs: sum.abs() / n as f64,
            symmetry_defect: symmetry_defect(&points),
        },
        points,
        shoot_param: x1,
    })
}

// Bisects a sign change of `f` down to adjacent floats and returns the
// endpoint with the smaller mismatch.
fn bisect_sign<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    if f_lo.abs() <= f_hi.abs() {
        lo
    } else {
        hi
    }
}

fn initial_bracket(n: usize) -> (f64, f64) {
    let s = ((n as f64).ln() + 1.0).sqrt();
    (0.5 * s, 2.0 * s)
}

fn check_parity(family: Family, baseline: &Baseline, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 worlds, got {n}"
        )));
    }
    if n % 2 == 1 && (family == Family::Maxwell || baseline.vanishes_at_origin()) {
        return Err(Error::ParityUnsupported {
            family: family.to_string(),
            n,
        });
    }
    Ok(())
}

/// Solves for the strictly decreasing, symmetric configuration of `n` worlds.
///
/// When `b` has zeros away from the origin the matching condition has several
/// roots; all of them are located on a fine scan and the configuration whose
/// empirical second moment is closest to that of `b phi` is returned.
pub fn solve_configuration(
    family: Family,
    baseline: Option<&Baseline>,
    n: usize,
) -> Result<Configuration> {
    let owned;
    let baseline = match baseline {
        Some(b) => b,
        None => {
            owned = family.baseline()?;
            &owned
        }
    };
    check_parity(family, baseline, n)?;
    let stepper = Stepper { family, baseline };
    if baseline.has_off_origin_zeros() {
        return solve_by_census(&stepper, n);
    }
    let (mut lo, mut hi) = initial_bracket(n);
    let f = |x1: f64| stepper.mismatch(x1, n);
    for _ in 0..=MAX_EXPANSIONS {
        let (f_lo, f_hi) = (f(lo), f(hi));
        if f_lo < 0.0 && f_hi > 0.0 {
            let x1 = bisect_sign(f, lo, hi);
            return build(&stepper, x1, n);
        }
        lo *= 0.5;
        hi *= 2.0;
    }
    Err(Error::BracketFailure { n, upper: hi })
}

/// All valid configurations found by scanning the matching condition.
pub fn configuration_census(
    family: Family,
    baseline: &Baseline,
    n: usize,
) -> Result<Vec<Configuration>> {
    check_parity(family, baseline, n)?;
    census(&Stepper { family, baseline }, n)
}

fn census(stepper: &Stepper, n: usize) -> Result<Vec<Configuration>> {
    let (mut lo, mut hi) = initial_bracket(n);
    for _ in 0..=MAX_EXPANSIONS {
        let grid: Vec<f64> = (0..=CENSUS_GRID)
            .map(|i| lo + (hi - lo) * i as f64 / CENSUS_GRID as f64)
            .collect();
        let values: Vec<f64> = grid.par_iter().map(|&x| stepper.mismatch(x, n)).collect();
        let found: Vec<Configuration> = (0..CENSUS_GRID)
            .into_par_iter()
            .filter(|&i| (values[i] < 0.0) != (values[i + 1] < 0.0))
            .filter_map(|i| {
                let x1 = bisect_sign(|x| stepper.mismatch(x, n), grid[i], grid[i + 1]);
                build(stepper, x1, n).ok()
            })
            .collect();
        if !found.is_empty() {
            return Ok(found);
        }
        lo *= 0.5;
        hi *= 2.0;
    }
    Err(Error::BracketFailure { n, upper: hi })
}

fn solve_by_census(stepper: &Stepper, n: usize) -> Result<Configuration> {
    let target = stepper.baseline.second_moment();
    let score = |c: &Configuration| {
        let m2 = c.points.iter().map(|x| x * x).sum::<f64>() / (n - 1) as f64;
        (m2 - target).abs()
    };
    census(stepper, n)?
        .into_iter()
        .min_by(|a, b| score(a).total_cmp(&score(b)))
        .ok_or(Error::BracketFailure { n, upper: f64::NAN })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    /// `|sum x_n|`.
    pub mean_defect: f64,
    /// `|sum x_n B(x_n)/b(x_n) - (N-1)|`, written `|sum x^2 - 3(N-1)|` for Maxwell.
    pub variance_defect: f64,
    pub symmetry_defect: f64,
    /// Smallest consecutive gap `x_n - x_{n+1}`; non-positive means P4 fails.
    pub min_gap: f64,
    pub strictly_decreasing: bool,
    pub recursion_residual: f64,
    /// `x1 / sqrt(ln N)` for `N >= 8`.
    pub growth_ratio: Option<f64>,
}

/// Reports the structural properties of a configuration without failing.
pub fn validate_properties(cfg: &Configuration) -> PropertyReport {
    let pts = &cfg.points;
    let n = pts.len();
    let baseline = cfg.family.baseline().ok();
    let mean_defect = pts.iter().sum::<f64>().abs();
    let variance_defect = match (cfg.family, &baseline) {
        (Family::Maxwell, _) => {
            (pts.iter().map(|x| x * x).sum::<f64>() - 3.0 * (n as f64 - 1.0)).abs()
        }
        (_, Some(bl)) => {
            let s: f64 = pts
                .iter()
                .map(|&x| {
                    if x == 0.0 {
                        0.0
                    } else {
                        x * bl.eval_cumulative(x) / bl.eval_b(x)
                    }
                })
                .sum();
            (s - (n as f64 - 1.0)).abs()
        }
        (_, None) => f64::NAN,
    };
    let min_gap = pts
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);
    let recursion_residual = baseline
        .as_ref()
        .map(|bl| recursion_residual(cfg.family, bl, pts))
        .unwrap_or(f64::NAN);
    let growth_ratio = (n >= 8 && !pts.is_empty()).then(|| pts[0] / (n as f64).ln().sqrt());
    PropertyReport {
        mean_defect,
        variance_defect,
        symmetry_defect: if n == 0 { 0.0 } else { symmetry_defect(pts) },
        min_gap,
        strictly_decreasing: min_gap > 0.0,
        recursion_residual,
        growth_ratio,
    }
}

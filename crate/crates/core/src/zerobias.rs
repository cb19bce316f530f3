//! Empirical laws of configurations, piecewise densities proportional to `b`
//! between consecutive atoms, and the comonotone coupling of the two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_adaptive, integrate_panels, QuadratureSpec};
use crate::poly::Polynomial;
use crate::targets::{Baseline, BaselineFamily};

/// Symmetry tolerance for `x_n = -x_{N+1-n}`.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Uniform law on a decreasing list of atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDist {
    atoms: Vec<f64>,
    ascending: Vec<f64>,
}

impl EmpiricalDist {
    pub fn new(atoms: &[f64]) -> Result<Self> {
        if let Some(i) = atoms.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::NotDecreasing { index: i + 1 });
        }
        let mut ascending = atoms.to_vec();
        ascending.reverse();
        Ok(Self {
            atoms: atoms.to_vec(),
            ascending,
        })
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `P(W <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.atoms.is_empty() {
            return 0.0;
        }
        self.ascending.partition_point(|&a| a <= x) as f64 / self.len() as f64
    }

    /// `P(W < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        if self.atoms.is_empty() {
            return 0.0;
        }
        self.ascending.partition_point(|&a| a < x) as f64 / self.len() as f64
    }

    /// Left-continuous quantile `inf { x : F(x) >= u }` for `u` in `(0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.len();
        let idx = ((u * n as f64).ceil() as usize).clamp(1, n);
        self.ascending[idx - 1]
    }

    /// `E[f(W)]`.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|&x| f(x)).sum::<f64>() / self.len() as f64
    }
}

/// Density equal to `coeffs[n] * b(x)` on `(breakpoints[n+1], breakpoints[n]]`.
#[derive(Debug, Clone)]
pub struct PiecewiseDensity {
    breakpoints: Vec<f64>,
    coeffs: Vec<f64>,
    masses: Vec<f64>,
    // Mass strictly below interval n.
    mass_below: Vec<f64>,
    baseline: Baseline,
}

/// The generalized zero-bias density of an empirical law.
pub type GzbDensity = PiecewiseDensity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub interval_left: f64,
    pub interval_right: f64,
    pub coeff: f64,
    pub mass: f64,
}

impl PiecewiseDensity {
    fn from_parts(breakpoints: Vec<f64>, coeffs: Vec<f64>, baseline: Baseline) -> Self {
        let masses: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .map(|(n, &c)| {
                c * (baseline.eval_cumulative(breakpoints[n])
                    - baseline.eval_cumulative(breakpoints[n + 1]))
            })
            .collect();
        let mut mass_below = vec![0.0; masses.len()];
        let mut acc = 0.0;
        for n in (0..masses.len()).rev() {
            mass_below[n] = acc;
            acc += masses[n];
        }
        Self {
            breakpoints,
            coeffs,
            masses,
            mass_below,
            baseline,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn baseline(&self) -> &Baseline {
        &self.baseline
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    // Index n with x in (bp[n+1], bp[n]], if any.
    fn interval_of(&self, x: f64) -> Option<usize> {
        let bp = &self.breakpoints;
        if bp.len() < 2 || !(x > bp[bp.len() - 1] && x <= bp[0]) {
            return None;
        }
        // bp is decreasing: count breakpoints >= x.
        let k = bp.partition_point(|&b| b >= x);
        Some(k - 1)
    }

    pub fn density(&self, x: f64) -> f64 {
        match self.interval_of(x) {
            Some(n) => self.coeffs[n] * self.baseline.eval_b(x),
            None => 0.0,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        if bp.len() < 2 || x <= bp[bp.len() - 1] {
            return 0.0;
        }
        match self.interval_of(x) {
            Some(n) => {
                let part = self.coeffs[n]
                    * (self.baseline.eval_cumulative(x) - self.baseline.eval_cumulative(bp[n + 1]));
                self.mass_below[n] + part
            }
            None => self.total_mass(),
        }
    }

    /// `E[f(W*)]` by panel-wise quadrature.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F, spec: &QuadratureSpec) -> Result<f64> {
        let mut total = 0.0;
        for n in 0..self.coeffs.len() {
            let (lo, hi) = (self.breakpoints[n + 1], self.breakpoints[n]);
            let mut pts = vec![lo];
            pts.extend(
                self.baseline
                    .zeros()
                    .iter()
                    .copied()
                    .filter(|&z| z > lo && z < hi),
            );
            pts.push(hi);
            let c = self.coeffs[n];
            total += c * integrate_panels(|x| f(x) * self.baseline.eval_b(x), &pts, spec)?;
        }
        Ok(total)
    }

    pub fn rows(&self) -> Vec<IntervalRow> {
        (0..self.coeffs.len())
            .map(|n| IntervalRow {
                interval_left: self.breakpoints[n + 1],
                interval_right: self.breakpoints[n],
                coeff: self.coeffs[n],
                mass: self.masses[n],
            })
            .collect()
    }
}

fn check_atoms(atoms: &[f64]) -> Result<()> {
    if atoms.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least two atoms, got {}",
            atoms.len()
        )));
    }
    if let Some(i) = atoms.windows(2).position(|w| !(w[0] > w[1])) {
        return Err(Error::NotDecreasing { index: i + 1 });
    }
    Ok(())
}

/// Density `c_n b(x)` on `(x_{n+1}, x_n]` with `c_n` proportional to
/// `sum_{i<=n} x_i / b(x_i)`, normalized to total mass one.
pub fn gzb_density(baseline: &Baseline, atoms: &[f64]) -> Result<GzbDensity> {
    check_atoms(atoms)?;
    let n = atoms.len();
    let defect = (0..n)
        .map(|i| (atoms[i] + atoms[n - 1 - i]).abs())
        .fold(0.0, f64::max);
    if defect > SYMMETRY_TOL {
        return Err(Error::AsymmetricInput { defect });
    }
    let mut partial = 0.0;
    let mut shape = Vec::with_capacity(n - 1);
    for (i, &x) in atoms.iter().enumerate() {
        let b = baseline.eval_b(x);
        if !(b > 0.0) {
            return Err(Error::BaselineZero { index: i, x });
        }
        partial += x / b;
        if i + 1 < n {
            shape.push(partial);
        }
    }
    let z: f64 = shape
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            t * (baseline.eval_cumulative(atoms[i]) - baseline.eval_cumulative(atoms[i + 1]))
        })
        .sum();
    let coeffs = shape.iter().map(|t| t / z).collect();
    Ok(PiecewiseDensity::from_parts(
        atoms.to_vec(),
        coeffs,
        baseline.clone(),
    ))
}

/// Histogram putting mass `1/(N-1)` uniformly on each gap between atoms.
pub fn histogram_density(atoms: &[f64]) -> Result<PiecewiseDensity> {
    check_atoms(atoms)?;
    let m = (atoms.len() - 1) as f64;
    let coeffs = atoms
        .windows(2)
        .map(|w| 1.0 / (m * (w[0] - w[1])))
        .collect();
    let ground = Baseline::new(BaselineFamily::Ground)?;
    Ok(PiecewiseDensity::from_parts(atoms.to_vec(), coeffs, ground))
}

/// Sup over the grid `-4, -3.9, ..., 4` of `|b(x) int_x^inf t phi(t) dt - p(x)|`
/// for the square-law baseline.
pub fn fixed_point_defect(k: u32, spec: &QuadratureSpec) -> Result<f64> {
    if k != 1 {
        return Err(Error::UnsupportedOrder { k, max: 1 });
    }
    let mut worst: f64 = 0.0;
    for i in -40..=40 {
        let x = i as f64 / 10.0;
        let tail = integrate_adaptive(
            |t| t * crate::numerics::normal_pdf(t),
            x,
            x.max(0.0) + spec.tail_cutoff,
            spec,
        )?;
        let lhs = x * x * tail;
        let p = crate::targets::pdf_pk(1, x)?;
        worst = worst.max((lhs - p).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    /// `E|W - W*|`.
    pub e_abs: f64,
    /// `E[|W| |W - W*|]`.
    pub e_wabs: f64,
    /// `E|1/W - 1/W*|`.
    pub e_inv: f64,
    /// `E|1 - W*/W|`.
    pub e_ratio: f64,
    /// `6 e_abs + 7 e_wabs + 18 e_inv + 22 e_ratio`.
    pub rhs_bound: f64,
}

impl CouplingReport {
    pub fn from_terms(e_abs: f64, e_wabs: f64, e_inv: f64, e_ratio: f64) -> Self {
        Self {
            e_abs,
            e_wabs,
            e_inv,
            e_ratio,
            rhs_bound: 6.0 * e_abs + 7.0 * e_wabs + 18.0 * e_inv + 22.0 * e_ratio,
        }
    }
}

struct CellIntegrals {
    b: Polynomial,
    // (b(x) - b(0)) / x
    b_over_x: Polynomial,
    b0: f64,
}

impl CellIntegrals {
    fn new(b: &Polynomial) -> Self {
        let c = b.coeffs();
        let b_over_x = if c.len() > 1 {
            Polynomial::new(c[1..].to_vec())
        } else {
            Polynomial::constant(0.0)
        };
        Self {
            b: b.clone(),
            b_over_x,
            b0: c[0],
        }
    }

    /// `(int |x - y| b, int |x - y| b / |x|)` over `[p, q]`.
    fn abs_moments(&self, y: f64, p: f64, q: f64) -> (f64, f64) {
        let mut cuts = vec![p];
        for c in [y, 0.0] {
            if c > p && c < q {
                cuts.push(c);
            }
        }
        cuts.push(q);
        cuts.sort_by(f64::total_cmp);
        // t b(t + y) integrated over the shifted range gives int (x - y) b(x).
        let shifted = self.b.shift(y).mul(&Polynomial::monomial(1, 1.0));
        let (mut abs, mut inv) = (0.0, 0.0);
        for w in cuts.windows(2) {
            let (a, c) = (w[0], w[1]);
            if c <= a {
                continue;
            }
            let mid = 0.5 * (a + c);
            let s1 = if mid > y { 1.0 } else { -1.0 };
            let s0 = if mid > 0.0 { 1.0 } else { -1.0 };
            abs += s1 * shifted.integrate(a - y, c - y);
            if self.b0 != 0.0 && (a == 0.0 || c == 0.0) {
                // b(0) > 0 makes 1/x non-integrable against b.
                inv = f64::INFINITY;
                continue;
            }
            let int_b = self.b.integrate(a, c);
            let mut int_b_over_x = self.b_over_x.integrate(a, c);
            if self.b0 != 0.0 {
                int_b_over_x += self.b0 * (c / a).ln();
            }
            inv += s1 * s0 * (int_b - y * int_b_over_x);
        }
        (abs, inv)
    }
}

/// The four coupling expectations under the comonotone coupling of the
/// uniform law on `atoms` and `gzb`, integrated exactly cell by cell.
pub fn coupling_expectations(atoms: &[f64], gzb: &GzbDensity) -> Result<CouplingReport> {
    if atoms.len() != gzb.breakpoints.len()
        || atoms.iter().zip(&gzb.breakpoints).any(|(a, b)| a != b)
    {
        return Err(Error::MismatchedBreakpoints);
    }
    if let Some(index) = atoms.iter().position(|&x| x == 0.0) {
        return Err(Error::AtomAtZero { index });
    }
    let n = atoms.len();
    let bl = &gzb.baseline;
    let ys: Vec<f64> = atoms.iter().rev().copied().collect();
    let m = n - 1;
    // Ascending interval i spans [ys[i], ys[i+1]] and is descending interval m-1-i.
    let coeff = |i: usize| gzb.coeffs[m - 1 - i];
    let mut cum = vec![0.0; m + 1];
    for i in 0..m {
        cum[i + 1] = cum[i] + gzb.masses[m - 1 - i];
    }
    let total = cum[m];
    for c in cum.iter_mut() {
        *c /= total;
    }
    cum[m] = 1.0;
    let cells = CellIntegrals::new(bl.b_poly());
    let scale = 1.0 / total;

    let (mut e_abs, mut e_wabs, mut e_inv, mut e_ratio) = (0.0, 0.0, 0.0, 0.0);
    let (mut i, mut j) = (0usize, 0usize);
    let mut u = 0.0;
    let mut x_cur = ys[0];
    while i < m && j < n {
        let u_int = cum[i + 1];
        let u_atom = (j + 1) as f64 / n as f64;
        let u_next = u_int.min(u_atom);
        let x_next = if u_next == u_int {
            ys[i + 1]
        } else {
            let c = coeff(i) * scale;
            let target = bl.eval_cumulative(ys[i]) + (u_next - cum[i]) / c;
            bl.eval_cumulative_inv(target).clamp(ys[i], ys[i + 1])
        };
        if u_next > u && x_next > x_cur {
            let y = ys[j];
            let c = coeff(i) * scale;
            let (a, inv) = cells.abs_moments(y, x_cur, x_next);
            e_abs += c * a;
            e_wabs += c * y.abs() * a;
            e_ratio += c * a / y.abs();
            e_inv += c * inv / y.abs();
        }
        u = u_next;
        x_cur = x_next;
        if u_next == u_int {
            i += 1;
        }
        if u_next == u_atom {
            j += 1;
        }
    }
    Ok(CouplingReport::from_terms(e_abs, e_wabs, e_inv, e_ratio))
}

//! Wasserstein and Kolmogorov distances, and convergence-rate sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::{integrate_adaptive, QuadratureSpec};
use crate::solver::{solve_configuration, Configuration, Family};
use crate::targets::{Baseline, TargetDensity};
use crate::zerobias::{coupling_expectations, gzb_density, EmpiricalDist, PiecewiseDensity};

/// `int_a^b |F - G|`, with panels split at `breaks` and at sign changes of
/// `F - G` detected near panel ends.
pub fn wasserstein1<F, G>(
    f: F,
    g: G,
    support: (f64, f64),
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let (a, b) = support;
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let d = |x: f64| f(x) - g(x);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let eps = (hi - lo) * 1e-9;
        let (p, q) = (lo + eps, hi - eps);
        let (dp, dq) = (d(p), d(q));
        let mut cuts = vec![lo];
        if dp != 0.0 && dq != 0.0 && dp.signum() != dq.signum() {
            let (mut l, mut r, mut dl) = (p, q, dp);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                if m <= l || m >= r {
                    break;
                }
                let dm = d(m);
                if dm == 0.0 {
                    l = m;
                    r = m;
                    break;
                }
                if dm.signum() == dl.signum() {
                    l = m;
                    dl = dm;
                } else {
                    r = m;
                }
            }
            cuts.push(0.5 * (l + r));
        }
        cuts.push(hi);
        for c in cuts.windows(2) {
            total += integrate_adaptive(|x| d(x).abs(), c[0], c[1], spec)?;
        }
    }
    Ok(total)
}

/// Support used when comparing a configuration with a target law.
pub fn support_for(atoms: &[f64], spec: &QuadratureSpec) -> (f64, f64) {
    let c = spec.tail_cutoff;
    let hi = atoms.first().copied().unwrap_or(c).max(c);
    let lo = atoms.last().copied().unwrap_or(-c).min(-c);
    (lo, hi)
}

/// `d_W` between the uniform law on `atoms` and a target CDF.
pub fn wasserstein_to_target<G: Fn(f64) -> f64>(
    emp: &EmpiricalDist,
    target_cdf: G,
    spec: &QuadratureSpec,
) -> Result<f64> {
    wasserstein1(
        |x| emp.cdf(x),
        target_cdf,
        support_for(emp.atoms(), spec),
        emp.atoms(),
        spec,
    )
}

/// `d_W` between the uniform law on `atoms` and a piecewise density.
pub fn wasserstein_to_piecewise(
    emp: &EmpiricalDist,
    density: &PiecewiseDensity,
    spec: &QuadratureSpec,
) -> Result<f64> {
    wasserstein_to_target(emp, |x| density.cdf(x), spec)
}

/// Sup distance between an empirical CDF and a continuous CDF, attained at
/// the atoms from one side or the other.
pub fn kolmogorov<G: Fn(f64) -> f64>(emp: &EmpiricalDist, g: G) -> f64 {
    emp.atoms()
        .iter()
        .map(|&x| {
            let gx = g(x);
            (emp.cdf(x) - gx).abs().max((emp.cdf_left(x) - gx).abs())
        })
        .fold(0.0, f64::max)
}

/// Sup distance between the CDF of a piecewise density and a target CDF.
///
/// Within each interval the difference is extremal at the endpoints or where
/// the two densities coincide; those crossings are bracketed on a sub-grid.
pub fn kolmogorov_piecewise(density: &PiecewiseDensity, target: &TargetDensity) -> f64 {
    const SUB: usize = 64;
    let bp = density.breakpoints();
    if bp.len() < 2 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    let mut probe = |x: f64| {
        worst = worst.max((density.cdf(x) - target.cdf(x)).abs());
    };
    for &x in bp {
        probe(x);
    }
    for n in 0..bp.len() - 1 {
        let (lo, hi) = (bp[n + 1], bp[n]);
        let diff = |x: f64| density.density(x) - target.pdf(x);
        let mut prev_x = lo + (hi - lo) * 1e-12;
        let mut prev_v = diff(prev_x);
        for i in 1..=SUB {
            let x = if i == SUB {
                hi
            } else {
                lo + (hi - lo) * i as f64 / SUB as f64
            };
            let v = diff(x);
            if v.signum() != prev_v.signum() {
                let (mut l, mut r, mut dl) = (prev_x, x, prev_v);
                for _ in 0..100 {
                    let m = 0.5 * (l + r);
                    if m <= l || m >= r {
                        break;
                    }
                    let dm = diff(m);
                    if dm.signum() == dl.signum() {
                        l = m;
                        dl = dm;
                    } else {
                        r = m;
                    }
                }
                probe(0.5 * (l + r));
            }
            prev_x = x;
            prev_v = v;
        }
    }
    worst
}

/// `d_K <= sqrt(2 C d_W)`, where `C` bounds the target density.
pub fn dk_dw_relation_check(dk: f64, dw: f64, c: f64) -> bool {
    dk <= (2.0 * c * dw).sqrt() + 1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub dw: f64,
    pub dk: f64,
    pub x1: f64,
    pub e_abs: f64,
    pub e_wabs: f64,
    pub e_inv: f64,
    pub e_ratio: f64,
    pub rhs_bound: f64,
    /// `dw / sqrt(ln N / N)`.
    pub ratio_dw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweep {
    pub rows: Vec<RateRow>,
    pub fit: Option<RateFit>,
}

/// All distance and coupling measurements for one solved configuration.
pub fn measure(
    cfg: &Configuration,
    baseline: &Baseline,
    target: &TargetDensity,
    spec: &QuadratureSpec,
) -> Result<RateRow> {
    let emp = EmpiricalDist::new(&cfg.points)?;
    let dw = wasserstein_to_target(&emp, |x| target.cdf(x), spec)?;
    let dk = kolmogorov(&emp, |x| target.cdf(x));
    let gzb = gzb_density(baseline, &cfg.points)?;
    let coupling = coupling_expectations(&cfg.points, &gzb)?;
    let n = cfg.n_worlds;
    Ok(RateRow {
        n,
        dw,
        dk,
        x1: cfg.points[0],
        e_abs: coupling.e_abs,
        e_wabs: coupling.e_wabs,
        e_inv: coupling.e_inv,
        e_ratio: coupling.e_ratio,
        rhs_bound: coupling.rhs_bound,
        ratio_dw: dw / ((n as f64).ln() / n as f64).sqrt(),
    })
}

/// Least-squares fit of `ln dw` against `ln N`; `None` for fewer than two rows.
pub fn fit_rate(rows: &[RateRow]) -> Option<RateFit> {
    if rows.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.dw.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Some(RateFit {
        slope,
        intercept: my - slope * mx,
        max_ratio: rows
            .iter()
            .map(|r| r.ratio_dw)
            .fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Solves and measures every `N` in parallel; rows keep the input order.
pub fn rate_sweep(family: Family, n_list: &[usize], spec: &QuadratureSpec) -> Result<RateSweep> {
    let baseline = family.baseline()?;
    let target = TargetDensity::new(baseline.clone()).with_spec(*spec);
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let cfg = solve_configuration(family, Some(&baseline), n)?;
            measure(&cfg, &baseline, &target, spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_rate(&rows);
    Ok(RateSweep { rows, fit })
}

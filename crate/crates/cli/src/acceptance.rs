//! Acceptance criteria, each evaluated at its stated tolerance.

use std::path::PathBuf;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use miw_core::energy::certify_minimizer;
use miw_core::export::to_json;
use miw_core::metrics::{fit_rate, kolmogorov_piecewise, measure, RateRow};
use miw_core::numerics::{integrate_panels, QuadratureSpec};
use miw_core::solver::{solve_configuration, validate_properties, Configuration, Family};
use miw_core::stein::{
    build_bundle, max_ode_residual, standard_suite, supnorm_suite, GridSpec, TestFunction,
};
use miw_core::targets::{
    kernel_from_baseline, pdf_pk, stein_kernel_tau, tau_times_pdf, Baseline, BaselineFamily,
    TargetDensity,
};
use miw_core::zerobias::{fixed_point_defect, histogram_density};

pub const CRITERIA: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Density mode constant as quoted for the metric relation.
pub const QUOTED_MODE: f64 = 0.2936268;

const HERMITE2: Family = Family::General(BaselineFamily::HermiteSquare { k: 2 });

type RealFn = fn(f64) -> f64;

pub struct Context {
    /// Path of the `miw` binary, needed for the determinism check.
    pub exe: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "AC-{} {} {} ({:.3} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed.as_secs_f64()
        )
    }

    /// Summary line followed by one indented line per check.
    pub fn report(&self) -> String {
        let mut s = self.line();
        s.push('\n');
        for c in &self.checks {
            let tag = if c.passed { "ok" } else { "FAIL" };
            s.push_str(&format!("    [{tag}] {}: {}\n", c.name, c.detail));
        }
        s
    }
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Check {
    check(name, value <= limit, format!("{value:.3e} <= {limit:.0e}"))
}

type Checks = miw_core::Result<Vec<Check>>;

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "closed-form two-world square-law solution",
        2 => "N = 22 minimizer identities",
        3 => "recursion-family consistency and Hermite histogram convergence",
        4 => "Stein kernel closed forms and integration by parts",
        5 => "square-law fixed point",
        6 => "Stein solution sup-norm bounds",
        7 => "Wasserstein bound from the coupling terms",
        8 => "convergence rate sweep",
        9 => "Kolmogorov-Wasserstein relation",
        10 => "determinism and serialization",
        _ => "unknown criterion",
    }
}

pub fn run_criterion(id: u8, ctx: &Context) -> Outcome {
    let start = Instant::now();
    let result = match id {
        1 => ac1(),
        2 => ac2(),
        3 => ac3(),
        4 => ac4(),
        5 => ac5(),
        6 => ac6(),
        7 => ac7(),
        8 => ac8(),
        9 => ac9(),
        10 => ac10(ctx),
        _ => Ok(vec![check(
            "criterion",
            false,
            format!("no criterion {id}"),
        )]),
    };
    let checks = result.unwrap_or_else(|e| vec![check("evaluation", false, e.to_string())]);
    Outcome {
        id,
        title: title(id),
        passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
        checks,
        elapsed: start.elapsed(),
    }
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

/// Fastest of `reps` runs, to keep one-off scheduling noise out of timing checks.
fn best_time<T>(
    reps: usize,
    mut f: impl FnMut() -> miw_core::Result<T>,
) -> miw_core::Result<(T, Duration)> {
    let mut best = Duration::MAX;
    let mut out = None;
    for _ in 0..reps {
        let t = Instant::now();
        let v = f()?;
        best = best.min(t.elapsed());
        out = Some(v);
    }
    Ok((out.expect("reps >= 1"), best))
}

fn runtime_check(limit: Duration, took: Duration) -> Check {
    check(
        "runtime",
        took < limit,
        format!(
            "{:.3} ms < {:.0} ms",
            took.as_secs_f64() * 1e3,
            limit.as_secs_f64() * 1e3
        ),
    )
}

fn ac1() -> Checks {
    let (cfg, took) = best_time(5, || solve_configuration(Family::Maxwell, None, 2))?;
    let a = 1.5f64.sqrt();
    let err = (cfg.points[0] - a).abs().max((cfg.points[1] + a).abs());
    let v: f64 = cfg.points.iter().map(|x| x * x).sum();
    Ok(vec![
        at_most("points vs (sqrt 1.5, -sqrt 1.5)", err, 1e-12),
        // No binary64 x has 2 x^2 = 3 exactly; the neighbours of sqrt(1.5)
        // give 3 -+ 4.4e-16, so the identity is checked at the point tolerance.
        check(
            "sum x^2 = 3",
            (v - 3.0).abs() <= 1e-12,
            format!("sum x^2 = {v:.17}, |sum x^2 - 3| <= 1e-12"),
        ),
        runtime_check(Duration::from_millis(1), took),
    ])
}

fn ac2() -> Checks {
    let ((cfg, energy), took) = best_time(3, || {
        let cfg = solve_configuration(Family::Maxwell, None, 22)?;
        let bl = Baseline::new(BaselineFamily::MaxwellSquare)?;
        let e = certify_minimizer(&bl, &cfg.points)?;
        Ok((cfg, e))
    })?;
    let p = validate_properties(&cfg);
    let gap = energy.u * energy.v - 9.0 * 21.0 * 21.0;
    Ok(vec![
        at_most("mean defect", p.mean_defect, 1e-9),
        at_most("variance defect", p.variance_defect, 1e-9),
        at_most("symmetry defect", p.symmetry_defect, 1e-9),
        at_most("recursion residual", p.recursion_residual, 1e-9),
        check(
            "strictly decreasing",
            p.strictly_decreasing,
            format!("min gap {:.3e}", p.min_gap),
        ),
        at_most("|V - 63|", (energy.v - 63.0).abs(), 1e-7),
        at_most("|H - 126| / 126", (energy.h - 126.0).abs() / 126.0, 1e-6),
        at_most("|U V - 9 * 21^2|", gap.abs(), 1e-3),
        runtime_check(Duration::from_millis(50), took),
    ])
}

fn ac3() -> Checks {
    let mut out = Vec::new();
    for n in [2, 8, 22] {
        let m = solve_configuration(Family::Maxwell, None, n)?;
        let g = solve_configuration(Family::General(BaselineFamily::MaxwellSquare), None, n)?;
        let err = m
            .points
            .iter()
            .zip(&g.points)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out.push(at_most(format!("general vs maxwell, N = {n}"), err, 1e-10));
    }
    let cfg = solve_configuration(HERMITE2, None, 41)?;
    out.push(at_most(
        "hermite-sq k=2, N = 41 residual",
        cfg.residuals.max_recursion_residual,
        1e-9,
    ));
    let target = TargetDensity::hermite(2)?;
    let mut dks = Vec::new();
    for n in [21, 41, 81] {
        let cfg = solve_configuration(HERMITE2, None, n)?;
        dks.push(kolmogorov_piecewise(
            &histogram_density(&cfg.points)?,
            &target,
        ));
    }
    out.push(check(
        "histogram d_K decreasing over N = 21, 41, 81",
        dks[0] > dks[1] && dks[1] > dks[2],
        format!("{:.4e}, {:.4e}, {:.4e}", dks[0], dks[1], dks[2]),
    ));
    Ok(out)
}

fn ac4() -> Checks {
    let spec = spec();
    let mut out = Vec::new();
    for k in 1..=3u32 {
        let bl = Baseline::new(BaselineFamily::HermiteSquare { k })?;
        let mut xs = Vec::new();
        let mut i = 0;
        while xs.len() < 50 {
            let x = -4.0 + 0.1537 * i as f64;
            i += 1;
            if bl.zeros().iter().all(|z| (x - z).abs() >= 0.05) {
                xs.push(x);
            }
        }
        let mut worst: f64 = 0.0;
        for &x in &xs {
            let q = kernel_from_baseline(&bl, x, &spec)?;
            worst = worst.max((q.value - stein_kernel_tau(k, x)?).abs());
        }
        out.push(at_most(format!("kernel k = {k}, 50 points"), worst, 1e-8));

        let mut panels = vec![-spec.tail_cutoff];
        panels.extend_from_slice(bl.zeros());
        panels.push(spec.tail_cutoff);
        let tests: [(&str, RealFn, RealFn); 2] =
            [("x", |x| x, |_| 1.0), ("sin x", f64::sin, f64::cos)];
        for (name, f, df) in tests {
            let lhs = integrate_panels(
                |x| tau_times_pdf(k, x).unwrap_or(f64::NAN) * df(x),
                &panels,
                &spec,
            )?;
            let rhs = integrate_panels(
                |x| x * f(x) * pdf_pk(k, x).unwrap_or(f64::NAN),
                &panels,
                &spec,
            )?;
            out.push(at_most(
                format!("integration by parts k = {k}, f = {name}"),
                (lhs - rhs).abs(),
                1e-8,
            ));
        }
    }
    Ok(out)
}

fn ac5() -> Checks {
    Ok(vec![at_most(
        "fixed-point defect",
        fixed_point_defect(1, &spec())?,
        1e-10,
    )])
}

fn ac6() -> Checks {
    let spec = spec();
    let grid = GridSpec::default();
    let mut out = Vec::new();
    for test in standard_suite(&spec)? {
        let c = test.c;
        let name = test.name.clone();
        let bundle = build_bundle(test, &spec);
        let s = supnorm_suite(&bundle, &grid)?;
        out.push(check(
            format!("bounds for h = {name} (c = {c})"),
            s.within_bounds(c),
            format!(
                "g {:.4} <= {}, g' {:.4} <= {}, chi {:.4} <= {}, chi' {:.4} <= {}",
                s.sup_g,
                3.0 * c,
                s.sup_dg,
                4.0 * c,
                s.sup_chi,
                6.0 * c,
                s.sup_dchi,
                7.0 * c
            ),
        ));
        out.push(at_most(
            format!("ODE residual for h = {name}"),
            max_ode_residual(&bundle, &grid)?,
            1e-7,
        ));
    }
    let linear = build_bundle(
        TestFunction::new("x", |x| x, |_| 1.0, 1.0, vec![], &spec)?,
        &spec,
    );
    let s = supnorm_suite(&linear, &grid)?;
    out.push(at_most(
        "| ||g|| - 1 | for h = x",
        (s.sup_g - 1.0).abs(),
        1e-9,
    ));
    Ok(out)
}

fn maxwell_rows(ns: &[usize]) -> miw_core::Result<Vec<(Configuration, RateRow)>> {
    let spec = spec();
    let bl = Baseline::new(BaselineFamily::MaxwellSquare)?;
    let target = TargetDensity::new(bl.clone());
    ns.iter()
        .map(|&n| {
            let cfg = solve_configuration(Family::Maxwell, Some(&bl), n)?;
            let row = measure(&cfg, &bl, &target, &spec)?;
            Ok((cfg, row))
        })
        .collect()
}

fn ac7() -> Checks {
    let mut out = Vec::new();
    for (_, r) in maxwell_rows(&[2, 8, 22, 64, 256, 1024])? {
        let n = r.n;
        out.push(check(
            format!("N = {n}: d_W <= 6 e_abs + 7 e_wabs + 18 e_inv + 22 e_ratio"),
            r.dw <= r.rhs_bound,
            format!("{:.4e} <= {:.4e}", r.dw, r.rhs_bound),
        ));
        let b1 = 2.0 * r.x1 / (n as f64 - 1.0);
        out.push(check(
            format!("N = {n}: e_abs <= 2 x1 / (N - 1)"),
            r.e_abs <= b1,
            format!("{:.4e} <= {:.4e}", r.e_abs, b1),
        ));
    }
    Ok(out)
}

fn ac8() -> Checks {
    let start = Instant::now();
    let ns: Vec<usize> = (3..=12).map(|k| 1usize << k).collect();
    let rows = maxwell_rows(&ns)?;
    let took = start.elapsed();
    let table: Vec<RateRow> = rows.iter().map(|(_, r)| *r).collect();
    let fit = fit_rate(&table).expect("ten rows");
    let growth: Vec<f64> = table
        .iter()
        .map(|r| r.x1 / (r.n as f64).ln().sqrt())
        .collect();
    let gmax = growth.iter().copied().fold(f64::MIN, f64::max);
    let gmin = growth.iter().copied().fold(f64::MAX, f64::min);
    let mut out = vec![
        check(
            "max d_W / sqrt(log N / N) finite",
            fit.max_ratio.is_finite(),
            format!("{:.4}", fit.max_ratio),
        ),
        check(
            "log-log slope in [-0.65, -0.40]",
            (-0.65..=-0.40).contains(&fit.slope),
            format!("slope {:.4}", fit.slope),
        ),
        check(
            "x1 / sqrt(log N) max/min < 3",
            gmax / gmin < 3.0,
            format!("{:.4}", gmax / gmin),
        ),
    ];
    let worst = rows
        .iter()
        .map(|(cfg, _)| {
            let n = cfg.n_worlds;
            cfg.points[n / 2 - 1] / (3.0 / n as f64).sqrt()
        })
        .fold(f64::INFINITY, f64::min);
    out.push(check(
        "x_{N/2} >= sqrt(3/N) for every N",
        worst >= 1.0,
        format!("min x_(N/2) / sqrt(3/N) = {worst:.4}"),
    ));
    out.push(runtime_check(Duration::from_secs(180), took));
    Ok(out)
}

fn ac9() -> Checks {
    let exact = TargetDensity::hermite(1)?.mode_sup();
    let ns = [2, 8, 16, 22, 32, 64, 128, 256, 512, 1024, 2048, 4096];
    let rows = maxwell_rows(&ns)?;
    let mut out = Vec::new();
    for (c, label) in [(QUOTED_MODE, "quoted"), (exact, "exact")] {
        let worst = rows
            .iter()
            .map(|(_, r)| r.dk / (2.0 * c * r.dw).sqrt())
            .fold(0.0, f64::max);
        out.push(check(
            format!(
                "d_K <= sqrt(2 C d_W), C = {c:.8} ({label}), {} configurations",
                ns.len()
            ),
            worst <= 1.0,
            format!("max d_K / sqrt(2 C d_W) = {worst:.4}"),
        ));
    }
    Ok(out)
}

fn run_binary(exe: &PathBuf, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Process::new(exe)
        .args(args)
        .output()
        .map_err(|e| format!("cannot run {}: {e}", exe.display()))?;
    if !out.status.success() {
        return Err(format!(
            "`miw {}` exited with {}",
            args.join(" "),
            out.status
        ));
    }
    Ok(out.stdout)
}

fn ac10(ctx: &Context) -> Checks {
    let mut out = Vec::new();
    let Some(exe) = &ctx.exe else {
        return Ok(vec![check(
            "binary",
            false,
            "path of the miw binary unavailable",
        )]);
    };
    let commands: [&[&str]; 3] = [
        &["solve", "--family", "maxwell", "--n", "22", "--out", "json"],
        &[
            "density",
            "--family",
            "hermite-sq",
            "--k",
            "2",
            "--n",
            "41",
            "--out",
            "csv",
        ],
        &[
            "rates",
            "--family",
            "maxwell",
            "--n-list",
            "8,16,32,64",
            "--out",
            "csv",
        ],
    ];
    let mut solve_bytes = Vec::new();
    for args in commands {
        let name = format!("repeat `{}`", args[..args.len().min(5)].join(" "));
        match (run_binary(exe, args), run_binary(exe, args)) {
            (Ok(a), Ok(b)) => {
                out.push(check(name, a == b, format!("{} bytes", a.len())));
                if args[0] == "solve" {
                    solve_bytes = a;
                }
            }
            (Err(e), _) | (_, Err(e)) => out.push(check(name, false, e)),
        }
    }
    let expected = solve_configuration(Family::Maxwell, None, 22)?;
    let text = String::from_utf8_lossy(&solve_bytes);
    match serde_json::from_str::<Configuration>(&text) {
        Ok(parsed) => {
            out.push(check(
                "CLI configuration parses back exactly",
                parsed == expected,
                "compared field by field",
            ));
            let again = to_json(&parsed)? + "\n";
            out.push(check(
                "re-serialized JSON identical to CLI output",
                again == text,
                format!("{} bytes", again.len()),
            ));
        }
        Err(e) => out.push(check("CLI configuration parses", false, e.to_string())),
    }
    for (family, n) in [(Family::Ground, 7), (HERMITE2, 21), (Family::Maxwell, 256)] {
        let cfg = solve_configuration(family, None, n)?;
        let s = to_json(&cfg)?;
        let back: Configuration =
            serde_json::from_str(&s).map_err(|e| miw_core::Error::InvalidInput(e.to_string()))?;
        out.push(check(
            format!("round trip {family}, N = {n}"),
            back == cfg,
            format!("{} bytes", s.len()),
        ));
    }
    Ok(out)
}

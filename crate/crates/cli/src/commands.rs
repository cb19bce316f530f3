use std::path::Path;

use miw_core::energy::certify_minimizer;
use miw_core::export::{csv_string, format_float, records_to_csv, write_output, Cell};
use miw_core::metrics::{rate_sweep, wasserstein_to_piecewise, wasserstein_to_target};
use miw_core::solver::{solve_configuration, validate_properties, Configuration, Family};
use miw_core::stein::{
    build_bundle, identity_f_check, max_ode_residual, standard_suite, supnorm_suite, theorem_check,
    GridSpec, SupNormRow,
};
use miw_core::targets::{Baseline, TargetDensity};
use miw_core::zerobias::{
    coupling_expectations, fixed_point_defect, gzb_density, histogram_density, EmpiricalDist,
};
use serde_json::{json, Map, Value};

use crate::acceptance::{self, Context};
use crate::{check_n, usage, CliError, Command, CommonArgs, CriterionArg, DensityKind, OutFormat};

/// Number of target pdf samples emitted by `density`.
pub const PDF_SAMPLES: usize = 400;

const DEFAULT_RATES: [usize; 10] = [8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096];

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Check {
            criterion,
            out_path,
        } => return check(*criterion, out_path.as_deref()),
        Command::Density { common, kind } => {
            let text = density(common, *kind)?;
            return emit(&text, common.out_path.as_deref());
        }
        _ => {}
    }
    let (common, text) = match command {
        Command::Solve(c) => (c, solve(c)?),
        Command::Verify(c) => (c, verify(c)?),
        Command::Energy(c) => (c, energy(c)?),
        Command::Coupling(c) => (c, coupling(c)?),
        Command::SteinCheck(c) => (c, stein_check(c)?),
        Command::Rates(c) => (c, rates(c)?),
        Command::FixedPoint(c) => (c, fixed_point(c)?),
        Command::Check { .. } | Command::Density { .. } => unreachable!(),
    };
    emit(&text, common.out_path.as_deref())
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    write_output(text, path).map_err(|source| CliError::Io {
        path: path.map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string()),
        source,
    })?;
    Ok(())
}

fn format_of(c: &CommonArgs, default: OutFormat) -> OutFormat {
    c.out.unwrap_or(default)
}

fn solved(c: &CommonArgs, command: &str) -> Result<(Family, Baseline, Configuration), CliError> {
    let family = c.resolve_family()?;
    let n = c.resolve_n(family, command)?;
    let baseline = family.baseline()?;
    let cfg = solve_configuration(family, Some(&baseline), n)?;
    Ok((family, baseline, cfg))
}

fn with_metadata(mut value: Value, c: &CommonArgs) -> Value {
    let overrides = c.overrides();
    if !overrides.is_empty() {
        let map: Map<String, Value> = overrides
            .into_iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        if let Value::Object(obj) = &mut value {
            obj.insert("metadata".into(), json!({ "overrides": map }));
        }
    }
    value
}

fn csv_preamble(c: &CommonArgs) -> String {
    c.overrides()
        .into_iter()
        .map(|(k, v)| format!("# {k}={}\n", format_float(v)))
        .collect()
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn flatten(prefix: &str, value: &Value, header: &mut Vec<String>, cells: &mut Vec<Cell>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, header, cells);
            }
        }
        Value::Array(_) => {}
        leaf => {
            header.push(prefix.to_string());
            cells.push(match leaf {
                Value::Null => Cell::Text(String::new()),
                Value::Bool(b) => Cell::Bool(*b),
                Value::Number(n) if n.is_f64() => Cell::Float(n.as_f64().unwrap_or(f64::NAN)),
                Value::Number(n) => Cell::Text(n.to_string()),
                Value::String(s) => Cell::Text(s.clone()),
                _ => unreachable!(),
            });
        }
    }
}

/// One-row CSV of every scalar leaf of a JSON object, with dotted column names.
fn report_csv(value: &Value) -> String {
    let mut header = Vec::new();
    let mut cells = Vec::new();
    flatten("", value, &mut header, &mut cells);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_string(&header, &[cells])
}

fn render_report(value: Value, c: &CommonArgs) -> String {
    match format_of(c, OutFormat::Json) {
        OutFormat::Json => pretty(&with_metadata(value, c)),
        OutFormat::Csv => csv_preamble(c) + &report_csv(&value),
    }
}

fn solve(c: &CommonArgs) -> Result<String, CliError> {
    c.quadrature()?;
    let (_, _, cfg) = solved(c, "solve")?;
    Ok(match format_of(c, OutFormat::Json) {
        OutFormat::Json => {
            let value = serde_json::to_value(&cfg).map_err(|e| usage(e.to_string()))?;
            pretty(&with_metadata(value, c))
        }
        OutFormat::Csv => {
            let rows: Vec<Vec<Cell>> = cfg
                .points
                .iter()
                .enumerate()
                .map(|(i, &x)| vec![(i + 1).into(), x.into()])
                .collect();
            csv_preamble(c) + &csv_string(&["index", "x"], &rows)
        }
    })
}

fn verify(c: &CommonArgs) -> Result<String, CliError> {
    c.quadrature()?;
    let (family, _, cfg) = solved(c, "verify")?;
    let report = validate_properties(&cfg);
    Ok(render_report(
        json!({
            "family": family.to_string(),
            "N": cfg.n_worlds,
            "shoot_param": cfg.shoot_param,
            "properties": report,
        }),
        c,
    ))
}

fn energy(c: &CommonArgs) -> Result<String, CliError> {
    c.quadrature()?;
    let (family, baseline, cfg) = solved(c, "energy")?;
    let report = certify_minimizer(&baseline, &cfg.points)?;
    Ok(render_report(
        json!({
            "family": family.to_string(),
            "N": cfg.n_worlds,
            "energy": report,
            "properties": validate_properties(&cfg),
        }),
        c,
    ))
}

fn pdf_grid(points: &[f64]) -> Vec<f64> {
    let lo = points[points.len() - 1] - 0.5;
    let hi = points[0] + 0.5;
    let h = (hi - lo) / (PDF_SAMPLES - 1) as f64;
    (0..PDF_SAMPLES).map(|i| lo + i as f64 * h).collect()
}

fn density(c: &CommonArgs, kind: DensityKind) -> Result<String, CliError> {
    let spec = c.quadrature()?;
    let (family, baseline, cfg) = solved(c, "density")?;
    let d = match kind {
        DensityKind::Histogram => histogram_density(&cfg.points)?,
        DensityKind::Gzb => gzb_density(&baseline, &cfg.points)?,
    };
    let target = TargetDensity::new(baseline).with_spec(spec);
    let samples: Vec<(f64, f64)> = pdf_grid(&cfg.points)
        .into_iter()
        .map(|x| (x, target.pdf(x)))
        .collect();
    Ok(match format_of(c, OutFormat::Json) {
        OutFormat::Json => pretty(&with_metadata(
            json!({
                "family": family.to_string(),
                "N": cfg.n_worlds,
                "kind": match kind {
                    DensityKind::Histogram => "histogram",
                    DensityKind::Gzb => "gzb",
                },
                "intervals": d.rows(),
                "pdf": samples.iter().map(|&(x, p)| json!({ "x": x, "pdf": p })).collect::<Vec<_>>(),
            }),
            c,
        )),
        OutFormat::Csv => {
            let mut rows: Vec<Vec<Cell>> = d
                .rows()
                .iter()
                .map(|r| {
                    vec![
                        "interval".into(),
                        r.interval_left.into(),
                        r.interval_right.into(),
                        r.coeff.into(),
                        r.mass.into(),
                    ]
                })
                .collect();
            rows.extend(samples.iter().map(|&(x, p)| {
                vec![
                    "pdf".into(),
                    x.into(),
                    x.into(),
                    p.into(),
                    Cell::Text(String::new()),
                ]
            }));
            csv_preamble(c) + &csv_string(&["kind", "x_left", "x_right", "density", "mass"], &rows)
        }
    })
}

fn coupling(c: &CommonArgs) -> Result<String, CliError> {
    let spec = c.quadrature()?;
    let (family, baseline, cfg) = solved(c, "coupling")?;
    let gzb = gzb_density(&baseline, &cfg.points)?;
    let report = coupling_expectations(&cfg.points, &gzb)?;
    let emp = EmpiricalDist::new(&cfg.points)?;
    let target = TargetDensity::new(baseline).with_spec(spec);
    let dw_target = wasserstein_to_target(&emp, |x| target.cdf(x), &spec)?;
    let dw_gzb = wasserstein_to_piecewise(&emp, &gzb, &spec)?;
    let b1 = 2.0 * cfg.points[0] / (cfg.n_worlds as f64 - 1.0);
    Ok(render_report(
        json!({
            "family": family.to_string(),
            "N": cfg.n_worlds,
            "coupling": report,
            "dw_gzb": dw_gzb,
            "theorem": theorem_check(&cfg, &report, dw_target),
            "e_abs_bound": { "bound": b1, "holds": report.e_abs <= b1 },
        }),
        c,
    ))
}

fn grid_of(c: &CommonArgs) -> GridSpec {
    let mut grid = GridSpec::default();
    if let Some(step) = c.grid_step {
        grid.step = step;
    }
    grid
}

fn stein_check(c: &CommonArgs) -> Result<String, CliError> {
    let spec = c.quadrature()?;
    let grid = grid_of(c);
    let mut rows = Vec::new();
    let mut extra = Vec::new();
    for test in standard_suite(&spec)? {
        let bundle = build_bundle(test, &spec);
        let sup = supnorm_suite(&bundle, &grid)?;
        let row = SupNormRow::new(bundle.test(), &sup);
        extra.push(json!({
            "row": row,
            "max_ode_residual": max_ode_residual(&bundle, &grid)?,
            "identity_defect": identity_f_check(&bundle, &grid)?,
        }));
        rows.push(row);
    }
    Ok(match format_of(c, OutFormat::Json) {
        OutFormat::Json => pretty(&with_metadata(json!({ "grid": grid, "suite": extra }), c)),
        OutFormat::Csv => csv_preamble(c) + &records_to_csv(&rows),
    })
}

fn rates(c: &CommonArgs) -> Result<String, CliError> {
    let spec = c.quadrature()?;
    let family = c.resolve_family()?;
    let ns: Vec<usize> = if c.n_list.is_empty() {
        DEFAULT_RATES.to_vec()
    } else {
        c.n_list.clone()
    };
    if c.n.is_some() {
        return Err(usage("--n does not apply to rates, use --n-list"));
    }
    for &n in &ns {
        check_n(family, n).map_err(|e| match e {
            CliError::Usage(m) => usage(m.replacen("--n", "--n-list", 1)),
            other => other,
        })?;
    }
    let sweep = rate_sweep(family, &ns, &spec)?;
    Ok(match format_of(c, OutFormat::Csv) {
        OutFormat::Csv => csv_preamble(c) + &records_to_csv(&sweep.rows),
        OutFormat::Json => pretty(&with_metadata(
            json!({ "family": family.to_string(), "rows": sweep.rows, "fit": sweep.fit }),
            c,
        )),
    })
}

fn fixed_point(c: &CommonArgs) -> Result<String, CliError> {
    let spec = c.quadrature()?;
    let k = c.k.unwrap_or(1);
    if k != 1 {
        return Err(usage(format!(
            "--k: the fixed-point check is available for k = 1 only, got {k}"
        )));
    }
    let defect = fixed_point_defect(k, &spec)?;
    Ok(render_report(
        json!({ "k": k, "grid": "-4:0.1:4", "defect": defect }),
        c,
    ))
}

fn check(criterion: CriterionArg, out_path: Option<&Path>) -> Result<(), CliError> {
    let ctx = Context {
        exe: std::env::current_exe().ok(),
    };
    let ids: Vec<u8> = match criterion {
        CriterionArg::All => acceptance::CRITERIA.to_vec(),
        CriterionArg::One(id) => vec![id],
    };
    let mut text = String::new();
    let mut failed = 0;
    for id in ids {
        let outcome = acceptance::run_criterion(id, &ctx);
        if !outcome.passed {
            failed += 1;
        }
        text.push_str(&outcome.report());
    }
    emit(&text, out_path)?;
    if failed > 0 {
        return Err(CliError::CheckFailed { failed });
    }
    Ok(())
}

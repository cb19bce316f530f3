use std::process::{Command, Output};

use miw_core::solver::Configuration;
use serde_json::Value;

fn miw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miw"))
        .args(args)
        .output()
        .expect("miw binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn solve_json_has_22_points_and_small_residuals() {
    let o = miw(&["solve", "--family", "maxwell", "--n", "22", "--out", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let cfg: Configuration = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cfg.points.len(), 22);
    assert!(cfg.residuals.max_recursion_residual <= 1e-9);
    assert!(cfg.residuals.mean_abs <= 1e-9);
    assert!(cfg.residuals.symmetry_defect <= 1e-9);
}

#[test]
fn odd_maxwell_is_a_parity_error() {
    let o = miw(&["solve", "--family", "maxwell", "--n", "21"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("parity"));
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_name_the_flag() {
    let o = miw(&["solve", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--bogus"));

    let o = miw(&["solve", "--family", "hermite-sq", "--n", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--k"));

    let o = miw(&["solve", "--family", "monomial", "--r", "3", "--n", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--r"));

    let o = miw(&["solve", "--family", "maxwell", "--k", "2", "--n", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--k"));

    let o = miw(&["energy"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--n"));

    let o = miw(&["solve", "--n", "4", "--abs-tol", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--abs-tol"));

    let o = miw(&["check", "--criterion", "11"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--criterion"));
}

#[test]
fn numerical_failure_exits_two() {
    let o = miw(&[
        "fixed-point",
        "--max-subdivisions",
        "1",
        "--abs-tol",
        "1e-300",
        "--rel-tol",
        "1e-300",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did not converge"));
}

#[test]
fn hermite_density_csv_overlays_target() {
    let o = miw(&[
        "density",
        "--family",
        "hermite-sq",
        "--k",
        "2",
        "--n",
        "41",
        "--out",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kind,x_left,x_right,density,mass"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let intervals: Vec<&Vec<&str>> = rows.iter().filter(|r| r[0] == "interval").collect();
    let pdf: Vec<&Vec<&str>> = rows.iter().filter(|r| r[0] == "pdf").collect();
    assert_eq!(intervals.len(), 40);
    assert_eq!(pdf.len(), 400);
    let total: f64 = intervals
        .iter()
        .map(|r| {
            let m: f64 = r[4].parse().unwrap();
            assert!((m - 1.0 / 40.0).abs() < 1e-12);
            let (a, b, c): (f64, f64, f64) = (
                r[1].parse().unwrap(),
                r[2].parse().unwrap(),
                r[3].parse().unwrap(),
            );
            assert!((c * (b - a) - m).abs() < 1e-12);
            m
        })
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
    // Riemann sum of the pdf samples over the plotted range is close to 1.
    let xs: Vec<f64> = pdf.iter().map(|r| r[1].parse().unwrap()).collect();
    let ps: Vec<f64> = pdf.iter().map(|r| r[3].parse().unwrap()).collect();
    let h = xs[1] - xs[0];
    let mass: f64 = ps.iter().sum::<f64>() * h;
    assert!((mass - 1.0).abs() < 1e-2);
}

#[test]
fn json_outputs_have_documented_keys() {
    let cases: [(&[&str], &[&str]); 5] = [
        (&["verify", "--n", "22"], &["family", "N", "properties"]),
        (&["energy", "--n", "22"], &["energy"]),
        (
            &["coupling", "--n", "22"],
            &["coupling", "theorem", "e_abs_bound"],
        ),
        (&["fixed-point"], &["defect"]),
        (
            &["rates", "--n-list", "8,16", "--out", "json"],
            &["rows", "fit"],
        ),
    ];
    for (args, keys) in cases {
        let o = miw(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        for k in keys {
            assert!(v.get(k).is_some(), "{args:?} missing {k}");
        }
        assert!(v.get("metadata").is_none());
    }
    let o = miw(&["energy", "--n", "22"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let h = v["energy"]["H"].as_f64().unwrap();
    assert!((h - 126.0).abs() <= 1e-6 * 126.0);
}

#[test]
fn overrides_are_echoed() {
    let o = miw(&["fixed-point", "--rel-tol", "1e-9"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["metadata"]["overrides"]["rel_tol"].as_f64(), Some(1e-9));

    let o = miw(&["rates", "--n-list", "8", "--abs-tol", "1e-11"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    let echoed = lines.next().unwrap().strip_prefix("# abs_tol=").unwrap();
    assert_eq!(echoed.parse::<f64>().unwrap(), 1e-11);
    assert!(lines.next().unwrap().starts_with("N,dw,dk,"));
}

#[test]
fn rates_csv_rows() {
    let o = miw(&["rates", "--family", "maxwell", "--n-list", "8,16,32"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("N,dw,dk,x1"));
    assert!(lines[1].starts_with("8,"));
    assert!(!text.contains('\r'));

    let o = miw(&["rates", "--n-list", "8,9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--n-list"));
}

#[test]
fn stein_check_on_coarse_grid() {
    let o = miw(&["stein-check", "--grid-step", "0.05", "--out", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
}

#[test]
fn out_path_writes_file() {
    let dir = std::env::temp_dir().join(format!("miw-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cfg.csv");
    let o = miw(&[
        "solve",
        "--family",
        "ground",
        "--n",
        "3",
        "--out",
        "csv",
        "--out-path",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("index,x"));
    assert_eq!(text.lines().count(), 4);
    std::fs::remove_dir_all(&dir).unwrap();

    let o = miw(&["solve", "--n", "2", "--out-path", "/nonexistent-dir/x.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent-dir/x.json"));
}

#[test]
fn check_command_reports_one_criterion() {
    let o = miw(&["check", "--criterion", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("AC-5 PASS"));
}

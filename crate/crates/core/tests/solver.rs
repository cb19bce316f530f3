use miw_core::numerics::{find_root, RootSpec};
use miw_core::solver::{
    configuration_census, matching_value, shoot_sequence, solve_configuration, validate_properties,
    Configuration, Family, Termination,
};
use miw_core::targets::{Baseline, BaselineFamily};
use miw_core::Error;
use proptest::prelude::*;

const HERMITE2: Family = Family::General(BaselineFamily::HermiteSquare { k: 2 });

fn check_invariants(cfg: &Configuration) {
    let n = cfg.n_worlds as f64;
    let r = validate_properties(cfg);
    assert!(r.strictly_decreasing, "{:?}", cfg.family);
    assert!(r.mean_defect <= 1e-9 * n);
    assert!(r.symmetry_defect <= 1e-9);
    assert!(r.recursion_residual <= 1e-9);
    assert!(cfg.residuals.max_recursion_residual <= 1e-9);
    if cfg.family == Family::Maxwell {
        assert!(
            r.variance_defect <= 1e-7 * n,
            "variance defect {}",
            r.variance_defect
        );
    }
}

#[test]
fn maxwell_pair_closed_form() {
    let cfg = solve_configuration(Family::Maxwell, None, 2).unwrap();
    let a = 1.5f64.sqrt();
    assert!((cfg.points[0] - a).abs() <= 1e-12);
    assert!((cfg.points[1] + a).abs() <= 1e-12);
    let r = validate_properties(&cfg);
    assert!(r.variance_defect <= 1e-12);
    assert!(r.mean_defect <= 1e-12 && r.symmetry_defect <= 1e-12);
    assert!(r.growth_ratio.is_none());
}

#[test]
fn maxwell_22() {
    let cfg = solve_configuration(Family::Maxwell, None, 22).unwrap();
    check_invariants(&cfg);
    let v: f64 = cfg.points.iter().map(|x| x * x).sum();
    assert!((v - 63.0).abs() <= 1e-7);
    assert!(cfg.points[10] >= (3.0f64 / 22.0).sqrt());
}

#[test]
fn uniqueness_probe() {
    let bl = Baseline::new(BaselineFamily::MaxwellSquare).unwrap();
    for n in [4, 22, 100] {
        let cfg = solve_configuration(Family::Maxwell, None, n).unwrap();
        let lo = matching_value(Family::Maxwell, &bl, cfg.shoot_param * (1.0 - 1e-3), n);
        let hi = matching_value(Family::Maxwell, &bl, cfg.shoot_param * (1.0 + 1e-3), n);
        assert!(lo < 0.0 && hi > 0.0, "n={n} lo={lo} hi={hi}");
    }
}

#[test]
fn general_square_baseline_equals_maxwell() {
    for n in [2, 8, 22] {
        let m = solve_configuration(Family::Maxwell, None, n).unwrap();
        let g =
            solve_configuration(Family::General(BaselineFamily::MaxwellSquare), None, n).unwrap();
        for (a, b) in m.points.iter().zip(&g.points) {
            assert!((a - b).abs() <= 1e-10, "n={n}");
        }
    }
}

// Independent shooting for x_{n+1}^3 = x_n^3 - 1/S_n.
fn unit_factor_solution(n: usize) -> Vec<f64> {
    let half = |x1: f64| -> Option<Vec<f64>> {
        let mut xs = vec![x1];
        let mut s = 0.0;
        while xs.len() < n / 2 + 1 {
            let x = *xs.last().unwrap();
            s += 1.0 / x;
            if s <= 0.0 {
                return None;
            }
            let next = (x * x * x - 1.0 / s).cbrt();
            if !next.is_finite() || next >= x {
                return None;
            }
            xs.push(next);
        }
        Some(xs)
    };
    let mismatch = |x1: f64| match half(x1) {
        Some(xs) => xs[n / 2 - 1] + xs[n / 2],
        None => -1.0,
    };
    let spec = RootSpec {
        x_tol: 0.0,
        f_tol: 0.0,
        max_iter: 200,
    };
    let x1 = find_root(mismatch, 0.1, 10.0, &spec).unwrap();
    let mut pts = half(x1).unwrap();
    pts.truncate(n / 2);
    let mirrored: Vec<f64> = pts.iter().rev().map(|x| -x).collect();
    pts.extend(mirrored);
    pts
}

#[test]
fn unit_factor_rescaling() {
    for n in [4, 10, 22] {
        let y = unit_factor_solution(n);
        let x = solve_configuration(Family::Maxwell, None, n).unwrap();
        for (a, b) in x.points.iter().zip(&y) {
            assert!((a - 3f64.sqrt() * b).abs() <= 1e-10, "n={n}");
        }
    }
}

#[test]
fn telescoping_variance() {
    for n in [4, 22, 128] {
        let cfg = solve_configuration(Family::Maxwell, None, n).unwrap();
        let x = &cfg.points;
        let mut s = 0.0;
        let mut total = 0.0;
        for i in 0..n - 1 {
            s += 1.0 / x[i];
            total += s * (x[i].powi(3) - x[i + 1].powi(3));
        }
        assert!(
            (total - 3.0 * (n as f64 - 1.0)).abs() <= 1e-8,
            "n={n} total={total}"
        );
    }
}

#[test]
fn smallest_positive_point() {
    for n in [2, 8, 22, 64, 256] {
        let cfg = solve_configuration(Family::Maxwell, None, n).unwrap();
        assert!(cfg.points[n / 2 - 1] >= (3.0 / n as f64).sqrt());
    }
}

#[test]
fn growth_ratio_bounded() {
    let ratios: Vec<f64> = [8, 32, 128, 512]
        .iter()
        .map(|&n| {
            let cfg = solve_configuration(Family::Maxwell, None, n).unwrap();
            validate_properties(&cfg).growth_ratio.unwrap()
        })
        .collect();
    let max = ratios.iter().copied().fold(f64::MIN, f64::max);
    let min = ratios.iter().copied().fold(f64::MAX, f64::min);
    assert!(max / min < 3.0);
}

#[test]
fn ground_three_worlds() {
    let cfg = solve_configuration(Family::Ground, None, 3).unwrap();
    for (a, b) in cfg.points.iter().zip([1.0, 0.0, -1.0]) {
        assert!((a - b).abs() <= 1e-12);
    }
    let v: f64 = cfg.points.iter().map(|x| x * x).sum();
    assert!((v - 2.0).abs() < 1e-12);
}

#[test]
fn hermite_selection_among_census() {
    let bl = Baseline::new(BaselineFamily::HermiteSquare { k: 2 }).unwrap();
    let census = configuration_census(HERMITE2, &bl, 41).unwrap();
    assert!(census.len() > 1);
    let cfg = solve_configuration(HERMITE2, Some(&bl), 41).unwrap();
    check_invariants(&cfg);
    let score =
        |c: &Configuration| (c.points.iter().map(|x| x * x).sum::<f64>() / 40.0 - 5.0).abs();
    for other in &census {
        check_invariants(other);
        assert!(score(&cfg) <= score(other));
    }
    assert!(cfg.points.iter().all(|&x| bl.distance_to_zero(x) > 1e-8));
    // x B(x)/b(x) summed over any symmetric solution equals N - 1.
    for c in &census {
        assert!(validate_properties(c).variance_defect <= 1e-8);
    }
}

#[test]
fn shooting_reports_early_stop() {
    let s = shoot_sequence(Family::Maxwell, None, 0.5, 50).unwrap();
    assert!(s.points.len() < 50);
    assert!(matches!(
        s.termination,
        Termination::DenominatorVanished { .. } | Termination::NonDecreasing { .. }
    ));
}

#[test]
fn configuration_json_round_trip() {
    for (fam, n) in [(Family::Maxwell, 22), (Family::Ground, 7), (HERMITE2, 21)] {
        let cfg = solve_configuration(fam, None, n).unwrap();
        let s = serde_json::to_string(&cfg).unwrap();
        let back: Configuration = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        for key in ["family", "N", "points", "shoot_param", "residuals"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn parity_errors() {
    assert!(matches!(
        solve_configuration(Family::Maxwell, None, 21),
        Err(Error::ParityUnsupported { .. })
    ));
    assert!(matches!(
        solve_configuration(
            Family::General(BaselineFamily::HermiteSquare { k: 1 }),
            None,
            5
        ),
        Err(Error::ParityUnsupported { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn maxwell_solutions_satisfy_invariants(h in 1usize..150) {
        let cfg = solve_configuration(Family::Maxwell, None, 2 * h).unwrap();
        check_invariants(&cfg);
    }

    #[test]
    fn ground_solutions_satisfy_invariants(n in 2usize..200) {
        let cfg = solve_configuration(Family::Ground, None, n).unwrap();
        check_invariants(&cfg);
        let v: f64 = cfg.points.iter().map(|x| x * x).sum();
        prop_assert!((v - (n as f64 - 1.0)).abs() <= 1e-7 * n as f64);
    }

    #[test]
    fn monomial_solutions_satisfy_invariants(h in 1usize..60, r in prop::sample::select(vec![4u32, 6])) {
        let cfg = solve_configuration(Family::General(BaselineFamily::Monomial { r }), None, 2 * h)
            .unwrap();
        check_invariants(&cfg);
        let v: f64 = cfg.points.iter().map(|x| x * x).sum();
        let expected = (r as f64 + 1.0) * (2.0 * h as f64 - 1.0);
        prop_assert!((v - expected).abs() <= 1e-7 * expected);
    }

    #[test]
    fn nonpositive_start_rejected(x1 in -10.0f64..=0.0) {
        let r = shoot_sequence(Family::Ground, None, x1, 4);
        prop_assert!(
            matches!(r, Err(Error::InvalidStart { .. })),
            "expected InvalidStart, got {:?}",
            r
        );
    }
}

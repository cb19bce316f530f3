use miw_core::energy::{certify_minimizer, interworld_u, potential_v};
use miw_core::solver::{solve_configuration, Family};
use miw_core::targets::{Baseline, BaselineFamily};
use proptest::prelude::*;

fn maxwell() -> Baseline {
    Baseline::new(BaselineFamily::MaxwellSquare).unwrap()
}

#[test]
fn minimizer_identities() {
    for (n, v, h) in [(8, 21.0, 42.0), (22, 63.0, 126.0)] {
        let cfg = solve_configuration(Family::Maxwell, None, n).unwrap();
        let r = certify_minimizer(&maxwell(), &cfg.points).unwrap();
        assert!((r.v - v).abs() <= 1e-7);
        assert!((r.h - h).abs() <= 1e-6 * h);
        assert!(r.cauchy_schwarz_gap.unwrap().abs() <= 1e-4);
        assert_eq!(r.lower_bound, Some(h));
        assert_eq!(r.h, r.v + r.u);
    }
}

#[test]
fn ground_minimizer_identities() {
    for n in [3, 10, 31] {
        let cfg = solve_configuration(Family::Ground, None, n).unwrap();
        let g = Baseline::new(BaselineFamily::Ground).unwrap();
        let r = certify_minimizer(&g, &cfg.points).unwrap();
        let m = n as f64 - 1.0;
        assert!((r.h - 2.0 * m).abs() <= 1e-8 * m);
        assert!(r.cauchy_schwarz_gap.unwrap().abs() <= 1e-6);
    }
}

#[test]
fn perturbation_raises_energy() {
    let cfg = solve_configuration(Family::Maxwell, None, 8).unwrap();
    let base = certify_minimizer(&maxwell(), &cfg.points).unwrap().h;
    for i in 0..4 {
        for delta in [1e-2, -1e-2] {
            let mut p = cfg.points.clone();
            p[i] += delta;
            p[7 - i] -= delta;
            p.sort_by(|a, b| b.total_cmp(a));
            let h = certify_minimizer(&maxwell(), &p).unwrap().h;
            assert!(h > base, "i={i} delta={delta}");
        }
    }
    let mut p = cfg.points.clone();
    p[0] += 0.01;
    assert!(certify_minimizer(&maxwell(), &p).unwrap().h > 42.0);
}

#[test]
fn proportionality_at_minimizer() {
    let cfg = solve_configuration(Family::Maxwell, None, 22).unwrap();
    let x = &cfg.points;
    for n in 1..x.len() - 1 {
        let d_after = 1.0 / (x[n + 1].powi(3) - x[n].powi(3));
        let d_before = 1.0 / (x[n].powi(3) - x[n - 1].powi(3));
        let rhs = -3.0 * (d_after - d_before);
        assert!((1.0 / x[n] - rhs).abs() <= 1e-7, "n={n}");
    }
}

#[test]
fn energy_of_empty_configuration() {
    assert_eq!(potential_v(&[]), 0.0);
    assert_eq!(interworld_u(&maxwell(), &[]).unwrap(), 0.0);
}

fn symmetric_config() -> impl Strategy<Value = Vec<f64>> {
    (1usize..20)
        .prop_flat_map(|h| prop::collection::vec(0.05f64..3.0, h))
        .prop_map(symmetric_from_gaps)
}

// Symmetric configurations rescaled so that V lands in [1, 10N].
fn scaled_config() -> impl Strategy<Value = Vec<f64>> {
    (symmetric_config(), 0.0f64..=1.0).prop_map(|(pts, t)| {
        let n = pts.len() as f64;
        let target = 1.0 + t * (10.0 * n - 1.0);
        let s = (target / potential_v(&pts)).sqrt();
        pts.iter().map(|x| s * x).collect()
    })
}

fn symmetric_from_gaps(gaps: Vec<f64>) -> Vec<f64> {
    let mut half = Vec::new();
    let mut x = 0.0;
    for g in gaps.iter().rev() {
        x += g;
        half.push(x);
    }
    half.reverse();
    let mut pts = half.clone();
    pts.extend(half.iter().rev().map(|v| -v));
    pts
}

proptest! {
    #[test]
    fn lower_bound_never_violated(pts in scaled_config()) {
        let n = pts.len() as f64;
        let r = certify_minimizer(&maxwell(), &pts).unwrap();
        prop_assert!(r.h >= 6.0 * (n - 1.0) * (1.0 - 1e-12));
        prop_assert!(r.h >= 2.0 * (r.u * r.v).sqrt() * (1.0 - 1e-12));
        prop_assert!(r.cauchy_schwarz_gap.unwrap() >= -1e-8 * r.u * r.v);
    }

    #[test]
    fn ground_potential_scales(pts in symmetric_config(), c in 0.1f64..10.0) {
        let g = Baseline::new(BaselineFamily::Ground).unwrap();
        let u = interworld_u(&g, &pts).unwrap();
        let scaled: Vec<f64> = pts.iter().map(|x| c * x).collect();
        let us = interworld_u(&g, &scaled).unwrap();
        prop_assert!((us - u / (c * c)).abs() <= 1e-10 * (u / (c * c)).max(1.0));
    }
}

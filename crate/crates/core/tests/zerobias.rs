use miw_core::metrics::{rate_sweep, wasserstein_to_piecewise};
use miw_core::numerics::QuadratureSpec;
use miw_core::solver::{solve_configuration, Family};
use miw_core::targets::{Baseline, BaselineFamily};
use miw_core::zerobias::{
    coupling_expectations, fixed_point_defect, gzb_density, histogram_density, EmpiricalDist,
};
use proptest::prelude::*;

type RealFn = fn(f64) -> f64;
type Scaled = Box<dyn Fn(f64, &miw_core::metrics::RateRow) -> f64>;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

#[test]
fn one_over_n_minus_one_per_interval() {
    let cases = [
        (Family::Maxwell, 22),
        (Family::Maxwell, 256),
        (Family::Ground, 11),
        (Family::General(BaselineFamily::HermiteSquare { k: 2 }), 41),
        (Family::General(BaselineFamily::Monomial { r: 4 }), 30),
    ];
    for (fam, n) in cases {
        let bl = fam.baseline().unwrap();
        let cfg = solve_configuration(fam, Some(&bl), n).unwrap();
        let d = gzb_density(&bl, &cfg.points).unwrap();
        for &m in d.masses() {
            assert!(
                (m - 1.0 / (n as f64 - 1.0)).abs() <= 1e-10,
                "{fam} n={n} mass={m}"
            );
        }
        assert!((d.cdf(cfg.points[0]) - 1.0).abs() < 1e-12);
        assert_eq!(d.cdf(cfg.points[n - 1]), 0.0);
    }
}

#[test]
fn coupling_attains_wasserstein() {
    let bl = Baseline::new(BaselineFamily::MaxwellSquare).unwrap();
    for n in [2, 8, 22, 64] {
        let cfg = solve_configuration(Family::Maxwell, None, n).unwrap();
        let d = gzb_density(&bl, &cfg.points).unwrap();
        let r = coupling_expectations(&cfg.points, &d).unwrap();
        let emp = EmpiricalDist::new(&cfg.points).unwrap();
        let dw = wasserstein_to_piecewise(&emp, &d, &spec()).unwrap();
        assert!(
            (r.e_abs - dw).abs() <= 1e-9,
            "n={n} e_abs={} dw={dw}",
            r.e_abs
        );
    }
}

#[test]
fn coupling_bound_b1() {
    let bl = Baseline::new(BaselineFamily::MaxwellSquare).unwrap();
    for n in [8, 32, 128] {
        let cfg = solve_configuration(Family::Maxwell, None, n).unwrap();
        let d = gzb_density(&bl, &cfg.points).unwrap();
        let r = coupling_expectations(&cfg.points, &d).unwrap();
        assert!(r.e_abs <= 2.0 * cfg.points[0] / (n as f64 - 1.0));
        for v in [r.e_abs, r.e_wabs, r.e_inv, r.e_ratio] {
            assert!(v >= 0.0);
        }
        let rhs = 6.0 * r.e_abs + 7.0 * r.e_wabs + 18.0 * r.e_inv + 22.0 * r.e_ratio;
        assert_eq!(r.rhs_bound, rhs);
    }
}

#[test]
fn nonvanishing_baseline_makes_inverse_term_infinite() {
    let fam = Family::General(BaselineFamily::HermiteSquare { k: 2 });
    let bl = fam.baseline().unwrap();
    let cfg = solve_configuration(fam, Some(&bl), 40).unwrap();
    let d = gzb_density(&bl, &cfg.points).unwrap();
    let r = coupling_expectations(&cfg.points, &d).unwrap();
    assert!(r.e_inv.is_infinite());
    let emp = EmpiricalDist::new(&cfg.points).unwrap();
    let dw = wasserstein_to_piecewise(&emp, &d, &spec()).unwrap();
    assert!((r.e_abs - dw).abs() <= 1e-9);
}

// sigma^2 E[f'(W*)/b(W*)] = E[W f(W)/b(W)] with b = x^2, where
// E[f'(W*)/b(W*)] = sum_n c_n (f(x_n) - f(x_{n+1})).
#[test]
fn zero_bias_characterization() {
    let bl = Baseline::new(BaselineFamily::MaxwellSquare).unwrap();
    let fs: [(&str, RealFn); 3] = [("x", |x| x), ("x3", |x| x * x * x), ("sin", f64::sin)];
    for n in [4, 22, 100] {
        let cfg = solve_configuration(Family::Maxwell, None, n).unwrap();
        let x = &cfg.points;
        let d = gzb_density(&bl, x).unwrap();
        let nf = n as f64;
        let sigma2 = x
            .iter()
            .map(|&w| w * bl.eval_cumulative(w) / bl.eval_b(w))
            .sum::<f64>()
            / nf;
        assert!((sigma2 - (nf - 1.0) / nf).abs() <= 1e-12);
        for (name, f) in fs {
            let star: f64 = (0..n - 1)
                .map(|i| d.coeffs()[i] * (f(x[i]) - f(x[i + 1])))
                .sum();
            let plain = x.iter().map(|&w| f(w) / w).sum::<f64>() / nf;
            assert!(
                (sigma2 * star - plain).abs() <= 1e-7,
                "n={n} f={name}: {} vs {plain}",
                sigma2 * star
            );
            // With sigma^2 = 1 the defect is exactly E[W f(W)/b(W)] / (N - 1).
            assert!(((star - plain) - plain / (nf - 1.0)).abs() <= 1e-9);
        }
    }
}

#[test]
fn fixed_point_of_square_law() {
    assert!(fixed_point_defect(1, &spec()).unwrap() <= 1e-10);
}

#[test]
fn coupling_terms_follow_their_rates() {
    let ns: Vec<usize> = (3..=12).map(|k| 1usize << k).collect();
    let sweep = rate_sweep(Family::Maxwell, &ns, &spec()).unwrap();
    let scaled: [Scaled; 4] = [
        Box::new(|n, r| r.e_abs * n / n.ln().sqrt()),
        Box::new(|n, r| r.e_wabs * n / n.ln()),
        Box::new(|n, r| r.e_inv * n.sqrt()),
        Box::new(|n, r| r.e_ratio * (n / n.ln()).sqrt()),
    ];
    for (i, s) in scaled.iter().enumerate() {
        let vals: Vec<f64> = sweep.rows.iter().map(|r| s(r.n as f64, r)).collect();
        let max = vals.iter().copied().fold(0.0, f64::max);
        assert!(
            max.is_finite() && max <= 2.0 * vals[0],
            "term {i}: {vals:?}"
        );
    }
}

#[test]
fn empirical_quantile_inverts_cdf() {
    let e = EmpiricalDist::new(&[3.0, 1.0, 1.0, -0.5, -4.0]).unwrap();
    for &a in e.atoms() {
        assert_eq!(e.quantile(e.cdf(a)), a);
    }
    assert_eq!(e.cdf(3.0), 1.0);
}

proptest! {
    #[test]
    fn histogram_is_a_distribution(gaps in prop::collection::vec(0.01f64..2.0, 1..30)) {
        let mut atoms = vec![0.0];
        for g in &gaps {
            atoms.push(atoms.last().unwrap() - g);
        }
        let h = histogram_density(&atoms).unwrap();
        prop_assert!((h.total_mass() - 1.0).abs() < 1e-12);
        for w in atoms.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            prop_assert!(h.density(mid) > 0.0);
        }
        prop_assert_eq!(h.density(atoms[0] + 1.0), 0.0);
    }

    #[test]
    fn gzb_density_is_a_distribution(half in prop::collection::vec(0.05f64..2.0, 1..15)) {
        let mut pos = Vec::new();
        let mut x = 0.0;
        for g in half.iter() {
            x += g;
            pos.push(x);
        }
        pos.reverse();
        let mut atoms = pos.clone();
        atoms.extend(pos.iter().rev().map(|v| -v));
        let bl = Baseline::new(BaselineFamily::MaxwellSquare).unwrap();
        let d = gzb_density(&bl, &atoms).unwrap();
        prop_assert!((d.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(d.masses().iter().all(|&m| m >= 0.0));
        let r = coupling_expectations(&atoms, &d).unwrap();
        prop_assert!(r.e_abs >= 0.0 && r.e_wabs >= 0.0 && r.e_inv >= 0.0 && r.e_ratio >= 0.0);
    }
}

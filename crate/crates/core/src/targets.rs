//! Baseline functions `b`, their cumulatives `B`, and the densities
//! `p(x) = b(x) phi(x) / Z` they induce, together with Stein kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    integrate_adaptive, invert_monotone_newton, normal_cdf, normal_pdf, QuadratureSpec, RootSpec,
    SQRT_2PI,
};
use crate::poly::Polynomial;

pub const MAX_ORDER: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaselineFamily {
    Ground,
    MaxwellSquare,
    Monomial { r: u32 },
    HermiteSquare { k: u32 },
}

impl std::fmt::Display for BaselineFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaselineFamily::Ground => write!(f, "ground"),
            BaselineFamily::MaxwellSquare => write!(f, "maxwell-square"),
            BaselineFamily::Monomial { r } => write!(f, "monomial:{r}"),
            BaselineFamily::HermiteSquare { k } => write!(f, "hermite-square:{k}"),
        }
    }
}

impl std::str::FromStr for BaselineFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unknown baseline '{s}'"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a.parse::<u32>().map_err(|_| bad())?)),
            None => (s, None),
        };
        match (name, arg) {
            ("ground", None) => Ok(BaselineFamily::Ground),
            ("maxwell-square", None) => Ok(BaselineFamily::MaxwellSquare),
            ("monomial", Some(r)) => Ok(BaselineFamily::Monomial { r }),
            ("hermite-square", Some(k)) => Ok(BaselineFamily::HermiteSquare { k }),
            _ => Err(bad()),
        }
    }
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

fn he(k: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn check_order(k: u32) -> Result<()> {
    if k > MAX_ORDER {
        Err(Error::UnsupportedOrder { k, max: MAX_ORDER })
    } else {
        Ok(())
    }
}

/// Probabilist's Hermite polynomial `He_k(x)`.
pub fn hermite_he(k: u32, x: f64) -> Result<f64> {
    check_order(k)?;
    Ok(he(k, x))
}

fn hermite_poly(k: u32) -> Polynomial {
    let mut prev = Polynomial::constant(1.0);
    if k == 0 {
        return prev;
    }
    let mut cur = Polynomial::monomial(1, 1.0);
    for j in 1..k {
        let next = cur
            .mul(&Polynomial::monomial(1, 1.0))
            .add(&prev.scale(-(j as f64)));
        prev = cur;
        cur = next;
    }
    cur
}

fn hermite_roots(k: u32) -> Vec<f64> {
    if k == 0 {
        return Vec::new();
    }
    let reach = (4.0 * k as f64 + 2.0).sqrt() + 1.0;
    let steps = 4000;
    let spec = RootSpec {
        f_tol: 0.0,
        ..Default::default()
    };
    let mut roots = Vec::new();
    let mut prev_x = -reach;
    let mut prev_v = he(k, prev_x);
    for i in 1..=steps {
        let x = -reach + 2.0 * reach * i as f64 / steps as f64;
        let v = he(k, x);
        if v == 0.0 {
            roots.push(x);
        } else if prev_v != 0.0 && v.signum() != prev_v.signum() {
            let r = crate::numerics::find_root(|t| he(k, t), prev_x, x, &spec)
                .expect("sign change brackets a root");
            roots.push(r);
        }
        prev_x = x;
        prev_v = v;
    }
    // Odd orders have an exact root at the origin.
    if k % 2 == 1 {
        for r in roots.iter_mut() {
            if r.abs() < 1e-12 {
                *r = 0.0;
            }
        }
    }
    roots
}

/// Even, nonnegative polynomial baseline `b` with cumulative `B(x) = int_0^x b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    family: BaselineFamily,
    b: Polynomial,
    db: Polynomial,
    cumulative: Polynomial,
    zeros: Vec<f64>,
    phi_mass: f64,
    second_moment: f64,
}

impl Baseline {
    pub fn new(family: BaselineFamily) -> Result<Self> {
        let (b, zeros) = match family {
            BaselineFamily::Ground => (Polynomial::constant(1.0), Vec::new()),
            BaselineFamily::MaxwellSquare => (Polynomial::monomial(2, 1.0), vec![0.0]),
            BaselineFamily::Monomial { r } => {
                check_order(r)?;
                if r % 2 == 1 {
                    return Err(Error::InvalidInput(format!(
                        "monomial baseline needs an even power, got {r}"
                    )));
                }
                let zeros = if r == 0 { Vec::new() } else { vec![0.0] };
                (Polynomial::monomial(r as usize, 1.0), zeros)
            }
            BaselineFamily::HermiteSquare { k } => {
                check_order(k)?;
                let h = hermite_poly(k);
                (h.mul(&h).scale(1.0 / factorial(k)), hermite_roots(k))
            }
        };
        let phi_mass = b.gaussian_mean();
        let second_moment = b.mul(&Polynomial::monomial(2, 1.0)).gaussian_mean() / phi_mass;
        let bl = Self {
            family,
            db: b.derivative(),
            cumulative: b.antiderivative(),
            b,
            zeros,
            phi_mass,
            second_moment,
        };
        let spec = QuadratureSpec::default();
        let c = spec.tail_cutoff;
        let check = integrate_adaptive(|x| bl.eval_b(x) * normal_pdf(x), -c, c, &spec)?;
        if (check - phi_mass).abs() > 1e-8 * phi_mass.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "baseline {family} normalization check failed: {check} vs {phi_mass}"
            )));
        }
        Ok(bl)
    }

    pub fn family(&self) -> BaselineFamily {
        self.family
    }

    pub fn eval_b(&self, x: f64) -> f64 {
        match self.family {
            BaselineFamily::HermiteSquare { k } => {
                let h = he(k, x);
                h * h / factorial(k)
            }
            _ => self.b.eval(x),
        }
    }

    pub fn eval_db(&self, x: f64) -> f64 {
        match self.family {
            BaselineFamily::HermiteSquare { k } if k >= 1 => {
                2.0 * k as f64 * he(k, x) * he(k - 1, x) / factorial(k)
            }
            _ => self.db.eval(x),
        }
    }

    pub fn eval_cumulative(&self, x: f64) -> f64 {
        self.cumulative.eval(x)
    }

    /// Inverse of the strictly increasing cumulative `B`.
    pub fn eval_cumulative_inv(&self, y: f64) -> f64 {
        match self.family {
            BaselineFamily::Ground => y,
            BaselineFamily::MaxwellSquare => (3.0 * y).cbrt(),
            BaselineFamily::Monomial { r } => {
                let p = (r + 1) as f64;
                (p * y.abs()).powf(1.0 / p).copysign(y)
            }
            BaselineFamily::HermiteSquare { .. } => {
                if y == 0.0 {
                    return 0.0;
                }
                let target = y.abs();
                let mut hi = 1.0;
                while self.eval_cumulative(hi) < target {
                    hi *= 2.0;
                }
                let x = invert_monotone_newton(
                    |t| self.eval_cumulative(t),
                    |t| self.eval_b(t),
                    target,
                    0.0,
                    hi,
                    &RootSpec::default(),
                )
                .expect("cumulative is increasing with B(0) = 0 <= target <= B(hi)");
                x.copysign(y)
            }
        }
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    /// Polynomial coefficients of `b`.
    pub fn b_poly(&self) -> &Polynomial {
        &self.b
    }

    /// `int b phi`, the normalizing constant of the induced density.
    pub fn phi_mass(&self) -> f64 {
        self.phi_mass
    }

    /// Second moment of the induced density `b phi / Z`.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn normalized_b(&self, x: f64) -> f64 {
        self.eval_b(x) / self.phi_mass
    }

    pub fn normalized_db(&self, x: f64) -> f64 {
        self.eval_db(x) / self.phi_mass
    }

    /// True when `b` has a zero at some `x != 0`.
    pub fn has_off_origin_zeros(&self) -> bool {
        self.zeros.iter().any(|&z| z != 0.0)
    }

    pub fn vanishes_at_origin(&self) -> bool {
        self.zeros.contains(&0.0)
    }

    /// Distance from `x` to the nearest zero of `b`.
    pub fn distance_to_zero(&self, x: f64) -> f64 {
        self.zeros
            .iter()
            .map(|z| (x - z).abs())
            .fold(f64::INFINITY, f64::min)
    }

    fn is_square_law(&self) -> bool {
        matches!(
            self.family,
            BaselineFamily::MaxwellSquare
                | BaselineFamily::Monomial { r: 2 }
                | BaselineFamily::HermiteSquare { k: 1 }
        )
    }

    fn is_gaussian(&self) -> bool {
        matches!(
            self.family,
            BaselineFamily::Ground
                | BaselineFamily::Monomial { r: 0 }
                | BaselineFamily::HermiteSquare { k: 0 }
        )
    }
}

/// Density `p(x) = b(x) phi(x) / int b phi` of a baseline.
#[derive(Debug, Clone)]
pub struct TargetDensity {
    baseline: Baseline,
    mode_sup: f64,
    spec: QuadratureSpec,
}

impl TargetDensity {
    pub fn new(baseline: Baseline) -> Self {
        let mode_sup = if baseline.is_gaussian() {
            1.0 / SQRT_2PI
        } else if baseline.is_square_law() {
            2.0 * (-1.0f64).exp() / SQRT_2PI
        } else {
            locate_sup(|x| baseline.normalized_b(x) * normal_pdf(x))
        };
        Self {
            baseline,
            mode_sup,
            spec: QuadratureSpec::default(),
        }
    }

    /// `p_k = He_k^2 phi / k!`.
    pub fn hermite(k: u32) -> Result<Self> {
        Ok(Self::new(Baseline::new(BaselineFamily::HermiteSquare {
            k,
        })?))
    }

    pub fn with_spec(mut self, spec: QuadratureSpec) -> Self {
        self.spec = spec;
        self
    }

    pub fn baseline(&self) -> &Baseline {
        &self.baseline
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.baseline.normalized_b(x) * normal_pdf(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.baseline.is_gaussian() {
            return normal_cdf(x);
        }
        if self.baseline.is_square_law() {
            return normal_cdf(x) - x * normal_pdf(x);
        }
        self.cdf_by_quadrature(x)
    }

    fn cdf_by_quadrature(&self, x: f64) -> f64 {
        let c = self.spec.tail_cutoff;
        let f = |t: f64| self.pdf(t);
        let v = if x <= -c {
            0.0
        } else if x >= c {
            1.0
        } else if x < 0.0 {
            self.integrate_split(f, -c, x)
        } else {
            0.5 + self.integrate_split(f, 0.0, x)
        };
        v.clamp(0.0, 1.0)
    }

    // Splits at the zeros of b so that each panel carries a single bump.
    fn integrate_split<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let mut pts = vec![a];
        pts.extend(
            self.baseline
                .zeros()
                .iter()
                .copied()
                .filter(|&z| z > a && z < b),
        );
        pts.push(b);
        crate::numerics::integrate_panels(f, &pts, &self.spec)
            .expect("smooth Gaussian-weighted integrand on a finite interval")
    }

    /// Supremum of the density.
    pub fn mode_sup(&self) -> f64 {
        self.mode_sup
    }
}

fn locate_sup<F: Fn(f64) -> f64>(f: F) -> f64 {
    let step = 1e-3;
    let (mut best_x, mut best) = (0.0, f(0.0));
    for i in 1..=12_000 {
        let x = i as f64 * step;
        let v = f(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    // Golden-section refinement around the grid maximum.
    let (mut a, mut b) = ((best_x - step).max(0.0), best_x + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

pub fn pdf_pk(k: u32, x: f64) -> Result<f64> {
    check_order(k)?;
    let h = he(k, x);
    Ok(h * h * normal_pdf(x) / factorial(k))
}

pub fn cdf_pk(k: u32, x: f64) -> Result<f64> {
    check_order(k)?;
    if k == 1 {
        return Ok(normal_cdf(x) - x * normal_pdf(x));
    }
    Ok(TargetDensity::hermite(k)?.cdf_by_quadrature(x))
}

/// Closed-form Stein kernels of `p_1`, `p_2`, `p_3`.
pub fn stein_kernel_tau(k: u32, x: f64) -> Result<f64> {
    let (num, den) = tau_parts(k, x)?;
    if den == 0.0 {
        return Err(Error::KernelSingularity { k, x });
    }
    Ok(num / den)
}

fn tau_parts(k: u32, x: f64) -> Result<(f64, f64)> {
    let x2 = x * x;
    match k {
        1 => Ok((x2 + 2.0, x2)),
        2 => Ok((x2 * x2 + 2.0 * x2 + 5.0, (x2 - 1.0) * (x2 - 1.0))),
        3 => {
            let h = x2 * x - 3.0 * x;
            Ok((x2 * x2 * x2 + 9.0 * x2 + 18.0, h * h))
        }
        _ => Err(Error::UnsupportedOrder { k, max: 3 }),
    }
}

/// `tau_k(x) p_k(x)`, which stays smooth across the zeros of `b`.
pub fn tau_times_pdf(k: u32, x: f64) -> Result<f64> {
    let (num, _) = tau_parts(k, x)?;
    Ok(num * normal_pdf(x) / factorial(k))
}

/// `phi(x)^{-1} int_x^inf h(u) phi(u) du`, the Gaussian inverse Stein operator.
pub fn inverse_stein_operator<H: Fn(f64) -> f64>(
    h: H,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let upper = if x >= 0.0 {
        x + spec.tail_cutoff
    } else {
        spec.tail_cutoff
    };
    integrate_adaptive(
        |u| {
            let w = (0.5 * (x - u) * (x + u)).exp();
            if w == 0.0 {
                0.0
            } else {
                h(u) * w
            }
        },
        x,
        upper,
        spec,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    /// Set when `b(x) = 0` and the ratio was replaced by zero.
    pub singular: bool,
}

/// `1 + (inverse Stein operator of b')(x) / b(x)` for a normalized baseline.
pub fn kernel_from_baseline(bl: &Baseline, x: f64, spec: &QuadratureSpec) -> Result<KernelValue> {
    let ax = x.abs();
    let b = bl.normalized_b(ax);
    if b == 0.0 {
        return Ok(KernelValue {
            value: 1.0,
            singular: true,
        });
    }
    let ratio = inverse_stein_operator(|u| bl.normalized_db(u), ax, spec)? / b;
    Ok(KernelValue {
        value: 1.0 + ratio,
        singular: false,
    })
}

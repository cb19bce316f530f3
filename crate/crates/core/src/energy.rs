use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::targets::{Baseline, BaselineFamily};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "H")]
    pub h: f64,
    /// `U V - 9(N-1)^2` for the square law, `U V - (N-1)^2` for the ground state.
    pub cauchy_schwarz_gap: Option<f64>,
    pub lower_bound: Option<f64>,
}

/// Parabolic-trap potential `sum x_n^2`.
pub fn potential_v(points: &[f64]) -> f64 {
    points.iter().map(|x| x * x).sum()
}

/// Interworld potential built from reciprocal gaps of `B`, with the two
/// boundary reciprocals equal to zero.
pub fn interworld_u(baseline: &Baseline, points: &[f64]) -> Result<f64> {
    if let Some(i) = points.windows(2).position(|w| !(w[0] > w[1])) {
        return Err(Error::NotDecreasing { index: i + 1 });
    }
    let bs: Vec<f64> = points.iter().map(|&x| baseline.eval_b(x)).collect();
    if let Some(index) = bs.iter().position(|&b| !(b > 0.0)) {
        return Err(Error::BaselineZero {
            index,
            x: points[index],
        });
    }
    let cum: Vec<f64> = points
        .iter()
        .map(|&x| baseline.eval_cumulative(x))
        .collect();
    let n = points.len();
    // recip[i] = 1 / (B(x_{i+1}) - B(x_i)) for the gap after point i.
    let recip: Vec<f64> = cum.windows(2).map(|w| 1.0 / (w[1] - w[0])).collect();
    let mut u = 0.0;
    for i in 0..n {
        let after = if i + 1 < n { recip[i] } else { 0.0 };
        let before = if i > 0 { recip[i - 1] } else { 0.0 };
        let d = (after - before) * bs[i];
        u += d * d;
    }
    Ok(u)
}

/// Energies of a configuration and, for the ground and square-law
/// baselines, the Cauchy-Schwarz certificate of minimality.
pub fn certify_minimizer(baseline: &Baseline, points: &[f64]) -> Result<EnergyReport> {
    let u = interworld_u(baseline, points)?;
    let v = potential_v(points);
    let m = points.len() as f64 - 1.0;
    let constants = match baseline.family() {
        BaselineFamily::Ground | BaselineFamily::Monomial { r: 0 } => Some((m * m, 2.0 * m)),
        BaselineFamily::MaxwellSquare | BaselineFamily::Monomial { r: 2 } => {
            Some((9.0 * m * m, 6.0 * m))
        }
        _ => None,
    };
    Ok(EnergyReport {
        v,
        u,
        h: v + u,
        cauchy_schwarz_gap: constants.map(|(c, _)| u * v - c),
        lower_bound: constants.map(|(_, lb)| lb),
    })
}

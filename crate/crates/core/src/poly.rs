use serde::{Deserialize, Serialize};

/// Dense real polynomial, coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn monomial(degree: usize, c: f64) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(0.0);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + 1];
        for (j, &c) in self.coeffs.iter().enumerate() {
            out[j + 1] = c / (j + 1) as f64;
        }
        Self::new(out)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|j| {
                    self.coeffs.get(j).copied().unwrap_or(0.0)
                        + other.coeffs.get(j).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    /// The polynomial `y -> p(y + a)`.
    pub fn shift(&self, a: f64) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                c[j] += a * c[j + 1];
            }
        }
        Self::new(c)
    }

    /// Exact integral over `[a, b]`, expanded about `a` to limit cancellation.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        self.shift(a).antiderivative().eval(b - a)
    }

    /// Gaussian expectation `E[p(Z)]` for standard normal `Z`.
    pub fn gaussian_mean(&self) -> f64 {
        let mut moment = 1.0;
        let mut total = 0.0;
        for (j, &c) in self.coeffs.iter().enumerate() {
            if j % 2 == 0 {
                if j >= 2 {
                    moment *= (j - 1) as f64;
                }
                total += c * moment;
            }
        }
        total
    }
}

use std::fmt;

use super::TAU_CLEAN;

/// Dense univariate polynomial, coefficients in ascending degree.
///
/// Coefficients at or below `TAU_CLEAN` times the largest magnitude are
/// zeroed on construction and trailing zeros trimmed, so the leading
/// coefficient is nonzero unless the polynomial is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly {
    coeffs: Vec<f64>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let thresh = TAU_CLEAN * max;
        for c in coeffs.iter_mut() {
            if c.abs() <= thresh {
                *c = 0.0;
            }
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// `lead * prod (t - r)`.
    pub fn from_roots(roots: &[f64], lead: f64) -> Self {
        let mut c = vec![lead];
        for &r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (k, &a) in c.iter().enumerate() {
                next[k] -= a * r;
                next[k + 1] += a;
            }
            c = next;
        }
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// `sum |c_k| |t|^k`, the natural error scale for evaluation at `t`.
    pub fn abs_scale(&self, t: f64) -> f64 {
        let t = t.abs();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * t + c.abs())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// k-th derivative without re-cleaning in between.
    pub fn nth_derivative(&self, k: usize) -> Self {
        if k >= self.coeffs.len() {
            return Self::zero();
        }
        let out = (k..self.coeffs.len())
            .map(|i| {
                let falling: f64 = ((i - k + 1)..=i).map(|j| j as f64).product();
                self.coeffs[i] * falling
            })
            .collect();
        Self::new(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&0.0) + other.coeffs.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Coefficients of `q(t + a)` (Taylor shift), without cleaning.
    pub fn shifted_coeffs(&self, a: f64) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                c[j] += a * c[j + 1];
            }
        }
        c
    }

    /// Copy scaled so the largest coefficient magnitude is 1, with the factor removed.
    pub fn normalized(&self) -> (Self, f64) {
        let m = self.max_abs_coeff();
        if m == 0.0 {
            return (Self::zero(), 0.0);
        }
        (
            Self {
                coeffs: self.coeffs.iter().map(|c| c / m).collect(),
            },
            m,
        )
    }

    /// Coefficientwise relative distance, scaled by the larger max coefficient.
    pub fn rel_distance(&self, other: &Self) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        let scale = self
            .max_abs_coeff()
            .max(other.max_abs_coeff())
            .max(f64::MIN_POSITIVE);
        (0..n)
            .map(|k| {
                (self.coeffs.get(k).unwrap_or(&0.0) - other.coeffs.get(k).unwrap_or(&0.0)).abs()
            })
            .fold(0.0, f64::max)
            / scale
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*t")?,
                _ => write!(f, "{c}*t^{k}")?,
            }
        }
        Ok(())
    }
}

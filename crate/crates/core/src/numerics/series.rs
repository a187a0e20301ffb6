//! Truncated power series in one variable with complex coefficients.

use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

/// Coefficients `c[k]` of `sum c[k] x^k`, truncated at a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series(pub Vec<Complex64>);

impl Series {
    pub fn zero(order: usize) -> Self {
        Series(vec![Complex64::new(0.0, 0.0); order + 1])
    }

    pub fn constant(c: Complex64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.0[0] = c;
        s
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    /// `(a + x)^k` for real `a > 0` and integer `k`, via the binomial series.
    pub fn shifted_power(a: f64, k: i32, order: usize) -> Self {
        let mut s = Self::zero(order);
        let mut coef = a.powi(k);
        for j in 0..=order {
            s.0[j] = Complex64::new(coef, 0.0);
            coef *= (k as f64 - j as f64) / ((j + 1) as f64) / a;
        }
        s
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Series(self.0.iter().map(|v| v * c).collect())
    }

    /// Formal derivative, keeping the truncation order.
    pub fn derivative(&self) -> Self {
        let n = self.order();
        let mut out = Self::zero(n);
        for k in 1..=n {
            out.0[k - 1] = self.0[k] * k as f64;
        }
        out
    }

    /// Drop the leading `m` coefficients (division by `x^m`); the caller
    /// guarantees they vanish.
    pub fn shift_down(&self, m: usize) -> Self {
        let n = self.order();
        let mut out = Self::zero(n);
        for k in m..=n {
            out.0[k - m] = self.0[k];
        }
        out
    }

    /// Multiplicative inverse; the constant term must be nonzero.
    pub fn recip(&self) -> Self {
        let n = self.order();
        let mut out = Self::zero(n);
        out.0[0] = self.0[0].inv();
        for k in 1..=n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.0[j] * out.0[k - j];
            }
            out.0[k] = -acc * out.0[0];
        }
        out
    }

    /// Substitutes `x -> -x`.
    pub fn reflect(&self) -> Self {
        Series(self.0.iter().enumerate().map(|(k, c)| if k % 2 == 1 { -c } else { *c }).collect())
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, o: &Series) -> Series {
        Series(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, o: &Series) -> Series {
        Series(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, o: &Series) -> Series {
        let n = self.order().min(o.order());
        let mut out = Series::zero(n);
        for i in 0..=n {
            if self.0[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..=(n - i) {
                out.0[i + j] += self.0[i] * o.0[j];
            }
        }
        out
    }
}

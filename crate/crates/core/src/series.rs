//! Truncated power series with complex coefficients.
//!
//! A series is stored as its coefficient vector `c[0] + c[1] u + ... + c[n] u^n`
//! and every operation truncates at the requested degree.

use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub coeffs: Vec<C64>,
}

impl Series {
    pub fn zero(degree: usize) -> Self {
        Self { coeffs: vec![C64::new(0.0, 0.0); degree + 1] }
    }

    pub fn from_coeffs(mut coeffs: Vec<C64>, degree: usize) -> Self {
        coeffs.resize(degree + 1, C64::new(0.0, 0.0));
        Self { coeffs }
    }

    /// The series `u`.
    pub fn identity(degree: usize) -> Self {
        let mut s = Self::zero(degree);
        if degree >= 1 {
            s.coeffs[1] = C64::new(1.0, 0.0);
        }
        s
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> C64 {
        self.coeffs.get(n).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn add(&self, other: &Series) -> Series {
        let d = self.degree().min(other.degree());
        Series { coeffs: (0..=d).map(|n| self.coeffs[n] + other.coeffs[n]).collect() }
    }

    pub fn scale(&self, s: C64) -> Series {
        Series { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn mul(&self, other: &Series) -> Series {
        let d = self.degree().min(other.degree());
        let mut out = vec![C64::new(0.0, 0.0); d + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(d + 1) {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(d + 1 - i) {
                out[i + j] += a * b;
            }
        }
        Series { coeffs: out }
    }

    /// `self ∘ inner`, where `inner` has no constant term.
    pub fn compose(&self, inner: &Series) -> Series {
        debug_assert!(inner.coeff(0).norm() == 0.0, "inner series must vanish at 0");
        let d = self.degree().min(inner.degree());
        let inner = Series::from_coeffs(inner.coeffs[..=d].to_vec(), d);
        // Horner evaluation in the ring of truncated series.
        let mut acc = Series::zero(d);
        for c in self.coeffs[..=d].iter().rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] += c;
        }
        acc
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn reciprocal(&self) -> Series {
        let d = self.degree();
        let a0 = self.coeffs[0];
        let mut out = vec![C64::new(0.0, 0.0); d + 1];
        out[0] = 1.0 / a0;
        for n in 1..=d {
            let mut s = C64::new(0.0, 0.0);
            for k in 1..=n {
                s += self.coeffs[k] * out[n - k];
            }
            out[n] = -s / a0;
        }
        Series { coeffs: out }
    }

    /// `log(1 + h)` for a series `h` without constant term.
    pub fn log1p(h: &Series) -> Series {
        let d = h.degree();
        let one_plus = {
            let mut s = h.clone();
            s.coeffs[0] += 1.0;
            s
        };
        // d/du log(1+h) = h' / (1+h)
        let quotient = h.derivative().mul(&one_plus.reciprocal());
        let mut out = vec![C64::new(0.0, 0.0); d + 1];
        for n in 1..=d {
            out[n] = quotient.coeff(n - 1) / n as f64;
        }
        Series { coeffs: out }
    }

    /// `exp(g)` for a series `g` without constant term.
    pub fn exp0(g: &Series) -> Series {
        let d = g.degree();
        let mut out = vec![C64::new(0.0, 0.0); d + 1];
        out[0] = C64::new(1.0, 0.0);
        // e' = g' e, so n e_n = sum_{k=1}^n k g_k e_{n-k}
        for n in 1..=d {
            let mut s = C64::new(0.0, 0.0);
            for k in 1..=n {
                s += g.coeffs[k] * (k as f64) * out[n - k];
            }
            out[n] = s / n as f64;
        }
        Series { coeffs: out }
    }

    /// `(1 + h)^k` for any integer `k`.
    pub fn one_plus_pow(h: &Series, k: i64) -> Series {
        Series::exp0(&Series::log1p(h).scale(C64::new(k as f64, 0.0)))
    }

    pub fn derivative(&self) -> Series {
        let d = self.degree();
        let mut out = vec![C64::new(0.0, 0.0); d.max(1)];
        for n in 1..=d {
            out[n - 1] = self.coeffs[n] * n as f64;
        }
        Series { coeffs: out }
    }

    pub fn eval(&self, u: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * u + c)
    }

    /// Value and first derivative at `u`.
    pub fn eval_with_derivative(&self, u: C64) -> (C64, C64) {
        let mut v = C64::new(0.0, 0.0);
        let mut dv = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            dv = dv * u + v;
            v = v * u + c;
        }
        (v, dv)
    }
}

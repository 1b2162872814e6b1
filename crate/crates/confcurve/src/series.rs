//! Truncated power series with exact rational coefficients.
//!
//! Orders stay small (<= 12), so the naive convolution forms are fine.
//! All arithmetic is exact; a float view exists only for rate checks.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Coefficients c_0..c_K of a series truncated at order `K = coeffs.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<BigRational>,
}

impl TruncatedSeries {
    pub fn zero(order: usize) -> Self {
        TruncatedSeries { coeffs: vec![BigRational::zero(); order + 1] }
    }

    /// Build from c_0..c_K in ascending order.
    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        assert!(!coeffs.is_empty());
        TruncatedSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn set_coeff(&mut self, k: usize, c: BigRational) {
        assert!(k < self.coeffs.len());
        self.coeffs[k] = c;
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut out = Self::zero(order);
        for k in 0..=order {
            out.coeffs[k] = self.coeff(k) + other.coeff(k);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut out = Self::zero(order);
        for k in 0..=order {
            out.coeffs[k] = self.coeff(k) - other.coeff(k);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut out = Self::zero(order);
        for i in 0..=order {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=order - i {
                if other.coeffs[j].is_zero() {
                    continue;
                }
                let prod = &self.coeffs[i] * &other.coeffs[j];
                out.coeffs[i + j] += prod;
            }
        }
        out
    }

    /// Compose `self(inner(x))`; the inner series must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if !inner.coeff(0).is_zero() {
            return Err(Error::Invalid("composition requires inner series with zero constant term".into()));
        }
        let order = self.order().min(inner.order());
        let mut out = Self::zero(order);
        out.coeffs[0] = self.coeff(0);
        // Horner over inner powers: accumulate inner^k lazily
        let mut power = Self::zero(order);
        power.coeffs[0] = BigRational::from_integer(1.into());
        for k in 1..=self.order() {
            power = power.mul(inner);
            if power.coeffs.iter().all(|c| c.is_zero()) {
                break;
            }
            let ck = self.coeff(k);
            if ck.is_zero() {
                continue;
            }
            for j in 0..=order {
                let term = &ck * &power.coeffs[j];
                out.coeffs[j] += term;
            }
        }
        Ok(out)
    }

    /// Evaluate in f64 at `x` (for rate checks only; exactness lives in the coefficients).
    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }
}

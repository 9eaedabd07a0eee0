//! Exact fractions, arbitrary-precision reals and the handful of special
//! functions the rest of the crate needs.

mod rational;
mod real;

pub use rational::{binomial_half, binomial_half_row, factorial, falling_factorial, ExactRational};
pub use real::{bits_for_digits, parse_decimal, Real, GUARD_BITS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_WORKING_DIGITS: u32 = 300;
pub const DEFAULT_OUTPUT_DIGITS: u32 = 25;
/// Minimum gap between working and output precision.
pub const GUARD_DIGITS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cannot parse number {0:?}")]
    Parse(String),
    #[error(
        "working precision {working} leaves fewer than {GUARD_DIGITS} guard digits over output precision {output}"
    )]
    InsufficientGuard { working: u32, output: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionContext {
    working_digits: u32,
    output_digits: u32,
}

impl PrecisionContext {
    pub fn new(working_digits: u32, output_digits: u32) -> Result<Self, NumericsError> {
        if output_digits == 0 || working_digits < output_digits + GUARD_DIGITS {
            return Err(NumericsError::InsufficientGuard {
                working: working_digits,
                output: output_digits,
            });
        }
        Ok(PrecisionContext {
            working_digits,
            output_digits,
        })
    }

    pub fn working_digits(&self) -> u32 {
        self.working_digits
    }

    pub fn output_digits(&self) -> u32 {
        self.output_digits
    }

    pub fn real(&self, v: i64) -> Real {
        Real::from_i64(v, self.working_digits)
    }

    pub fn parse(&self, s: &str) -> Result<Real, NumericsError> {
        Real::parse(s, self.working_digits)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext {
            working_digits: DEFAULT_WORKING_DIGITS,
            output_digits: DEFAULT_OUTPUT_DIGITS,
        }
    }
}

/// `x^(p/q)` for `x > 0`.
pub fn pow_rational_exponent(x: &Real, p: i64, q: u32) -> Result<Real, NumericsError> {
    if !x.is_positive() {
        return Err(NumericsError::Domain(format!(
            "x^(p/q) needs x > 0, got {}",
            x.format_sig(12)
        )));
    }
    if q == 0 {
        return Err(NumericsError::Domain("zero exponent denominator".into()));
    }
    let digits = x.digits();
    let inner = x.with_digits(digits + 6);
    let root = inner.nth_root(q)?;
    Ok(root.powi(p).with_digits(digits))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone)]
pub struct CompensatedSum {
    sum: Real,
    carry: Real,
}

impl CompensatedSum {
    pub fn new(digits: u32) -> Self {
        CompensatedSum {
            sum: Real::zero(digits),
            carry: Real::zero(digits),
        }
    }

    pub fn add(&mut self, x: &Real) {
        let t = &self.sum + x;
        let c = if self.sum.abs() >= x.abs() {
            &(&self.sum - &t) + x
        } else {
            &(x - &t) + &self.sum
        };
        self.carry = &self.carry + &c;
        self.sum = t;
    }

    pub fn total(&self) -> Real {
        &self.sum + &self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_digit_rule() {
        assert!(PrecisionContext::new(45, 25).is_ok());
        assert!(PrecisionContext::new(44, 25).is_err());
        let d = PrecisionContext::default();
        assert_eq!((d.working_digits(), d.output_digits()), (300, 25));
    }

    #[test]
    fn pow_examples() {
        let ctx = PrecisionContext::default();
        let two = pow_rational_exponent(&ctx.real(8), 1, 3).unwrap();
        assert_eq!(two, ctx.real(2));
        let one = pow_rational_exponent(&ctx.real(1), -2, 3).unwrap();
        assert_eq!(one, ctx.real(1));
        assert!(pow_rational_exponent(&ctx.real(0), 1, 3).is_err());
        assert!(pow_rational_exponent(&ctx.real(-2), 1, 3).is_err());
    }

    #[test]
    fn pow_matches_exp_log_at_double_precision() {
        let x = Real::from_i64(6, 300);
        let v = pow_rational_exponent(&x, -2, 3).unwrap();
        let wide = Real::from_i64(6, 600);
        let oracle = (wide.ln().unwrap() * Real::from_i64(-2, 600) / Real::from_i64(3, 600)).exp();
        assert_eq!(v.format_sig(6), "0.302853");
        let diff = (&v.with_digits(600) - &oracle).abs();
        assert!(diff < Real::parse("1e-295", 600).unwrap());
    }

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let mut s = CompensatedSum::new(30);
        let big = Real::parse("1e40", 30).unwrap();
        s.add(&big);
        s.add(&Real::one(30));
        s.add(&-big);
        assert_eq!(s.total(), Real::one(30));
    }
}

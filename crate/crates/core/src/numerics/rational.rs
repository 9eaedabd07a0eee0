use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{NumericsError, Real};

/// Exact fraction, always reduced with a positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(numer: BigInt, denom: BigInt) -> Result<ExactRational, NumericsError> {
        if denom.is_zero() {
            return Err(NumericsError::Domain("zero denominator".into()));
        }
        Ok(ExactRational(BigRational::new(numer, denom)))
    }

    pub fn from_i64(v: i64) -> ExactRational {
        ExactRational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(n: i64, d: i64) -> ExactRational {
        assert!(d != 0, "zero denominator");
        ExactRational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn from_integer(v: BigInt) -> ExactRational {
        ExactRational(BigRational::from_integer(v))
    }

    pub fn zero() -> ExactRational {
        ExactRational(BigRational::zero())
    }

    pub fn one() -> ExactRational {
        ExactRational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn signum(&self) -> i32 {
        if self.0.is_zero() {
            0
        } else if self.0.is_negative() {
            -1
        } else {
            1
        }
    }

    pub fn abs(&self) -> ExactRational {
        ExactRational(self.0.abs())
    }

    pub fn pow(&self, e: i32) -> ExactRational {
        ExactRational(num_traits::Pow::pow(&self.0, e))
    }

    pub fn as_big_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn to_real(&self, digits: u32) -> Real {
        Real::from_rational(&self.0, digits)
    }

    /// Exact value of a decimal literal (`0.04`, `1e-3`).
    pub fn from_decimal(s: &str) -> Result<ExactRational, NumericsError> {
        super::real::parse_decimal(s).map(ExactRational)
    }
}

impl From<BigRational> for ExactRational {
    fn from(r: BigRational) -> Self {
        ExactRational(r)
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for ExactRational {
    type Err = NumericsError;

    /// Accepts `p/q` or a plain integer.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NumericsError::Parse(s.to_string());
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(ExactRational(BigRational::new(n, d)))
    }
}

impl Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        ExactRational(-self.0)
    }
}

impl Neg for &ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        ExactRational(-&self.0)
    }
}

macro_rules! rational_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&ExactRational> for &ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &ExactRational) -> ExactRational {
                ExactRational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<ExactRational> for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: ExactRational) -> ExactRational {
                ExactRational(self.0.$method(rhs.0))
            }
        }
        impl $trait<&ExactRational> for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &ExactRational) -> ExactRational {
                ExactRational(self.0.$method(&rhs.0))
            }
        }
    };
}

rational_binop!(Add, add);
rational_binop!(Sub, sub);
rational_binop!(Mul, mul);
rational_binop!(Div, div);

/// Generalized binomial `C((1 - 3j)/2, k)`.
pub fn binomial_half(j: u32, k: u32) -> ExactRational {
    let a = BigRational::new(BigInt::from(1 - 3 * i64::from(j)), BigInt::from(2));
    let mut acc = BigRational::one();
    for m in 1..=k {
        let m = BigInt::from(m);
        acc = acc * (&a - BigRational::from_integer(&m - 1)) / BigRational::from_integer(m);
    }
    ExactRational(acc)
}

/// Row of `C((1 - 3j)/2, k)` for `k = 0..=k_max`.
pub fn binomial_half_row(j: u32, k_max: u32) -> Vec<ExactRational> {
    let a = BigRational::new(BigInt::from(1 - 3 * i64::from(j)), BigInt::from(2));
    let mut row = Vec::with_capacity(k_max as usize + 1);
    let mut acc = BigRational::one();
    row.push(ExactRational(acc.clone()));
    for m in 1..=k_max {
        let m = BigInt::from(m);
        acc = acc * (&a - BigRational::from_integer(&m - 1)) / BigRational::from_integer(m);
        row.push(ExactRational(acc.clone()));
    }
    row
}

/// `k (k-1) ... (k-n+1)`; zero once the product crosses zero.
pub fn falling_factorial(k: u64, n: u64) -> BigInt {
    if n > k {
        return BigInt::zero();
    }
    (0..n).fold(BigInt::one(), |acc, m| acc * BigInt::from(k - m))
}

pub fn factorial(n: u64) -> BigInt {
    falling_factorial(n, n)
}

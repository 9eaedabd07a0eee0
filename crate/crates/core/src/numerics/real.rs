//! Arbitrary-precision binary floating point with a decimal precision contract.
//!
//! A [`Real`] is `(-1)^neg * mag * 2^exp` with the magnitude rounded
//! (round-half-even) to the binary width implied by its decimal precision.
//! Binary operations run at the larger of the two operand precisions.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::NumericsError;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Extra binary digits carried beyond `ceil(digits * log2(10))`.
pub const GUARD_BITS: u64 = 24;

/// Binary width used for a given decimal precision.
pub fn bits_for_digits(digits: u32) -> u64 {
    (f64::from(digits) * LOG2_10).ceil() as u64 + GUARD_BITS
}

#[derive(Clone, Debug)]
pub struct Real {
    neg: bool,
    mag: BigUint,
    exp: i64,
    digits: u32,
}

fn bit_len(m: &BigUint) -> i64 {
    m.bits() as i64
}

/// Rounds `mag` (with an optional sticky bit for discarded nonzero tail) to
/// `bits` binary digits, round-half-even. Returns the new magnitude and the
/// exponent adjustment.
fn round_mag(mag: BigUint, bits: u64, sticky: bool) -> (BigUint, i64) {
    let len = mag.bits();
    if len <= bits {
        return (mag, 0);
    }
    let shift = len - bits;
    let mut q = &mag >> shift;
    let half_bit = mag.bit(shift - 1);
    let below_half = if shift >= 2 {
        let mask = (BigUint::one() << (shift - 1)) - 1u32;
        !(&mag & mask).is_zero()
    } else {
        false
    } || sticky;
    let round_up = half_bit && (below_half || q.bit(0));
    if round_up {
        q += 1u32;
        if q.bits() > bits {
            q >>= 1;
            return (q, shift as i64 + 1);
        }
    }
    (q, shift as i64)
}

impl Real {
    fn build(neg: bool, mag: BigUint, exp: i64, digits: u32, sticky: bool) -> Real {
        if mag.is_zero() {
            return Real::zero(digits);
        }
        let (mut mag, adj) = round_mag(mag, bits_for_digits(digits), sticky);
        let mut exp = exp + adj;
        let tz = mag.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            mag >>= tz;
            exp += tz as i64;
        }
        Real { neg, mag, exp, digits }
    }

    pub fn zero(digits: u32) -> Real {
        Real {
            neg: false,
            mag: BigUint::zero(),
            exp: 0,
            digits,
        }
    }

    pub fn one(digits: u32) -> Real {
        Real::from_i64(1, digits)
    }

    pub fn from_i64(v: i64, digits: u32) -> Real {
        Real::build(v < 0, BigUint::from(v.unsigned_abs()), 0, digits, false)
    }

    pub fn from_bigint(v: &BigInt, digits: u32) -> Real {
        Real::build(v.is_negative(), v.magnitude().clone(), 0, digits, false)
    }

    /// Correctly rounded conversion of an exact fraction.
    pub fn from_rational(r: &BigRational, digits: u32) -> Real {
        if r.numer().is_zero() {
            return Real::zero(digits);
        }
        let neg = r.numer().is_negative() != r.denom().is_negative();
        let num = r.numer().magnitude();
        let den = r.denom().magnitude();
        let bits = bits_for_digits(digits) as i64;
        let s = (bits + 2 + bit_len(den) - bit_len(num)).max(0);
        let (q, rem) = (num << s as u64).div_rem(den);
        Real::build(neg, q, -s, digits, !rem.is_zero())
    }

    /// Exact conversion from a finite `f64` (then rounded to `digits`).
    pub fn from_f64(v: f64, digits: u32) -> Real {
        assert!(v.is_finite(), "non-finite f64 has no Real value");
        if v == 0.0 {
            return Real::zero(digits);
        }
        let bits = v.to_bits();
        let neg = bits >> 63 == 1;
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Real::build(neg, BigUint::from(mant), exp, digits, false)
    }

    /// Parses a plain or scientific decimal literal (`-0.5`, `1e-6`, `3`).
    pub fn parse(s: &str, digits: u32) -> Result<Real, NumericsError> {
        Ok(Real::from_rational(&parse_decimal(s)?, digits))
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Same value re-rounded (or widened) to a new precision.
    pub fn with_digits(&self, digits: u32) -> Real {
        Real::build(self.neg, self.mag.clone(), self.exp, digits, false)
    }

    pub fn is_zero(&self) -> bool {
        self.mag.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.neg && !self.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        !self.neg && !self.is_zero()
    }

    /// -1, 0 or +1.
    pub fn signum(&self) -> i32 {
        if self.is_zero() {
            0
        } else if self.neg {
            -1
        } else {
            1
        }
    }

    pub fn abs(&self) -> Real {
        let mut r = self.clone();
        r.neg = false;
        r
    }

    /// Exponent `e` with `2^(e-1) <= |x| < 2^e`; `None` for zero.
    pub fn binary_top(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp + bit_len(&self.mag))
        }
    }

    /// Exact value as a fraction.
    pub fn to_rational(&self) -> BigRational {
        let m = BigInt::from_biguint(if self.neg { Sign::Minus } else { Sign::Plus }, self.mag.clone());
        if self.exp >= 0 {
            BigRational::from_integer(m << self.exp as u64)
        } else {
            BigRational::new(m, BigInt::one() << (-self.exp) as u64)
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let len = self.mag.bits();
        let (top, shift) = if len > 64 {
            (
                (&self.mag >> (len - 64)).to_u64().unwrap_or(u64::MAX),
                (len - 64) as i64,
            )
        } else {
            (self.mag.to_u64().unwrap_or(0), 0)
        };
        let v = ldexp(top as f64, self.exp + shift);
        if self.neg {
            -v
        } else {
            v
        }
    }

    fn mul_pow2(&self, k: i64) -> Real {
        let mut r = self.clone();
        if !r.is_zero() {
            r.exp += k;
        }
        r
    }

    pub fn mul_int(&self, k: i64) -> Real {
        self * &Real::from_i64(k, self.digits)
    }

    pub fn div_int(&self, k: i64) -> Real {
        self / &Real::from_i64(k, self.digits)
    }

    fn add_impl(&self, other: &Real, negate_other: bool) -> Real {
        let digits = self.digits.max(other.digits);
        let other_neg = other.neg != negate_other;
        if other.is_zero() {
            return self.with_digits(digits);
        }
        if self.is_zero() {
            let mut r = other.with_digits(digits);
            r.neg = other_neg;
            return r;
        }
        let bits = bits_for_digits(digits) as i64;
        let top = (self.exp + bit_len(&self.mag)).max(other.exp + bit_len(&other.mag));
        let floor = top - bits - 8;
        let e = self.exp.min(other.exp).max(floor);
        let mut sticky = false;
        let mut align = |m: &BigUint, x_exp: i64| -> BigUint {
            if x_exp >= e {
                m << (x_exp - e) as u64
            } else {
                let shift = (e - x_exp) as u64;
                let out = m >> shift;
                if m.trailing_zeros().unwrap_or(0) < shift {
                    sticky = true;
                    out | BigUint::one()
                } else {
                    out
                }
            }
        };
        let a = align(&self.mag, self.exp);
        let b = align(&other.mag, other.exp);
        let (neg, mag) = if self.neg == other_neg {
            (self.neg, a + b)
        } else {
            match a.cmp(&b) {
                Ordering::Greater => (self.neg, a - b),
                Ordering::Less => (other_neg, b - a),
                Ordering::Equal => return Real::zero(digits),
            }
        };
        Real::build(neg, mag, e, digits, sticky)
    }

    fn mul_impl(&self, other: &Real) -> Real {
        let digits = self.digits.max(other.digits);
        Real::build(
            self.neg != other.neg,
            &self.mag * &other.mag,
            self.exp + other.exp,
            digits,
            false,
        )
    }

    fn div_impl(&self, other: &Real) -> Real {
        assert!(!other.is_zero(), "Real division by zero");
        let digits = self.digits.max(other.digits);
        if self.is_zero() {
            return Real::zero(digits);
        }
        let bits = bits_for_digits(digits) as i64;
        let s = (bits + 2 + bit_len(&other.mag) - bit_len(&self.mag)).max(0);
        let (q, rem) = (&self.mag << s as u64).div_rem(&other.mag);
        Real::build(
            self.neg != other.neg,
            q,
            self.exp - other.exp - s,
            digits,
            !rem.is_zero(),
        )
    }

    pub fn recip(&self) -> Real {
        &Real::one(self.digits) / self
    }

    pub fn sqrt(&self) -> Result<Real, NumericsError> {
        self.nth_root(2)
    }

    /// Principal `q`-th root of a non-negative value.
    pub fn nth_root(&self, q: u32) -> Result<Real, NumericsError> {
        if q == 0 {
            return Err(NumericsError::Domain("zeroth root".into()));
        }
        if self.is_negative() {
            return Err(NumericsError::Domain("root of a negative number".into()));
        }
        if self.is_zero() || q == 1 {
            return Ok(self.clone());
        }
        let bits = bits_for_digits(self.digits) as i64;
        let q64 = i64::from(q);
        let want = q64 * (bits + 2);
        let mut s = (want - bit_len(&self.mag)).max(0);
        s += (self.exp - s).rem_euclid(q64);
        let m = &self.mag << s as u64;
        let r = m.nth_root(q);
        let exact = r.pow(q) == m;
        Ok(Real::build(false, r, (self.exp - s) / q64, self.digits, !exact))
    }

    /// Integer power by repeated squaring, carried with extra guard digits.
    pub fn powi(&self, n: i64) -> Real {
        let inner = self.digits + 2 + (64 - n.unsigned_abs().leading_zeros()) / 3;
        let mut base = self.with_digits(inner);
        let mut acc = Real::one(inner);
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        if n < 0 {
            acc = acc.recip();
        }
        acc.with_digits(self.digits)
    }

    /// `ln 2` at the given precision.
    pub fn ln2(digits: u32) -> Real {
        // ln 2 = 2 atanh(1/3)
        let inner = digits + 4;
        atanh_series(&Real::from_i64(1, inner).div_int(3))
            .mul_pow2(1)
            .with_digits(digits)
    }

    /// Natural logarithm.
    pub fn ln(&self) -> Result<Real, NumericsError> {
        if !self.is_positive() {
            return Err(NumericsError::Domain("logarithm of a non-positive number".into()));
        }
        let inner = self.digits + 4;
        // x = m * 2^k with m in [2/3, 4/3)
        let top = self.exp + bit_len(&self.mag);
        let mut m = self.with_digits(inner).mul_pow2(-top);
        let mut k = top;
        let four_thirds = Real::from_i64(4, inner).div_int(3);
        while m >= four_thirds {
            m = m.mul_pow2(-1);
            k += 1;
        }
        let two_thirds = Real::from_i64(2, inner).div_int(3);
        while m < two_thirds {
            m = m.mul_pow2(1);
            k -= 1;
        }
        let one = Real::one(inner);
        let z = &(&m - &one) / &(&m + &one);
        let ln_m = atanh_series(&z).mul_pow2(1);
        let r = &ln_m + &Real::ln2(inner).mul_int(k);
        Ok(r.with_digits(self.digits))
    }

    /// Exponential function.
    pub fn exp(&self) -> Real {
        if self.is_zero() {
            return Real::one(self.digits);
        }
        let squarings: i64 = 8 + i64::from(bits_for_digits(self.digits).isqrt() as u32) / 2;
        let inner = self.digits + 6 + (squarings as u32) / 3;
        let x = self.with_digits(inner);
        let ln2 = Real::ln2(inner);
        let k = (&x / &ln2).to_f64().round();
        if !k.is_finite() || k.abs() > 4.0e18 {
            panic!("exp argument out of range");
        }
        let k = k as i64;
        let r = (&x - &ln2.mul_int(k)).mul_pow2(-squarings);
        // Taylor series for e^r with |r| tiny
        let mut term = Real::one(inner);
        let mut sum = Real::one(inner);
        let eps_top = -(bits_for_digits(inner) as i64) - 4;
        let mut i = 1i64;
        loop {
            term = (&term * &r).div_int(i);
            if term.is_zero() || term.binary_top().unwrap_or(i64::MIN) < eps_top {
                break;
            }
            sum = &sum + &term;
            i += 1;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum.mul_pow2(k).with_digits(self.digits)
    }

    /// `round_half_even(x * 10^places)` computed exactly from the binary value.
    pub fn to_scaled_integer(&self, places: i64) -> BigInt {
        if self.is_zero() {
            return BigInt::zero();
        }
        let ten = BigUint::from(10u32);
        let mut num = self.mag.clone();
        let mut den = BigUint::one();
        if places >= 0 {
            num *= ten.pow(places as u32);
        } else {
            den *= ten.pow((-places) as u32);
        }
        if self.exp >= 0 {
            num <<= self.exp as u64;
        } else {
            den <<= (-self.exp) as u64;
        }
        let q = div_round_half_even(&num, &den);
        BigInt::from_biguint(if self.neg { Sign::Minus } else { Sign::Plus }, q)
    }

    /// Significant digits: returns `(d, e10)` with `|x| ~= d * 10^(e10 - sig + 1)`
    /// and `d` having exactly `sig` decimal digits. `None` for zero.
    pub fn to_significant(&self, sig: u32) -> Option<(BigUint, i64)> {
        if self.is_zero() {
            return None;
        }
        let sig = sig.max(1);
        let top = self.exp + bit_len(&self.mag);
        let mut e10 = ((top - 1) as f64 * std::f64::consts::LOG10_2).floor() as i64;
        let lo = BigUint::from(10u32).pow(sig - 1);
        let hi = BigUint::from(10u32).pow(sig);
        for _ in 0..8 {
            let s = self.abs().to_scaled_integer(i64::from(sig) - 1 - e10);
            let s = s.magnitude().clone();
            if s >= hi {
                e10 += 1;
            } else if s < lo {
                e10 -= 1;
            } else {
                return Some((s, e10));
            }
        }
        None
    }

    /// Fixed-point rendering with exactly `places` digits after the point.
    pub fn format_places(&self, places: u32) -> String {
        let s = self.to_scaled_integer(i64::from(places));
        format_scaled(&s, places)
    }

    /// Rendering with `sig` significant digits. Fixed notation unless the
    /// decimal exponent is far from zero.
    pub fn format_sig(&self, sig: u32) -> String {
        let Some((d, e10)) = self.to_significant(sig) else {
            return "0".into();
        };
        let sign = if self.neg { "-" } else { "" };
        if !(-40..=40).contains(&e10) {
            let ds = d.to_string();
            let (head, tail) = ds.split_at(1);
            return if tail.is_empty() {
                format!("{sign}{head}e{e10}")
            } else {
                format!("{sign}{head}.{tail}e{e10}")
            };
        }
        let places = i64::from(sig) - 1 - e10;
        if places >= 0 {
            let s = BigInt::from_biguint(if self.neg { Sign::Minus } else { Sign::Plus }, d);
            format_scaled(&s, places as u32)
        } else {
            let mut ds = d.to_string();
            ds.push_str(&"0".repeat((-places) as usize));
            format!("{sign}{ds}")
        }
    }
}

fn atanh_series(z: &Real) -> Real {
    // z + z^3/3 + z^5/5 + ...
    let digits = z.digits();
    let z2 = z * z;
    let mut power = z.clone();
    let mut sum = z.clone();
    let eps_top = -(bits_for_digits(digits) as i64) - 4;
    let mut k = 1i64;
    loop {
        power = &power * &z2;
        let term = power.div_int(2 * k + 1);
        if term.is_zero() || term.binary_top().unwrap_or(i64::MIN) < eps_top {
            break;
        }
        sum = &sum + &term;
        k += 1;
    }
    sum
}

fn div_round_half_even(num: &BigUint, den: &BigUint) -> BigUint {
    let (q, r) = num.div_rem(den);
    let twice = &r << 1u32;
    match twice.cmp(den) {
        Ordering::Greater => q + 1u32,
        Ordering::Less => q,
        Ordering::Equal => {
            if q.bit(0) {
                q + 1u32
            } else {
                q
            }
        }
    }
}

fn format_scaled(s: &BigInt, places: u32) -> String {
    let sign = if s.is_negative() { "-" } else { "" };
    let mut ds = s.magnitude().to_string();
    let places = places as usize;
    if places == 0 {
        return format!("{sign}{ds}");
    }
    if ds.len() <= places {
        ds = "0".repeat(places + 1 - ds.len()) + &ds;
    }
    let (int, frac) = ds.split_at(ds.len() - places);
    format!("{sign}{int}.{frac}")
}

fn ldexp(x: f64, mut e: i64) -> f64 {
    let mut v = x;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
        if v.is_infinite() {
            return v;
        }
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
        if v == 0.0 {
            return v;
        }
    }
    v * 2f64.powi(e as i32)
}

/// Exact value of a decimal literal such as `-12.5e-3`.
pub fn parse_decimal(s: &str) -> Result<BigRational, NumericsError> {
    let bad = || NumericsError::Parse(s.to_string());
    let t = s.trim();
    let (mantissa, exp10) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int, frac) = match body.find('.') {
        Some(i) => (&body[..i], &body[i + 1..]),
        None => (body, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let mut n: BigInt = digits.parse().map_err(|_| bad())?;
    if neg {
        n = -n;
    }
    let scale = exp10 - frac.len() as i64;
    if scale.unsigned_abs() > 100_000 {
        return Err(bad());
    }
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(n * ten.pow(scale as u32))
    } else {
        BigRational::new(n, ten.pow((-scale) as u32))
    })
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn cmp_mag(a: &Real, b: &Real) -> Ordering {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => return Ordering::Equal,
        (true, false) => return Ordering::Less,
        (false, true) => return Ordering::Greater,
        _ => {}
    }
    let ta = a.exp + bit_len(&a.mag);
    let tb = b.exp + bit_len(&b.mag);
    if ta != tb {
        return ta.cmp(&tb);
    }
    let e = a.exp.min(b.exp);
    let ma = &a.mag << (a.exp - e) as u64;
    let mb = &b.mag << (b.exp - e) as u64;
    ma.cmp(&mb)
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.signum(), other.signum()) {
            (x, y) if x != y => x.cmp(&y),
            (0, _) => Ordering::Equal,
            (1, _) => cmp_mag(self, other),
            _ => cmp_mag(other, self),
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = f.precision().map(|p| p as u32).unwrap_or(self.digits);
        f.write_str(&self.format_sig(sig))
    }
}

impl FromStr for Real {
    type Err = NumericsError;

    /// Parses at the default working precision.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Real::parse(s, super::DEFAULT_WORKING_DIGITS)
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(mut self) -> Real {
        if !self.is_zero() {
            self.neg = !self.neg;
        }
        self
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        -self.clone()
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                let f: fn(&Real, &Real) -> Real = $body;
                f(self, rhs)
            }
        }
        impl $trait<Real> for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                (&self).$method(rhs)
            }
        }
        impl $trait<Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| a.add_impl(b, false));
forward_binop!(Sub, sub, |a, b| a.add_impl(b, true));
forward_binop!(Mul, mul, |a, b| a.mul_impl(b));
forward_binop!(Div, div, |a, b| a.div_impl(b));

//! Dual-mode scalar arithmetic: exact rationals or tolerance-aware doubles.
//!
//! Every probability computation in this crate is generic over a
//! [`NumericMode`]. [`Exact`] works on `num::BigRational` and gives exact
//! equality everywhere (the reference path for the acceptance tests);
//! [`Float`] works on `f64` and groups nearly-equal likelihood ratios with
//! a relative tie tolerance, which is what makes large supports (Zipf with
//! m = 10^4) tractable.

use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

/// Numeric value used for probabilities and likelihood ratios.
///
/// Implemented by `BigRational` (exact) and `f64` (floating). The trait
/// keeps only what the formulas need; everything else comes from the
/// standard `num_traits` bounds.
pub trait Scalar: Clone + PartialOrd + fmt::Debug + fmt::Display + Signed {
    fn from_u64(v: u64) -> Self;
    fn from_i64(v: i64) -> Self;
    /// num / den with den > 0.
    fn from_ratio(num: i64, den: u64) -> Self;
    /// Exact embedding of a finite double (dyadic rational in exact mode).
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;

    /// Nonnegative integer power by binary exponentiation.
    fn pow_u(&self, e: u64) -> Self {
        let mut base = self.clone();
        let mut exp = e;
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base.clone();
            }
            exp >>= 1;
            if exp > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// Parses "3", "-1/3", "0.25", "2.5e-3". Exact mode parses decimal
    /// strings without rounding.
    fn parse(s: &str) -> Option<Self>;
}

impl Scalar for BigRational {
    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: u64) -> Self {
        assert!(den > 0, "denominator must be positive");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite float required for exact conversion")
    }

    fn to_f64(&self) -> f64 {
        // Scale down huge numerator/denominator pairs before converting.
        num::ToPrimitive::to_f64(self).unwrap_or_else(|| {
            let bits = self.numer().bits().max(self.denom().bits());
            let shift = bits.saturating_sub(256) as u32;
            let numer = self.numer() >> shift;
            let denom = self.denom() >> shift;
            let n = num::ToPrimitive::to_f64(&numer).unwrap_or(f64::NAN);
            let d = num::ToPrimitive::to_f64(&denom).unwrap_or(f64::NAN);
            n / d
        })
    }

    fn parse(s: &str) -> Option<Self> {
        parse_rational(s)
    }
}

impl Scalar for f64 {
    fn from_u64(v: u64) -> Self {
        v as f64
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: u64) -> Self {
        assert!(den > 0, "denominator must be positive");
        num as f64 / den as f64
    }

    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn pow_u(&self, e: u64) -> Self {
        if e <= i32::MAX as u64 {
            self.powi(e as i32)
        } else {
            self.powf(e as f64)
        }
    }

    fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let n: f64 = num.trim().parse().ok()?;
            let d: f64 = den.trim().parse().ok()?;
            if d == 0.0 {
                return None;
            }
            Some(n / d)
        } else {
            s.parse().ok()
        }
    }
}

/// Parses a rational from "a/b", an integer, or a decimal with optional
/// exponent — all without rounding.
fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_rational(num)?;
        let d = parse_rational(den)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (sign, rest) = match s.as_bytes()[0] {
        b'-' => (-1, &s[1..]),
        b'+' => (1, &s[1..]),
        _ => (1, s),
    };
    let (mantissa, exp10) = match rest.find(['e', 'E']) {
        Some(idx) => {
            let exp: i64 = rest[idx + 1..].parse().ok()?;
            (&rest[..idx], exp)
        }
        None => (rest, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let unscaled: BigInt = digits.parse().ok()?;
    let scale = frac_part.len() as i64 - exp10;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::new(unscaled, num::pow::pow(ten, scale as usize))
    } else {
        BigRational::from_integer(unscaled * num::pow::pow(ten, (-scale) as usize))
    };
    Some(BigRational::from_integer(BigInt::from(sign)) * value)
}

/// Numeric mode attached to distributions and mechanisms.
///
/// Carries the tie rule used when grouping likelihood ratios into atoms and
/// the slack applied to internal consistency assertions.
pub trait NumericMode: Clone + fmt::Debug + PartialEq + Send + Sync {
    type Value: Scalar + Send + Sync;

    fn is_exact(&self) -> bool;

    /// Whether two ratio values fall in the same atom.
    fn tie_eq(&self, a: &Self::Value, b: &Self::Value) -> bool;

    /// Whether a probability vector sum passes the normalization check.
    fn sum_is_one(&self, sum: &Self::Value) -> bool;

    /// `a <= b` up to mode slack; used by internal theorem assertions.
    fn le_with_slack(&self, a: &Self::Value, b: &Self::Value) -> bool;

    /// `a == b` up to mode slack; used by reconstruction checks.
    fn eq_with_slack(&self, a: &Self::Value, b: &Self::Value) -> bool;

    /// Mode governing the result of a binary operation on two carriers.
    fn merge(&self, other: &Self) -> Self;

    /// Serialization tag ("exact" / "float").
    fn name(&self) -> &'static str;
}

/// Arbitrary-precision rational arithmetic; all comparisons are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Exact;

impl NumericMode for Exact {
    type Value = BigRational;

    fn is_exact(&self) -> bool {
        true
    }

    fn tie_eq(&self, a: &BigRational, b: &BigRational) -> bool {
        a == b
    }

    fn sum_is_one(&self, sum: &BigRational) -> bool {
        sum.is_one()
    }

    fn le_with_slack(&self, a: &BigRational, b: &BigRational) -> bool {
        a <= b
    }

    fn eq_with_slack(&self, a: &BigRational, b: &BigRational) -> bool {
        a == b
    }

    fn merge(&self, _other: &Self) -> Self {
        Exact
    }

    fn name(&self) -> &'static str {
        "exact"
    }
}

/// Double-precision arithmetic with a relative tie tolerance.
///
/// Two ratios t1, t2 belong to the same atom iff
/// `|t1 - t2| <= tol_tie * max(1, |t1|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Float {
    pub tol_tie: f64,
}

impl Float {
    pub const DEFAULT_TOL_TIE: f64 = 1e-12;

    pub fn with_tol(tol_tie: f64) -> Self {
        Float { tol_tie }
    }
}

impl Default for Float {
    fn default() -> Self {
        Float {
            tol_tie: Self::DEFAULT_TOL_TIE,
        }
    }
}

impl NumericMode for Float {
    type Value = f64;

    fn is_exact(&self) -> bool {
        false
    }

    fn tie_eq(&self, a: &f64, b: &f64) -> bool {
        (a - b).abs() <= self.tol_tie * a.abs().max(1.0)
    }

    fn sum_is_one(&self, sum: &f64) -> bool {
        (sum - 1.0).abs() <= 1e-12
    }

    fn le_with_slack(&self, a: &f64, b: &f64) -> bool {
        *a <= *b + self.tol_tie * a.abs().max(b.abs()).max(1.0)
    }

    fn eq_with_slack(&self, a: &f64, b: &f64) -> bool {
        (a - b).abs() <= self.tol_tie * a.abs().max(b.abs()).max(1.0)
    }

    fn merge(&self, other: &Self) -> Self {
        Float {
            tol_tie: self.tol_tie.max(other.tol_tie),
        }
    }

    fn name(&self) -> &'static str {
        "float"
    }
}

/// A nonnegative value extended with +infinity.
///
/// Used for DP ratios (`e^eps` may be infinite when rows have disjoint
/// supports) and for the multiplicative-advantage bound M.
#[derive(Clone, Debug, PartialEq)]
pub enum Extended<V> {
    Finite(V),
    Infinite,
}

impl<V: Scalar> Extended<V> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(&self) -> Option<&V> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::Finite(v) => v.to_f64(),
            Extended::Infinite => f64::INFINITY,
        }
    }

    /// Natural log as f64; infinity maps to infinity.
    pub fn ln(&self) -> f64 {
        match self {
            Extended::Finite(v) => v.to_f64().ln(),
            Extended::Infinite => f64::INFINITY,
        }
    }

    pub fn max_with(self, other: Extended<V>) -> Extended<V> {
        match (self, other) {
            (Extended::Infinite, _) | (_, Extended::Infinite) => Extended::Infinite,
            (Extended::Finite(a), Extended::Finite(b)) => {
                if a >= b {
                    Extended::Finite(a)
                } else {
                    Extended::Finite(b)
                }
            }
        }
    }
}

impl<V: fmt::Display> fmt::Display for Extended<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => write!(f, "inf"),
        }
    }
}

/// Neumaier-compensated sum; keeps the normalization check honest for
/// supports around 10^4 where a plain sum drifts past the tolerance.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_exact_decimals() {
        let v = BigRational::parse("0.25").unwrap();
        assert_eq!(v, BigRational::from_ratio(1, 4));
        let v = BigRational::parse("2.5e-3").unwrap();
        assert_eq!(v, BigRational::from_ratio(1, 400));
        let v = BigRational::parse("-1/3").unwrap();
        assert_eq!(v, BigRational::from_ratio(-1, 3));
        let v = BigRational::parse("7").unwrap();
        assert_eq!(v, BigRational::from_u64(7));
        assert!(BigRational::parse("").is_none());
        assert!(BigRational::parse("x").is_none());
        assert!(BigRational::parse("1/0").is_none());
    }

    #[test]
    fn parses_floats() {
        assert_eq!(f64::parse("0.25"), Some(0.25));
        assert_eq!(f64::parse("3/4"), Some(0.75));
        assert_eq!(f64::parse("1e-3"), Some(1e-3));
    }

    #[test]
    fn pow_u_matches_repeated_multiplication() {
        let base = BigRational::from_ratio(3, 4);
        let mut expect = BigRational::one();
        for e in 0..12u64 {
            assert_eq!(base.pow_u(e), expect);
            expect *= base.clone();
        }
        assert_eq!(0.5f64.pow_u(10), 0.5f64.powi(10));
    }

    #[test]
    fn float_tie_rule_is_relative() {
        let mode = Float::default();
        assert!(mode.tie_eq(&1.0, &(1.0 + 5e-13)));
        assert!(!mode.tie_eq(&1.0, &(1.0 + 5e-12)));
        // below 1 the scale clamps at 1
        assert!(mode.tie_eq(&1e-20, &5e-13));
    }

    #[test]
    fn compensated_sum_is_stable() {
        let n = 10_000;
        let xs = vec![1.0 / n as f64; n];
        assert!((compensated_sum(xs) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn extended_ordering_and_ln() {
        let a: Extended<f64> = Extended::Finite(3.0);
        assert!((a.ln() - 3f64.ln()).abs() < 1e-15);
        let b: Extended<f64> = Extended::Infinite;
        assert_eq!(b.ln(), f64::INFINITY);
        assert_eq!(a.clone().max_with(b.clone()), Extended::Infinite);
        assert_eq!(
            Extended::Finite(2.0).max_with(Extended::Finite(5.0)),
            Extended::Finite(5.0)
        );
    }

    #[test]
    fn big_rational_to_f64_handles_huge_operands() {
        // (3/4)^5000 has thousands of digits; conversion must not panic.
        let v = BigRational::from_ratio(3, 4).pow_u(5000);
        let f = v.to_f64();
        assert!(f >= 0.0 && f < 1e-300);
    }
}

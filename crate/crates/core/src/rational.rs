//! Exact rational numbers for model coefficients, bounds and evaluation.
//!
//! Values are kept in lowest terms with a positive denominator, so two
//! equal rationals always have identical representations. Arithmetic is
//! checked: an overflow of the underlying 128-bit integers panics instead
//! of silently wrapping, since a wrong coefficient would invalidate every
//! equivalence check built on top of it.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(Ratio<i128>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
}

const OVERFLOW: &str = "rational arithmetic overflowed 128-bit range";

impl Rational {
    pub const ZERO: Rational = Rational(Ratio::new_raw(0, 1));
    pub const ONE: Rational = Rational(Ratio::new_raw(1, 1));

    pub fn new(numer: i128, denom: i128) -> Result<Self, RationalError> {
        if denom == 0 {
            return Err(RationalError::ZeroDenominator);
        }
        Ok(Rational(Ratio::new(numer, denom)))
    }

    pub fn integer(value: i128) -> Self {
        Rational(Ratio::from_integer(value))
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn floor(&self) -> i128 {
        Integer::div_floor(&self.numer(), &self.denom())
    }

    pub fn ceil(&self) -> i128 {
        Integer::div_ceil(&self.numer(), &self.denom())
    }

    /// Exact decimal rendering, if one exists with at most `max_digits`
    /// significant digits.
    ///
    /// Only denominators of the form 2^a·5^b have a terminating expansion.
    pub fn to_decimal(&self, max_digits: usize) -> Option<String> {
        let mut den = self.denom();
        let mut twos = 0u32;
        let mut fives = 0u32;
        while den % 2 == 0 {
            den /= 2;
            twos += 1;
        }
        while den % 5 == 0 {
            den /= 5;
            fives += 1;
        }
        if den != 1 {
            return None;
        }
        let scale = twos.max(fives);
        // numer / denom == numer * 2^(scale - twos) * 5^(scale - fives) / 10^scale
        let factor = 2i128
            .checked_pow(scale - twos)?
            .checked_mul(5i128.checked_pow(scale - fives)?)?;
        let scaled = self.numer().checked_mul(factor)?;
        let digits = scaled.unsigned_abs().to_string();
        let significant = digits.trim_start_matches('0').trim_end_matches('0').len();
        if significant > max_digits {
            return None;
        }
        let sign = if scaled < 0 { "-" } else { "" };
        if scale == 0 {
            return Some(format!("{sign}{digits}"));
        }
        let scale = scale as usize;
        let padded = if digits.len() <= scale {
            format!("{}{}", "0".repeat(scale + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (int_part, frac_part) = padded.split_at(padded.len() - scale);
        Some(format!("{sign}{int_part}.{frac_part}"))
    }

    /// Parses `p`, `p/q`, or a finite decimal such as `-0.125` or `1e3`.
    pub fn parse_decimal(text: &str) -> Result<Self, RationalError> {
        let err = || RationalError::Parse(text.to_string());
        let text = text.trim();
        if let Some((n, d)) = text.split_once('/') {
            let n: i128 = n.trim().parse().map_err(|_| err())?;
            let d: i128 = d.trim().parse().map_err(|_| err())?;
            return Rational::new(n, d);
        }
        let (mantissa, exponent) = match text.find(['e', 'E']) {
            Some(pos) => {
                let exp: i32 = text[pos + 1..].parse().map_err(|_| err())?;
                (&text[..pos], exp)
            }
            None => (text, 0),
        };
        let (negative, body) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut numer: i128 = digits.parse().map_err(|_| err())?;
        if negative {
            numer = -numer;
        }
        let shift = exponent - frac_part.len() as i32;
        let pow = 10i128.checked_pow(shift.unsigned_abs()).ok_or_else(err)?;
        if shift >= 0 {
            Ok(Rational::integer(numer.checked_mul(pow).ok_or_else(err)?))
        } else {
            Rational::new(numer, pow)
        }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::ZERO
    }
}

impl From<i64> for Rational {
    fn from(value: i64) -> Self {
        Rational::integer(value as i128)
    }
}

impl From<i32> for Rational {
    fn from(value: i32) -> Self {
        Rational::integer(value as i128)
    }
}

impl From<u32> for Rational {
    fn from(value: u32) -> Self {
        Rational::integer(value as i128)
    }
}

impl FromStr for Rational {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rational::parse_decimal(s)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for Rational {
    type Output = Rational;

    fn add(self, rhs: Rational) -> Rational {
        if self.0.is_integer() && rhs.0.is_integer() {
            let sum = self.numer().checked_add(rhs.numer()).expect(OVERFLOW);
            return Rational::integer(sum);
        }
        Rational(self.0.checked_add(&rhs.0).expect(OVERFLOW))
    }
}

impl Sub for Rational {
    type Output = Rational;

    fn sub(self, rhs: Rational) -> Rational {
        if self.0.is_integer() && rhs.0.is_integer() {
            let diff = self.numer().checked_sub(rhs.numer()).expect(OVERFLOW);
            return Rational::integer(diff);
        }
        Rational(self.0.checked_sub(&rhs.0).expect(OVERFLOW))
    }
}

impl Mul for Rational {
    type Output = Rational;

    fn mul(self, rhs: Rational) -> Rational {
        if self.0.is_integer() && rhs.0.is_integer() {
            let prod = self.numer().checked_mul(rhs.numer()).expect(OVERFLOW);
            return Rational::integer(prod);
        }
        Rational(self.0.checked_mul(&rhs.0).expect(OVERFLOW))
    }
}

impl Div for Rational {
    type Output = Rational;

    /// Panics on division by zero.
    fn div(self, rhs: Rational) -> Rational {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rational(self.0.checked_div(&rhs.0).expect(OVERFLOW))
    }
}

impl Neg for Rational {
    type Output = Rational;

    fn neg(self) -> Rational {
        Rational(Ratio::new_raw(self.numer().checked_neg().expect(OVERFLOW), self.denom()))
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        *self = *self + rhs;
    }
}

impl SubAssign for Rational {
    fn sub_assign(&mut self, rhs: Rational) {
        *self = *self - rhs;
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::ZERO, |acc, x| acc + x)
    }
}

impl Rational {
    pub fn max(self, other: Rational) -> Rational {
        match self.cmp(&other) {
            Ordering::Less => other,
            _ => self,
        }
    }

    pub fn min(self, other: Rational) -> Rational {
        match self.cmp(&other) {
            Ordering::Greater => other,
            _ => self,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RationalRepr {
    num: JsonInt,
    den: JsonInt,
}

/// An `i128` written as a plain JSON integer. Values outside the `i64`
/// range cannot be read back through buffered (tagged or flattened)
/// deserialization, which only carries 64-bit integers.
struct JsonInt(i128);

impl Serialize for JsonInt {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(self.0) {
            Ok(v) => serializer.serialize_i64(v),
            Err(_) => serializer.serialize_i128(self.0),
        }
    }
}

impl<'de> Deserialize<'de> for JsonInt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = JsonInt;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer")
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<JsonInt, E> {
                Ok(JsonInt(v.into()))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<JsonInt, E> {
                Ok(JsonInt(v.into()))
            }
            fn visit_i128<E: serde::de::Error>(self, v: i128) -> Result<JsonInt, E> {
                Ok(JsonInt(v))
            }
            fn visit_u128<E: serde::de::Error>(self, v: u128) -> Result<JsonInt, E> {
                i128::try_from(v).map(JsonInt).map_err(|_| E::custom("integer out of range"))
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RationalRepr { num: JsonInt(self.numer()), den: JsonInt(self.denom()) }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = RationalRepr::deserialize(deserializer)?;
        Rational::new(repr.num.0, repr.den.0).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn lowest_terms_and_sign() {
        let x = r(6, -4);
        assert_eq!((x.numer(), x.denom()), (-3, 2));
        assert_eq!(r(0, 7), Rational::ZERO);
        assert_eq!(Rational::new(1, 0), Err(RationalError::ZeroDenominator));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(r(1, 4).to_decimal(15).as_deref(), Some("0.25"));
        assert_eq!(r(-1, 2).to_decimal(15).as_deref(), Some("-0.5"));
        assert_eq!(r(13, 1).to_decimal(15).as_deref(), Some("13"));
        assert_eq!(r(-3, 80).to_decimal(15).as_deref(), Some("-0.0375"));
        assert_eq!(r(1, 3).to_decimal(15), None);
        assert_eq!(Rational::integer(1_234_567_890_123_456).to_decimal(15), None);
        assert_eq!(Rational::integer(1_000_000_000_000_000_000).to_decimal(15).as_deref(), Some("1000000000000000000"));
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(Rational::parse_decimal("0.25").unwrap(), r(1, 4));
        assert_eq!(Rational::parse_decimal("-0.0375").unwrap(), r(-3, 80));
        assert_eq!(Rational::parse_decimal("2e2").unwrap(), Rational::integer(200));
        assert_eq!(Rational::parse_decimal("5e-1").unwrap(), r(1, 2));
        assert_eq!(Rational::parse_decimal("3/6").unwrap(), r(1, 2));
        assert!(Rational::parse_decimal("x").is_err());
        assert!(Rational::parse_decimal(".").is_err());
    }

    #[test]
    fn json_shape() {
        let text = serde_json::to_string(&r(-3, 6)).unwrap();
        assert_eq!(text, r#"{"num":-1,"den":2}"#);
        let back: Rational = serde_json::from_str(r#"{"num":4,"den":8}"#).unwrap();
        assert_eq!(back, r(1, 2));
        assert!(serde_json::from_str::<Rational>(r#"{"num":1,"den":0}"#).is_err());
    }

    #[test]
    fn floor_ceil() {
        assert_eq!(r(-7, 2).floor(), -4);
        assert_eq!(r(-7, 2).ceil(), -3);
        assert_eq!(r(7, 2).floor(), 3);
    }

    proptest! {
        #[test]
        fn decimal_round_trip(n in -1_000_000i128..1_000_000, e2 in 0u32..6, e5 in 0u32..6) {
            let x = r(n, 2i128.pow(e2) * 5i128.pow(e5));
            let text = x.to_decimal(15).unwrap();
            prop_assert_eq!(Rational::parse_decimal(&text).unwrap(), x);
        }

        #[test]
        fn field_laws(a in -500i128..500, b in 1i128..50, c in -500i128..500, d in 1i128..50) {
            let x = r(a, b);
            let y = r(c, d);
            prop_assert_eq!(x + y - y, x);
            prop_assert_eq!((x + y) * y, x * y + y * y);
            if !y.is_zero() {
                prop_assert_eq!(x * y / y, x);
            }
        }
    }
}

//! Exact rational values.
//!
//! Everything in this crate is computed over arbitrary-precision rationals.
//! Values render as `p/q` in lowest terms, integers without a `/1` suffix.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use thiserror::Error;

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("decimal literal `{0}` is not accepted; write an exact fraction `p/q`")]
    Decimal(String),
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `p/q` or a bare integer. Decimal and exponent notation is rejected.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    if s.contains(['.', 'e', 'E']) {
        return Err(ParseRationalError::Decimal(s.to_string()));
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let parse_int = |part: &str| -> Result<BigInt, ParseRationalError> {
        let digits = part.strip_prefix(['+', '-']).unwrap_or(part);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseRationalError::Malformed(s.to_string()));
        }
        part.parse::<BigInt>()
            .map_err(|_| ParseRationalError::Malformed(s.to_string()))
    };
    let n = parse_int(num)?;
    let d = parse_int(den)?;
    if d.is_zero() {
        return Err(ParseRationalError::ZeroDenominator(s.to_string()));
    }
    Ok(Rational::new(n, d))
}

/// Canonical text form: `p/q`, or `p` when the denominator is one.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn half() -> Rational {
    ratio(1, 2)
}

pub fn is_half(value: &Rational) -> bool {
    *value == half()
}

/// `min{v, 1 - v}`.
pub fn distance_to_bounds(value: &Rational) -> Rational {
    let upper = Rational::one() - value;
    if &upper < value {
        upper
    } else {
        value.clone()
    }
}

pub fn abs(value: &Rational) -> Rational {
    value.abs()
}

/// Serde adapter writing rationals as canonical strings.
pub mod serde_text {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("1/2").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("2/4").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational(" -3 ").unwrap(), int(-3));
        assert_eq!(parse_rational("6/-4").unwrap(), ratio(-3, 2));
    }

    #[test]
    fn rejects_decimals_and_garbage() {
        assert!(matches!(parse_rational("0.5"), Err(ParseRationalError::Decimal(_))));
        assert!(matches!(parse_rational("1e3"), Err(ParseRationalError::Decimal(_))));
        assert!(matches!(parse_rational("1/0"), Err(ParseRationalError::ZeroDenominator(_))));
        assert!(matches!(parse_rational("x/2"), Err(ParseRationalError::Malformed(_))));
        assert!(matches!(parse_rational("1/2/3"), Err(ParseRationalError::Malformed(_))));
        assert!(matches!(parse_rational(""), Err(ParseRationalError::Empty)));
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_rational(&ratio(4, 8)), "1/2");
        assert_eq!(format_rational(&int(3)), "3");
        assert_eq!(format_rational(&ratio(-6, 3)), "-2");
        assert_eq!(format_rational(&Rational::zero()), "0");
    }

    #[test]
    fn distance_to_bounds_is_symmetric() {
        assert_eq!(distance_to_bounds(&ratio(1, 4)), ratio(1, 4));
        assert_eq!(distance_to_bounds(&ratio(3, 4)), ratio(1, 4));
        assert_eq!(distance_to_bounds(&int(1)), int(0));
    }
}

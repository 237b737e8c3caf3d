//! Exact probabilities.
//!
//! Every probability on the analysis path is a [`Prob`] (an arbitrary
//! precision rational). On the wire they are written as `"num/den"` strings so
//! that no JSON float ever touches a verdict.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational probability / coefficient.
pub type Prob = BigRational;

pub fn zero() -> Prob {
    Prob::zero()
}

pub fn one() -> Prob {
    Prob::one()
}

/// `num / den` as an exact rational. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Prob {
    Prob::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_int(v: i64) -> Prob {
    Prob::from_integer(BigInt::from(v))
}

pub fn is_probability(p: &Prob) -> bool {
    !p.is_negative() && *p <= Prob::one()
}

pub fn to_f64(p: &Prob) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

/// Always `num/den`, including integers (`1/1`, `0/1`).
pub fn format(p: &Prob) -> String {
    format!("{}/{}", p.numer(), p.denom())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRationalError(pub String);

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational {:?}: expected \"num/den\"", self.0)
    }
}

impl std::error::Error for ParseRationalError {}

/// Accepts `"num/den"` or a bare integer `"num"`.
pub fn parse(s: &str) -> Result<Prob, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let s_trim = s.trim();
    match s_trim.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Prob::new(n, d))
        }
        None => BigInt::from_str(s_trim)
            .map(Prob::from_integer)
            .map_err(|_| err()),
    }
}

/// Scale a rational vector by a positive factor so every entry becomes an
/// integer and the entries share no common divisor. The zero vector is
/// returned unchanged.
pub fn normalize_integer(values: &[Prob]) -> Vec<Prob> {
    let lcm = values
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let ints: Vec<BigInt> = values
        .iter()
        .map(|v| (v * Prob::from_integer(lcm.clone())).to_integer())
        .collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if gcd.is_zero() {
        return values.to_vec();
    }
    ints.into_iter()
        .map(|v| Prob::from_integer(v / &gcd))
        .collect()
}

/// Rationalize a count: `count / total`.
pub fn frequency(count: u64, total: u64) -> Prob {
    Prob::new(BigInt::from(count), BigInt::from(total))
}

/// Serde adapter for a single rational stored as a `"num/den"` string.
pub mod serde_str {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Prob, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(p))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Prob, D::Error> {
        let raw = String::deserialize(d)?;
        parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Prob>`.
pub mod serde_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Prob], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(format).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Prob>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|r| parse(r).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats_integers_with_denominator() {
        assert_eq!(format(&one()), "1/1");
        assert_eq!(format(&zero()), "0/1");
        assert_eq!(format(&ratio(2, 4)), "1/2");
        assert_eq!(format(&ratio(-3, 6)), "-1/2");
    }

    #[test]
    fn parses_both_forms() {
        assert_eq!(parse("1/2").unwrap(), ratio(1, 2));
        assert_eq!(parse(" 3 ").unwrap(), from_int(3));
        assert_eq!(parse("-4/8").unwrap(), ratio(-1, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("0.5").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn integer_normalization_has_unit_gcd() {
        let v = vec![ratio(1, 2), ratio(-3, 4), zero()];
        assert_eq!(normalize_integer(&v), vec![from_int(2), from_int(-3), zero()]);
        let v = vec![from_int(6), from_int(-9)];
        assert_eq!(normalize_integer(&v), vec![from_int(2), from_int(-3)]);
        assert_eq!(normalize_integer(&[zero(), zero()]), vec![zero(), zero()]);
    }

    proptest! {
        #[test]
        fn format_parse_roundtrip(n in -10_000i64..10_000, d in 1i64..10_000) {
            let p = ratio(n, d);
            prop_assert_eq!(parse(&format(&p)).unwrap(), p);
        }
    }
}

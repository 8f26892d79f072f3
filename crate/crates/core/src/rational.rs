//! Exact rational arithmetic for exponent relations.
//!
//! Every exponent identity in the Strichartz/admissibility algebra is affine
//! in the *reciprocals* of the Lebesgue exponents, so all of it is carried
//! out over `Rational` and compared with `==`. Floating point enters only at
//! the boundary to the quadrature code, through [`Rational::to_f64`].

use num_rational::Ratio;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// A rational number stored in lowest terms with a positive denominator.
///
/// Backed by `num_rational::Ratio<i64>`; the exponent algebra never leaves
/// small denominators, so 64-bit components are plenty.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(Ratio<i64>);

/// Error raised when parsing or constructing a rational fails.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalError {
    #[error("denominator must be non-zero")]
    ZeroDenominator,
    #[error("malformed rational literal {0:?} (expected \"a\" or \"a/b\")")]
    Malformed(String),
}

impl Rational {
    /// Builds `numerator / denominator`, reduced, with the sign carried by
    /// the numerator.
    pub fn new(numerator: i64, denominator: i64) -> Result<Self, RationalError> {
        if denominator == 0 {
            return Err(RationalError::ZeroDenominator);
        }
        Ok(Rational(Ratio::new(numerator, denominator)))
    }

    pub const fn zero() -> Self {
        Rational(Ratio::new_raw(0, 1))
    }

    pub const fn one() -> Self {
        Rational(Ratio::new_raw(1, 1))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(Ratio::from_integer(n))
    }

    pub fn numerator(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denominator(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.numerator() == 0
    }

    pub fn is_negative(&self) -> bool {
        self.numerator() < 0
    }

    pub fn abs(&self) -> Self {
        Rational(Ratio::new(self.numerator().abs(), self.denominator()))
    }

    pub fn recip(&self) -> Result<Self, RationalError> {
        if self.is_zero() {
            return Err(RationalError::ZeroDenominator);
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator() as f64 / self.denominator() as f64
    }

    /// Shorthand for `Rational::new(n, d).unwrap()` with a compile-time-ish
    /// guarantee the caller passes a non-zero denominator.
    pub fn ratio(n: i64, d: i64) -> Self {
        Rational::new(n, d).expect("non-zero denominator")
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denominator() == 1 {
            write!(f, "{}", self.numerator())
        } else {
            write!(f, "{}/{}", self.numerator(), self.denominator())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Rational {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let malformed = || RationalError::Malformed(s.to_owned());
        match s.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| malformed())?;
                let d: i64 = d.trim().parse().map_err(|_| malformed())?;
                if d == 0 {
                    return Err(RationalError::ZeroDenominator);
                }
                Ok(Rational::ratio(n, d))
            }
            None => {
                let n: i64 = s.parse().map_err(|_| malformed())?;
                Ok(Rational::from_integer(n))
            }
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
    };
}

impl_binop!(Add, add);
impl_binop!(Sub, sub);
impl_binop!(Mul, mul);

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero rational");
        Rational(self.0 / rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduction_and_sign() {
        let r = Rational::new(-4, -6).unwrap();
        assert_eq!((r.numerator(), r.denominator()), (2, 3));
        let r = Rational::new(4, -6).unwrap();
        assert_eq!((r.numerator(), r.denominator()), (-2, 3));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert_eq!(Rational::new(1, 0), Err(RationalError::ZeroDenominator));
        assert_eq!(
            "1/0".parse::<Rational>(),
            Err(RationalError::ZeroDenominator)
        );
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["2/5", "-1/2", "3", "0", "-7"] {
            let r: Rational = s.parse().unwrap();
            assert_eq!(r.to_string(), s);
        }
        assert_eq!(" 21 / 30 ".parse::<Rational>().unwrap().to_string(), "7/10");
        assert!("a/b".parse::<Rational>().is_err());
    }

    #[test]
    fn serde_as_string() {
        let r = Rational::ratio(2, 5);
        assert_eq!(serde_json::to_string(&r).unwrap(), "\"2/5\"");
        let back: Rational = serde_json::from_str("\"4/10\"").unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn field_laws(a in -50i64..50, b in 1i64..50, c in -50i64..50, d in 1i64..50) {
            let x = Rational::ratio(a, b);
            let y = Rational::ratio(c, d);
            prop_assert_eq!(x + y, y + x);
            prop_assert_eq!(x * y, y * x);
            prop_assert_eq!(x + y - y, x);
            prop_assert!(x.denominator() > 0);
            prop_assert_eq!(
                num_integer::gcd(x.numerator().abs(), x.denominator()),
                if x.is_zero() { x.denominator() } else { 1 }
            );
        }
    }
}

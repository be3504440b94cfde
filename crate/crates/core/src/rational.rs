//! Exact rational arithmetic helpers.
//!
//! Every allocation produced by the combinatorial mechanisms is a matrix of
//! [`Rational`]s. On the wire a rational is a string `"p/q"` or a bare
//! integer (either as a JSON number or a string).

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

/// Arbitrary-precision rational number.
pub type Rational = num_rational::BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"p/q"`, `"p"` or a decimal-free integer string.
pub fn parse(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    Rational::from_str(s).map_err(|_| format!("invalid rational {s:?}"))
}

/// Least common multiple of the denominators of `values`.
pub fn denominator_lcm<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// via the continued-fraction convergents and their semiconvergents.
pub fn approximate(x: f64, max_den: u64) -> Rational {
    assert!(x.is_finite(), "cannot rationalize {x}");
    assert!(max_den >= 1);
    let negative = x < 0.0;
    let x = x.abs();

    // Convergents h/k.
    let (mut h_prev, mut h) = (0u128, 1u128);
    let (mut k_prev, mut k) = (1u128, 0u128);
    let mut rest = x;
    let max_den = max_den as u128;
    let mut best = (x.round() as u128, 1u128);
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e18 {
            break;
        }
        let a = a as u128;
        let h_next = a * h + h_prev;
        let k_next = a * k + k_prev;
        if k_next > max_den {
            // Largest semiconvergent that still fits.
            let t = (max_den - k_prev) / k;
            let semi = (t * h + h_prev, t * k + k_prev);
            let err = |(p, q): (u128, u128)| (p as f64 / q as f64 - x).abs();
            best = if t > 0 && err(semi) < err((h, k)) {
                semi
            } else {
                (h, k)
            };
            break;
        }
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
        best = (h, k);
        let fract = rest - a as f64;
        if fract < 1e-15 {
            break;
        }
        rest = 1.0 / fract;
    }
    let r = Rational::new(BigInt::from(best.0), BigInt::from(best.1));
    if negative {
        -r
    } else {
        r
    }
}

pub fn is_integer(r: &Rational) -> bool {
    r.is_integer()
}

pub fn non_negative(r: &Rational) -> bool {
    !r.is_negative()
}

pub fn sum<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Rational {
    values.into_iter().fold(Rational::zero(), |acc, v| acc + v)
}

struct RationalVisitor;

impl<'de> Visitor<'de> for RationalVisitor {
    type Value = Rational;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a rational as \"p/q\", \"p\" or an integer")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
        parse(v).map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
        Ok(int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
        Ok(Rational::from_integer(BigInt::from(v)))
    }
}

/// `#[serde(with = "rational::text")]` for a single rational.
pub mod text {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
struct Wire(#[serde(with = "text")] Rational);

/// `#[serde(with = "rational::vec")]`.
pub mod vec {
    use super::*;
    use serde::Deserialize;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| Wire(r.clone())))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw: Vec<Wire> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|w| w.0).collect())
    }
}

/// `#[serde(with = "rational::matrix")]`.
pub mod matrix {
    use super::*;
    use serde::Deserialize;

    pub fn serialize<S: Serializer>(m: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(
            m.iter()
                .map(|row| row.iter().map(|r| Wire(r.clone())).collect::<Vec<_>>()),
        )
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rational>>, D::Error> {
        let raw: Vec<Vec<Wire>> = Vec::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|row| row.into_iter().map(|w| w.0).collect())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse("3/6").unwrap(), frac(1, 2));
        assert_eq!(parse("7").unwrap(), int(7));
        assert_eq!(parse(" -2/4 ").unwrap(), frac(-1, 2));
        assert!(parse("0.5").is_err());
        assert!(parse("1/0").is_err());
    }

    #[test]
    fn json_accepts_strings_and_numbers() {
        let v: Wire = serde_json::from_str("\"5/10\"").unwrap();
        assert_eq!(v.0, frac(1, 2));
        let v: Wire = serde_json::from_str("4").unwrap();
        assert_eq!(v.0, int(4));
        assert_eq!(serde_json::to_string(&Wire(frac(2, 3))).unwrap(), "\"2/3\"");
        assert_eq!(serde_json::to_string(&Wire(int(2))).unwrap(), "\"2\"");
    }

    #[test]
    fn lcm_of_denominators() {
        let vals = [int(1), frac(1, 2), frac(2, 3)];
        assert_eq!(denominator_lcm(vals.iter()), BigInt::from(6));
    }

    #[test]
    fn approximation_respects_denominator_bound() {
        assert_eq!(approximate(0.5, 10), frac(1, 2));
        assert_eq!(approximate(1.0 / 3.0, 1_000_000), frac(1, 3));
        assert_eq!(approximate(std::f64::consts::PI, 1000), frac(355, 113));
        assert_eq!(approximate(-0.25, 100), frac(-1, 4));
        assert_eq!(approximate(0.0, 100), int(0));
        let r = approximate(0.123_456_789_123, 1_000_000);
        assert!(r.denom() <= &BigInt::from(1_000_000));
        assert!((to_f64(&r) - 0.123_456_789_123).abs() < 1e-6);
    }

    proptest::proptest! {
        #[test]
        fn approximation_error_bounded(x in 0.0f64..1.0) {
            let r = approximate(x, 1_000_000);
            proptest::prop_assert!(r.denom() <= &BigInt::from(1_000_000));
            proptest::prop_assert!((to_f64(&r) - x).abs() <= 1e-6);
        }

        #[test]
        fn text_round_trip(p in -1000i64..1000, q in 1i64..1000) {
            let r = frac(p, q);
            let s = serde_json::to_string(&Wire(r.clone())).unwrap();
            let back: Wire = serde_json::from_str(&s).unwrap();
            proptest::prop_assert_eq!(back.0, r);
        }
    }
}

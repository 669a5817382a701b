//! Scalar abstraction and exact rational helpers.
//!
//! The sparse-vector and linear-algebra layers are written against [`Scalar`],
//! so they run over `f64` as readily as over exact rationals. Everything that
//! certifies a value uses [`Rational`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign as BigSign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Ordered field element usable by the generic linear-algebra code.
pub trait Scalar: Clone + PartialOrd + Signed + fmt::Debug {
    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl<T> Scalar for T where T: Clone + PartialOrd + Signed + fmt::Debug {}

/// Arbitrary-precision rational in lowest terms with positive denominator.
pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^e` as an exact rational, for any sign of `e`.
pub fn pow2(e: i64) -> Rational {
    if e >= 0 {
        Rational::from_integer(BigInt::one() << (e as u64))
    } else {
        Rational::new_raw(BigInt::one(), BigInt::one() << ((-e) as u64))
    }
}

/// `r · 2^e` without a general gcd: only powers of two move between numerator
/// and denominator, so a reduced input stays reduced.
pub fn mul_pow2(r: &Rational, e: i64) -> Rational {
    if r.is_zero() || e == 0 {
        return r.clone();
    }
    let numer = r.numer().clone();
    let denom = r.denom().clone();
    if e > 0 {
        let e = e as u64;
        let tz = denom.trailing_zeros().unwrap_or(0);
        if tz >= e {
            Rational::new_raw(numer, denom >> e)
        } else {
            Rational::new_raw(numer << (e - tz), denom >> tz)
        }
    } else {
        let e = (-e) as u64;
        let tz = numer.trailing_zeros().unwrap_or(0);
        if tz >= e {
            Rational::new_raw(numer >> e, denom)
        } else {
            Rational::new_raw(numer >> tz, denom << (e - tz))
        }
    }
}

/// Exact comparison by cross multiplication.
///
/// `Ord` on `Ratio` walks a continued-fraction expansion, which is slow for the
/// multi-thousand-bit dyadic denominators produced by deep truncations.
pub fn cmp_rational(a: &Rational, b: &Rational) -> Ordering {
    match (a.numer().sign(), b.numer().sign()) {
        (x, y) if x != y => return sign_rank(x).cmp(&sign_rank(y)),
        (BigSign::NoSign, _) => return Ordering::Equal,
        _ => {}
    }
    if a.denom() == b.denom() {
        return a.numer().cmp(b.numer());
    }
    (a.numer() * b.denom()).cmp(&(b.numer() * a.denom()))
}

fn sign_rank(s: BigSign) -> i8 {
    match s {
        BigSign::Minus => -1,
        BigSign::NoSign => 0,
        BigSign::Plus => 1,
    }
}

pub fn rational_lt(a: &Rational, b: &Rational) -> bool {
    cmp_rational(a, b) == Ordering::Less
}

pub fn rational_le(a: &Rational, b: &Rational) -> bool {
    cmp_rational(a, b) != Ordering::Greater
}

/// Smallest integer `n ≥ r`, saturating at `u64::MAX`; negative inputs give 0.
pub fn ceil_u64(r: &Rational) -> u64 {
    if !r.is_positive() {
        return 0;
    }
    let c = r.numer().div_ceil(r.denom());
    u64::try_from(c).unwrap_or(u64::MAX)
}

/// True when the denominator is a power of two.
pub fn is_dyadic(r: &Rational) -> bool {
    let d = r.denom();
    let tz = d.trailing_zeros().unwrap_or(0);
    (d >> tz).is_one()
}

/// Parses `"p/q"` or `"p"`; `field` names the input location in diagnostics.
pub fn parse_rational(s: &str, field: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::parse(field, "empty rational"));
    }
    Rational::from_str(t).map_err(|e| Error::parse(field, format!("`{t}` is not a rational: {e}")))
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod rational_str {
    use super::Rational;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_rational(&s, "rational").map_err(de::Error::custom)
    }
}

/// Serde adapter for `BTreeMap<usize, Rational>` written as `{"i": "p/q"}`.
pub mod rational_map {
    use std::collections::BTreeMap;

    use super::Rational;
    use serde::ser::SerializeMap;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<usize, Rational>, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(&k.to_string(), &v.to_string())?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, Rational>, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        let mut out = BTreeMap::new();
        for (k, v) in raw {
            let idx: usize = k
                .parse()
                .map_err(|_| de::Error::custom(format!("index `{k}` is not a positive integer")))?;
            let val = super::parse_rational(&v, &k).map_err(de::Error::custom)?;
            out.insert(idx, val);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_pow2_matches_general_multiplication() {
        let cases = [rat(3, 4), rat(-5, 3), rat(7, 1), rat(1, 96), rat(-12, 1)];
        for r in &cases {
            for e in -9..=9 {
                assert_eq!(mul_pow2(r, e), r * pow2(e), "r = {r}, e = {e}");
            }
        }
    }

    #[test]
    fn cross_multiplication_order() {
        assert_eq!(cmp_rational(&rat(1, 3), &rat(1, 2)), Ordering::Less);
        assert_eq!(cmp_rational(&rat(-1, 3), &rat(-1, 2)), Ordering::Greater);
        assert_eq!(cmp_rational(&int(0), &rat(-1, 2)), Ordering::Greater);
        assert_eq!(cmp_rational(&rat(2, 4), &rat(1, 2)), Ordering::Equal);
    }

    #[test]
    fn ceil_and_dyadic() {
        assert_eq!(ceil_u64(&rat(7, 2)), 4);
        assert_eq!(ceil_u64(&int(3)), 3);
        assert_eq!(ceil_u64(&rat(-7, 2)), 0);
        assert!(is_dyadic(&rat(3, 64)));
        assert!(!is_dyadic(&rat(1, 3)));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert_eq!(parse_rational("-3", "f").unwrap(), int(-3));
        assert_eq!(parse_rational("6/8", "f").unwrap(), rat(3, 4));
        assert!(parse_rational("1/0", "f").is_err());
        assert!(parse_rational("x", "f").is_err());
    }
}

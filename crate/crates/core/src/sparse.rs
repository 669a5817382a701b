//! Finitely supported sequences and the c₀/ℓ¹ pairing.
//!
//! A [`SparseVec`] stands for an element of c₀₀ when used as a point or a
//! direction, and for a finitely supported element of ℓ¹ when used as a
//! functional. Indices are 1-based.

use std::collections::btree_map::{self, BTreeMap};
use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, Rational, Scalar};

/// Finitely supported sequence; zero entries are never stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct SparseVec<T> {
    entries: BTreeMap<usize, T>,
}

/// The sign function of the one-sided derivative formulas: `+1` on `t ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// `t` multiplied by this sign.
    pub fn apply<T: Scalar>(self, t: T) -> T {
        match self {
            Sign::Plus => t,
            Sign::Minus => -t,
        }
    }
}

/// `σ(t)`: `+1` when `t ≥ 0`, `−1` when `t < 0`.
pub fn sigma<T: Scalar>(t: &T) -> Sign {
    if t.is_negative() {
        Sign::Minus
    } else {
        Sign::Plus
    }
}

impl<T: Scalar> SparseVec<T> {
    pub fn zero() -> Self {
        SparseVec {
            entries: BTreeMap::new(),
        }
    }

    /// The unit vector `e_i`.
    pub fn unit(i: usize) -> Self {
        Self::from_entries([(i, T::one())])
    }

    /// Builds a vector, dropping zero entries and summing repeated indices.
    ///
    /// Panics on index 0.
    pub fn from_entries<I: IntoIterator<Item = (usize, T)>>(it: I) -> Self {
        let mut v = Self::zero();
        for (i, x) in it {
            let cur = v.get(i);
            v.set(i, cur + x);
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Entry at `i` (zero off the support).
    pub fn get(&self, i: usize) -> T {
        self.entries.get(&i).cloned().unwrap_or_else(T::zero)
    }

    pub fn get_ref(&self, i: usize) -> Option<&T> {
        self.entries.get(&i)
    }

    pub fn set(&mut self, i: usize, x: T) {
        assert!(i >= 1, "sequence indices are 1-based");
        if x.is_zero() {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, x);
        }
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.entries.keys().copied().collect()
    }

    pub fn max_support(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, usize, T> {
        self.entries.iter()
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        SparseVec {
            entries: self
                .entries
                .iter()
                .map(|(&i, x)| (i, x.clone() * c.clone()))
                .collect(),
        }
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: &T, other: &Self) -> Self {
        let mut out = self.clone();
        for (&i, y) in other.iter() {
            let v = out.get(i) + c.clone() * y.clone();
            out.set(i, v);
        }
        out
    }

    /// Restriction to the indices in `keep`.
    pub fn restrict(&self, keep: &BTreeSet<usize>) -> Self {
        SparseVec {
            entries: self
                .entries
                .iter()
                .filter(|(i, _)| keep.contains(i))
                .map(|(&i, x)| (i, x.clone()))
                .collect(),
        }
    }

    pub fn pair(&self, phi: &Self) -> T {
        pair(self, phi)
    }

    pub fn l1_norm(&self) -> T {
        l1_norm(self)
    }

    pub fn sup_norm(&self) -> T {
        sup_norm(self)
    }
}

/// `⟨x, φ⟩ = Σ x_i φ_i`, iterating over the smaller support.
pub fn pair<T: Scalar>(x: &SparseVec<T>, phi: &SparseVec<T>) -> T {
    let (small, large) = if x.nnz() <= phi.nnz() { (x, phi) } else { (phi, x) };
    small
        .iter()
        .filter_map(|(i, a)| large.get_ref(*i).map(|b| a.clone() * b.clone()))
        .fold(T::zero(), |acc, t| acc + t)
}

pub fn l1_norm<T: Scalar>(x: &SparseVec<T>) -> T {
    x.iter().fold(T::zero(), |acc, (_, v)| acc + v.abs())
}

pub fn sup_norm<T: Scalar>(x: &SparseVec<T>) -> T {
    x.iter().fold(T::zero(), |acc, (_, v)| {
        let a = v.abs();
        if a > acc {
            a
        } else {
            acc
        }
    })
}

impl<T: Scalar> Add for &SparseVec<T> {
    type Output = SparseVec<T>;
    fn add(self, rhs: Self) -> SparseVec<T> {
        self.axpy(&T::one(), rhs)
    }
}

impl<T: Scalar> Sub for &SparseVec<T> {
    type Output = SparseVec<T>;
    fn sub(self, rhs: Self) -> SparseVec<T> {
        self.axpy(&-T::one(), rhs)
    }
}

impl<T: Scalar> Neg for &SparseVec<T> {
    type Output = SparseVec<T>;
    fn neg(self) -> SparseVec<T> {
        SparseVec {
            entries: self.entries.iter().map(|(&i, x)| (i, -x.clone())).collect(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for SparseVec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, (i, x)) in self.entries.iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{i}: {x:?}")?;
        }
        f.write_str("}")
    }
}

impl SparseVec<Rational> {
    /// Parses the JSON object form `{"1": "1/2", "7": "-3"}`.
    pub fn from_json_value(v: &serde_json::Value, field: &str) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::parse(field, "expected an object mapping index to rational"))?;
        let mut out = SparseVec::zero();
        for (k, val) in obj {
            let loc = format!("{field}.{k}");
            let idx: usize = k
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| Error::parse(&loc, "index must be a positive integer"))?;
            let r = match val {
                serde_json::Value::String(s) => parse_rational(s, &loc)?,
                serde_json::Value::Number(n) if n.is_i64() => {
                    Rational::from_integer(n.as_i64().unwrap_or_default().into())
                }
                _ => return Err(Error::parse(&loc, "entry must be a rational string")),
            };
            out.set(idx, r);
        }
        Ok(out)
    }
}

impl Serialize for SparseVec<Rational> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.entries.len()))?;
        for (i, x) in &self.entries {
            map.serialize_entry(&i.to_string(), &x.to_string())?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for SparseVec<Rational> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = SparseVec<Rational>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object mapping positive indices to rational strings")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut m: A) -> Result<Self::Value, A::Error> {
                let mut out = SparseVec::zero();
                while let Some((k, v)) = m.next_entry::<String, String>()? {
                    let idx: usize = k
                        .parse()
                        .ok()
                        .filter(|&i| i >= 1)
                        .ok_or_else(|| de::Error::custom(format!("index `{k}` must be a positive integer")))?;
                    let r = parse_rational(&v, &k).map_err(de::Error::custom)?;
                    out.set(idx, r);
                }
                Ok(out)
            }
        }
        d.deserialize_map(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    type V = SparseVec<Rational>;

    fn v(entries: &[(usize, Rational)]) -> V {
        V::from_entries(entries.iter().cloned())
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(&V::unit(1), &V::unit(1)), int(1));
        assert_eq!(pair(&V::zero(), &v(&[(3, int(5))])), int(0));
        let x = v(&[(1, rat(1, 2)), (2, rat(1, 3))]);
        let phi = v(&[(1, int(2)), (2, int(-3))]);
        assert_eq!(pair(&x, &phi), int(0));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(l1_norm(&V::zero()), int(0));
        assert_eq!(l1_norm(&v(&[(1, int(1)), (2, int(-1))])), int(2));
        assert_eq!(l1_norm(&v(&[(5, rat(3, 4)), (7, rat(-1, 4))])), int(1));
        assert_eq!(sup_norm(&V::zero()), int(0));
        assert_eq!(sup_norm(&v(&[(1, int(2)), (3, int(-2))])), int(2));
        assert_eq!(sup_norm(&v(&[(2, rat(1, 3)), (9, rat(1, 2))])), rat(1, 2));
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(&int(0)), Sign::Plus);
        assert_eq!(sigma(&rat(-1, 7)), Sign::Minus);
        assert_eq!(sigma(&int(5)), Sign::Plus);
    }

    #[test]
    fn zero_entries_are_not_stored() {
        let mut x = v(&[(1, int(1)), (2, int(0))]);
        assert_eq!(x.support().into_iter().collect::<Vec<_>>(), vec![1]);
        x.set(1, int(0));
        assert!(x.is_zero());
        let y = &v(&[(4, int(2))]) - &v(&[(4, int(2))]);
        assert!(y.is_zero());
    }

    #[test]
    fn json_format() {
        let x = v(&[(1, rat(1, 2)), (7, int(-3))]);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"1":"1/2","7":"-3"}"#);
        let back: V = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<V>(r#"{"0":"1"}"#).is_err());
        assert!(serde_json::from_str::<V>(r#"{"2":"1/0"}"#).is_err());
    }

    #[test]
    fn generic_over_floats() {
        let x = SparseVec::<f64>::from_entries([(1, 0.5), (3, -2.0)]);
        let y = SparseVec::<f64>::from_entries([(3, 1.0)]);
        assert_eq!(pair(&x, &y), -2.0);
        assert_eq!(sup_norm(&x), 2.0);
        assert_eq!(l1_norm(&x), 2.5);
    }
}

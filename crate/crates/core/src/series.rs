//! Exact accumulator for sums of `r · 2^{-s}` with small-denominator `r`.
//!
//! Partial sums of the weighted series carry denominators near `2^{a_K²}`.
//! Keeping the power of two separate from a small odd denominator makes every
//! addition a shift plus a short multiplication, and makes reduction to lowest
//! terms cheap.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalar::Rational;

/// Value `numer / (odd_denom · 2^exp)`.
#[derive(Clone, Debug)]
pub struct DyadicSum {
    numer: BigInt,
    odd_denom: BigInt,
    exp: u64,
}

impl Default for DyadicSum {
    fn default() -> Self {
        Self::zero()
    }
}

fn split_denom(d: &BigInt) -> (BigInt, u64) {
    let tz = d.trailing_zeros().unwrap_or(0);
    (d >> tz, tz)
}

impl DyadicSum {
    pub fn zero() -> Self {
        DyadicSum {
            numer: BigInt::zero(),
            odd_denom: BigInt::one(),
            exp: 0,
        }
    }

    pub fn from_rational(r: &Rational) -> Self {
        let mut s = Self::zero();
        s.add_shifted(r, 0);
        s
    }

    fn add_parts(&mut self, numer: &BigInt, odd_denom: &BigInt, exp: u64) {
        if numer.is_zero() {
            return;
        }
        let new_odd = if &self.odd_denom == odd_denom {
            odd_denom.clone()
        } else {
            self.odd_denom.lcm(odd_denom)
        };
        let new_exp = self.exp.max(exp);
        let mut acc = std::mem::take(&mut self.numer);
        if !acc.is_zero() {
            if new_odd != self.odd_denom {
                acc *= &new_odd / &self.odd_denom;
            }
            acc <<= new_exp - self.exp;
        }
        let mut term = numer.clone();
        if &new_odd != odd_denom {
            term *= &new_odd / odd_denom;
        }
        term <<= new_exp - exp;
        self.numer = acc + term;
        self.odd_denom = new_odd;
        self.exp = new_exp;
    }

    /// `self += r · 2^{-shift}`.
    pub fn add_shifted(&mut self, r: &Rational, shift: u64) {
        let (odd, tz) = split_denom(r.denom());
        self.add_parts(r.numer(), &odd, tz + shift);
    }

    pub fn sub_shifted(&mut self, r: &Rational, shift: u64) {
        let (odd, tz) = split_denom(r.denom());
        self.add_parts(&-r.numer(), &odd, tz + shift);
    }

    pub fn add(&mut self, other: &DyadicSum) {
        self.add_parts(&other.numer, &other.odd_denom, other.exp);
    }

    pub fn sub(&mut self, other: &DyadicSum) {
        self.add_parts(&-&other.numer, &other.odd_denom, other.exp);
    }

    pub fn neg(&self) -> DyadicSum {
        DyadicSum {
            numer: -&self.numer,
            odd_denom: self.odd_denom.clone(),
            exp: self.exp,
        }
    }

    pub fn abs(&self) -> DyadicSum {
        DyadicSum {
            numer: self.numer.abs(),
            odd_denom: self.odd_denom.clone(),
            exp: self.exp,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.numer.is_zero()
    }

    pub fn signum(&self) -> Ordering {
        self.numer.cmp(&BigInt::zero())
    }

    pub fn cmp_sum(&self, other: &DyadicSum) -> Ordering {
        let mut d = self.clone();
        d.sub(other);
        d.signum()
    }

    /// Reduced rational value; only a gcd against the small odd part is needed.
    pub fn to_rational(&self) -> Rational {
        if self.numer.is_zero() {
            return Rational::zero();
        }
        let tz = self.numer.trailing_zeros().unwrap_or(0).min(self.exp);
        let numer = &self.numer >> tz;
        let exp = self.exp - tz;
        let g = numer.gcd(&self.odd_denom);
        Rational::new_raw(numer / &g, (&self.odd_denom / &g) << exp)
    }
}

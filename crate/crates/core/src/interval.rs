//! Certified real intervals with exact rational endpoints.
//!
//! Used only for the trigonometric values of the demo. Endpoints are rounded
//! outward to the dyadic grid `2^{-prec}` after each transcendental
//! evaluation so that sizes stay bounded.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::{cmp_rational, int, mul_pow2, pow2, rat, rational_str, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "rational_str")]
    pub lo: Rational,
    #[serde(with = "rational_str")]
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn point(r: Rational) -> Self {
        Interval { lo: r.clone(), hi: r }
    }

    /// `c ± r` for `r ≥ 0`.
    pub fn ball(c: &Rational, r: &Rational) -> Self {
        Interval {
            lo: c - r,
            hi: c + r,
        }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }

    pub fn contains(&self, t: &Rational) -> bool {
        &self.lo <= t && t <= &self.hi
    }

    /// `Greater` if certainly positive, `Less` if certainly negative.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo - &o.hi,
            hi: &self.hi - &o.lo,
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn scale(&self, c: &Rational) -> Interval {
        let (a, b) = (&self.lo * c, &self.hi * c);
        if c.is_negative() {
            Interval { lo: b, hi: a }
        } else {
            Interval { lo: a, hi: b }
        }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let products = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = products.iter().min_by(|a, b| cmp_rational(a, b)).cloned().unwrap_or_default();
        let hi = products.iter().max_by(|a, b| cmp_rational(a, b)).cloned().unwrap_or_default();
        Interval { lo, hi }
    }

    /// Endpoints rounded outward to multiples of `2^{-prec}`.
    pub fn round_outward(&self, prec: u64) -> Interval {
        let scale = BigInt::one() << prec;
        let lo = (&self.lo * Rational::from_integer(scale.clone())).floor().to_integer();
        let hi = (&self.hi * Rational::from_integer(scale.clone())).ceil().to_integer();
        Interval {
            lo: Rational::new(lo, scale.clone()),
            hi: Rational::new(hi, scale),
        }
    }

    fn clamp_unit(self) -> Interval {
        let one = Rational::one();
        Interval {
            lo: self.lo.max(-&one),
            hi: self.hi.min(one),
        }
    }
}

// atan(1/n) = Σ (-1)^j / ((2j+1) n^{2j+1}); alternating with decreasing terms,
// so the first omitted term bounds the error
fn atan_inv(n: i64, prec: u64) -> Interval {
    let eps = pow2(-(prec as i64) - 4);
    let n2 = BigInt::from(n * n);
    let mut power = BigInt::from(n);
    let mut sum = Rational::zero();
    let mut j: i64 = 0;
    loop {
        let term = Rational::new(BigInt::one(), BigInt::from(2 * j + 1) * &power);
        if term < eps {
            return Interval::ball(&sum, &term);
        }
        if j.is_even() {
            sum += term;
        } else {
            sum -= term;
        }
        power *= &n2;
        j += 1;
    }
}

/// `π` by Machin's formula `16 atan(1/5) − 4 atan(1/239)`.
pub fn pi(prec: u64) -> Interval {
    let a = atan_inv(5, prec).scale(&int(16));
    let b = atan_inv(239, prec).scale(&int(4));
    a.sub(&b).round_outward(prec)
}

// Taylor polynomial of sin (odd = true) or cos at c, with the Lagrange remainder
fn taylor(c: &Rational, odd: bool, prec: u64) -> Interval {
    let eps = pow2(-(prec as i64) - 4);
    let mut n: u64 = if odd { 1 } else { 0 };
    let mut term = if odd { c.clone() } else { Rational::one() };
    let mut sum = Rational::zero();
    let mut sign = true;
    loop {
        if sign {
            sum += &term;
        } else {
            sum -= &term;
        }
        sign = !sign;
        // next term c^{n+2}/(n+2)!
        term = term * c * c / Rational::from_integer(BigInt::from((n + 1) * (n + 2)));
        n += 2;
        // Lagrange remainder after degree n-1 is ≤ |c|^{n}/n!, i.e. |term|
        let remainder = term.abs();
        if remainder < eps {
            return Interval::ball(&sum, &remainder);
        }
    }
}

fn lipschitz_image(x: &Interval, odd: bool, prec: u64) -> Interval {
    let c = x.midpoint();
    let r = x.width() / int(2);
    let core = taylor(&c, odd, prec);
    Interval {
        lo: core.lo - &r,
        hi: core.hi + &r,
    }
    .clamp_unit()
    .round_outward(prec)
}

/// Certified enclosure of `sin x` over the whole interval.
pub fn sin(x: &Interval, prec: u64) -> Interval {
    lipschitz_image(x, true, prec)
}

/// Certified enclosure of `cos x` over the whole interval.
pub fn cos(x: &Interval, prec: u64) -> Interval {
    lipschitz_image(x, false, prec)
}

/// Nearest multiple of `2^{-bits}` to the midpoint; error at most
/// `width/2 + 2^{-bits-1}` from any point of the interval.
pub fn dyadic_midpoint(x: &Interval, bits: u64) -> Rational {
    let m = mul_pow2(&x.midpoint(), bits as i64);
    mul_pow2(&Rational::from_integer(m.round().to_integer()), -(bits as i64))
}

/// `r / d` as an interval multiple of `π`.
pub fn pi_multiple(r: i64, d: i64, prec: u64) -> Interval {
    pi(prec + 8).scale(&rat(r, d)).round_outward(prec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(x: &Interval) -> f64 {
        let m = x.midpoint();
        m.numer().to_string().parse::<f64>().unwrap() / m.denom().to_string().parse::<f64>().unwrap()
    }

    #[test]
    fn pi_is_enclosed() {
        let p = pi(64);
        // 3.14159265358979323846264338327950288...
        let lo = Rational::new(
            BigInt::parse_bytes(b"314159265358979323846", 10).unwrap(),
            BigInt::from(10).pow(20),
        );
        let hi = Rational::new(
            BigInt::parse_bytes(b"314159265358979323847", 10).unwrap(),
            BigInt::from(10).pow(20),
        );
        assert!(p.lo < hi && lo < p.hi);
        assert!(p.width() < pow2(-60));
    }

    #[test]
    fn sin_cos_known_values() {
        let p = pi(64);
        let s = sin(&p.scale(&rat(1, 6)), 64);
        assert!(s.contains(&rat(1, 2)));
        assert!(s.width() < pow2(-50));
        let c = cos(&p.scale(&rat(1, 3)), 64);
        assert!(c.contains(&rat(1, 2)));
        let c0 = cos(&Interval::point(int(0)), 64);
        assert!(c0.contains(&int(1)));
        let s2 = sin(&p.scale(&rat(1, 2)), 64);
        assert!(s2.contains(&int(1)));
        assert!((approx(&sin(&Interval::point(int(3)), 64)) - 3f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn pythagoras_is_consistent() {
        let p = pi(80);
        for k in 1..12 {
            let t = p.scale(&rat(k, 13));
            let s = sin(&t, 80);
            let c = cos(&t, 80);
            assert!(s.mul(&s).add(&c.mul(&c)).contains(&int(1)), "k = {k}");
        }
    }

    #[test]
    fn rounding_is_outward() {
        let x = Interval::new(rat(1, 3), rat(2, 3));
        let r = x.round_outward(10);
        assert!(r.lo <= x.lo && x.hi <= r.hi);
        assert!(r.width() < x.width() + pow2(-9));
    }

    #[test]
    fn sign_of_interval() {
        assert_eq!(Interval::new(rat(1, 9), int(1)).sign(), Some(Ordering::Greater));
        assert_eq!(Interval::new(int(-1), rat(-1, 9)).sign(), Some(Ordering::Less));
        assert_eq!(Interval::new(int(-1), int(1)).sign(), None);
    }
}

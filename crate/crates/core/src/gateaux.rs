//! One-sided Gâteaux derivatives in closed form.
//!
//! For the renormed norm the right derivative is
//! `d₊‖x;u‖ = d₊‖x;u‖₀ + Σ_k 2^{-a_k²} σ_k |⟨u, u_k − e_{a_k}⟩|` with
//! `σ_k = σ(⟨u, u_k − e_{a_k}⟩ ⟨x, u_k − e_{a_k}⟩)`. Every `σ_k` comes from
//! exact pairings; only the tail is enclosed, with radius
//! `‖u‖₀ · tail_bound(K)` on both sides.

use serde::{Deserialize, Serialize};

use num_traits::{One, Signed, Zero};

use crate::construction::ConstructionTable;
use crate::error::Result;
use crate::norm::DEFAULT_PRECISION_BITS;
use crate::scalar::{mul_pow2, rational_lt, rational_str, Rational, Scalar};
use crate::series::DyadicSum;
use crate::sparse::{sigma, Sign, SparseVec};
use crate::SparseRationalVec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignStatus {
    Positive,
    Negative,
    StraddlesZero,
}

impl SignStatus {
    pub fn of(lo: &Rational, hi: &Rational) -> Self {
        if lo.is_positive() {
            SignStatus::Positive
        } else if hi.is_negative() {
            SignStatus::Negative
        } else {
            SignStatus::StraddlesZero
        }
    }

    pub fn definite(self) -> Option<Sign> {
        match self {
            SignStatus::Positive => Some(Sign::Plus),
            SignStatus::Negative => Some(Sign::Minus),
            SignStatus::StraddlesZero => None,
        }
    }
}

/// Enclosure of a one-sided derivative with its certified sign.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivativeEnclosure {
    #[serde(with = "rational_str")]
    pub lo: Rational,
    #[serde(with = "rational_str")]
    pub hi: Rational,
    pub depth: usize,
    #[serde(rename = "sign")]
    pub sign_status: SignStatus,
}

impl DerivativeEnclosure {
    fn new(lo: Rational, hi: Rational, depth: usize) -> Self {
        let sign_status = SignStatus::of(&lo, &hi);
        DerivativeEnclosure {
            lo,
            hi,
            depth,
            sign_status,
        }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        mul_pow2(&(&self.lo + &self.hi), -1)
    }

    /// Interval reflection `t ↦ −t`.
    pub fn reflect(&self) -> Self {
        DerivativeEnclosure::new(-&self.hi, -&self.lo, self.depth)
    }

    pub fn contains(&self, t: &Rational) -> bool {
        !rational_lt(t, &self.lo) && !rational_lt(&self.hi, t)
    }
}

/// Right derivative of the sup norm `‖·‖₀` at `x` in direction `u`.
///
/// With `M = ‖x‖₀` and the maximizing set split into
/// `E₊ = {n : |x_n| = M, u_n x_n > 0}` and `E₋ = {n : |x_n| = M, u_n x_n ≤ 0}`,
/// the derivative is `max_{E₊} |u_n|` when `E₊ ≠ ∅`, else `−min_{E₋} |u_n|`.
/// At `x = 0` it is `‖u‖₀`.
pub fn d_plus_sup<T: Scalar>(x: &SparseVec<T>, u: &SparseVec<T>) -> T {
    if x.is_zero() {
        return u.sup_norm();
    }
    let m = x.sup_norm();
    let mut best_plus: Option<T> = None;
    let mut best_minus: Option<T> = None;
    for (&n, xn) in x.iter() {
        if xn.abs() != m {
            continue;
        }
        let un = u.get(n);
        let mag = un.abs();
        if (un * xn.clone()).is_positive() {
            if best_plus.as_ref().is_none_or(|b| mag > *b) {
                best_plus = Some(mag);
            }
        } else if best_minus.as_ref().is_none_or(|b| mag < *b) {
            best_minus = Some(mag);
        }
    }
    match (best_plus, best_minus) {
        (Some(p), _) => p,
        (None, Some(q)) => -q,
        (None, None) => unreachable!("a nonzero finitely supported x attains its sup"),
    }
}

/// Right derivative of `|⟨·, φ⟩|`: `|⟨u,φ⟩| · σ(⟨u,φ⟩⟨x,φ⟩)`.
pub fn d_plus_abs_functional<T: Scalar>(phi: &SparseVec<T>, x: &SparseVec<T>, u: &SparseVec<T>) -> T {
    let pu = u.pair(phi);
    let px = x.pair(phi);
    sigma(&(pu.clone() * px)).apply(pu.abs())
}

/// Exact partial sum of the right derivative through depth `K`.
pub(crate) fn d_plus_partial(
    table: &ConstructionTable,
    x: &SparseRationalVec,
    u: &SparseRationalVec,
    depth: usize,
) -> Result<DyadicSum> {
    let mut acc = DyadicSum::from_rational(&d_plus_sup(x, u));
    if u.is_zero() {
        return Ok(acc);
    }
    table.with_prefix(depth, |entries| {
        for e in entries {
            let pu = e.pairing(u);
            if pu.is_zero() {
                continue;
            }
            let px = e.pairing(x);
            let term = sigma(&(&pu * &px)).apply(pu.abs());
            acc.add_shifted(&term, e.weight_shift());
        }
    })?;
    Ok(acc)
}

/// Derivative enclosure truncated at exactly `depth` terms.
pub fn d_plus_at_depth(
    table: &ConstructionTable,
    x: &SparseRationalVec,
    u: &SparseRationalVec,
    depth: usize,
) -> Result<DerivativeEnclosure> {
    let partial = d_plus_partial(table, x, u, depth)?;
    let (mut lo, mut hi) = (partial.clone(), partial);
    if !u.is_zero() {
        let (coeff, shift) = table.tail_parts(depth)?;
        let radius = u.sup_norm() * coeff;
        lo.sub_shifted(&radius, shift);
        hi.add_shifted(&radius, shift);
    }
    Ok(DerivativeEnclosure::new(lo.to_rational(), hi.to_rational(), depth))
}

/// Right derivative `d₊‖x;u‖` enclosed to width below `2^{-precision_bits}`.
pub fn d_plus_read_norm(
    table: &ConstructionTable,
    x: &SparseRationalVec,
    u: &SparseRationalVec,
    precision_bits: u64,
) -> Result<DerivativeEnclosure> {
    table.check_precision(precision_bits)?;
    // the two-sided radius doubles the width
    let depth = table.depth_for(&u.sup_norm(), precision_bits + 1)?;
    d_plus_at_depth(table, x, u, depth)
}

/// Left derivative via `d₋‖x;u‖ = −d₊‖x;−u‖`.
pub fn d_minus_read_norm(
    table: &ConstructionTable,
    x: &SparseRationalVec,
    u: &SparseRationalVec,
    precision_bits: u64,
) -> Result<DerivativeEnclosure> {
    Ok(d_plus_read_norm(table, x, &-u, precision_bits)?.reflect())
}

pub fn d_minus_at_depth(
    table: &ConstructionTable,
    x: &SparseRationalVec,
    u: &SparseRationalVec,
    depth: usize,
) -> Result<DerivativeEnclosure> {
    Ok(d_plus_at_depth(table, x, &-u, depth)?.reflect())
}

/// Which one-sided derivative to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

/// Doubles the precision from `start_bits` until the enclosure has a definite
/// sign or the precision cap is reached; returns the last enclosure either way.
pub fn resolve_sign(
    table: &ConstructionTable,
    x: &SparseRationalVec,
    u: &SparseRationalVec,
    side: Side,
    start_bits: u64,
) -> Result<DerivativeEnclosure> {
    let cap = table.precision_cap();
    let mut bits = start_bits.clamp(1, cap);
    loop {
        let d = match side {
            Side::Right => d_plus_read_norm(table, x, u, bits)?,
            Side::Left => d_minus_read_norm(table, x, u, bits)?,
        };
        if d.sign_status != SignStatus::StraddlesZero || bits >= cap || u.is_zero() {
            return Ok(d);
        }
        bits = (bits * 2).min(cap);
    }
}

/// Both one-sided derivatives with definite signs where achievable.
pub fn derivative_pair(
    table: &ConstructionTable,
    x: &SparseRationalVec,
    u: &SparseRationalVec,
) -> Result<(DerivativeEnclosure, DerivativeEnclosure)> {
    Ok((
        resolve_sign(table, x, u, Side::Right, DEFAULT_PRECISION_BITS)?,
        resolve_sign(table, x, u, Side::Left, DEFAULT_PRECISION_BITS)?,
    ))
}

/// Lipschitz constant of the `k`-th summand: `1` for the sup-norm term
/// (`k = 0`), else `2^{-a_k²} ‖u_k − e_{a_k}‖₁ = 2^{-a_k²}(1 + ‖u_k‖₁)`.
pub fn lipschitz_bound(table: &ConstructionTable, k: usize) -> Result<Rational> {
    if k == 0 {
        return Ok(Rational::one());
    }
    let (u, a) = table.entry(k)?;
    Ok(mul_pow2(&(Rational::one() + u.l1_norm()), -((a * a) as i64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::read_norm;
    use crate::scalar::{int, pow2};

    type V = SparseRationalVec;

    fn v(entries: &[(usize, i64)]) -> V {
        SparseVec::from_entries(entries.iter().map(|&(i, x)| (i, int(x))))
    }

    #[test]
    fn sup_derivative_examples() {
        assert_eq!(d_plus_sup(&V::zero(), &v(&[(2, 3)])), int(3));
        let x = v(&[(1, 2), (2, -2), (3, 1)]);
        let u = v(&[(1, 1), (2, 1)]);
        assert_eq!(d_plus_sup(&x, &u), int(1));
        assert_eq!(d_plus_sup(&v(&[(1, 1)]), &v(&[(1, -1)])), int(-1));
        // a zero direction at the only maximizer counts toward E₋
        assert_eq!(d_plus_sup(&v(&[(1, 1)]), &v(&[(2, 5)])), int(0));
    }

    #[test]
    fn sup_derivative_against_difference_quotient() {
        // the sup norm is piecewise linear, so a small dyadic step is exact
        let x = v(&[(1, 2), (2, -2), (3, 1)]);
        let u = v(&[(1, 1), (2, 1)]);
        let h = pow2(-20);
        let fd = ((&x + &u.scale(&h)).sup_norm() - x.sup_norm()) / &h;
        assert_eq!(fd, d_plus_sup(&x, &u));
    }

    #[test]
    fn abs_functional_examples() {
        let e1 = V::unit(1);
        assert_eq!(d_plus_abs_functional(&e1, &e1, &e1), int(1));
        assert_eq!(d_plus_abs_functional(&e1, &e1, &-&e1), int(-1));
        let phi = v(&[(1, 1), (2, 1)]);
        let u = v(&[(1, -1), (2, 1)]);
        assert_eq!(d_plus_abs_functional(&phi, &e1, &u), int(0));
    }

    #[test]
    fn zero_direction() {
        let t = ConstructionTable::default();
        let d = d_plus_read_norm(&t, &V::unit(1), &V::zero(), 64).unwrap();
        assert_eq!((d.lo.clone(), d.hi.clone()), (int(0), int(0)));
        let d = d_minus_read_norm(&t, &V::unit(1), &V::zero(), 64).unwrap();
        assert_eq!((d.lo, d.hi), (int(0), int(0)));
    }

    #[test]
    fn derivative_at_origin_is_the_norm() {
        let t = ConstructionTable::default();
        let u = v(&[(1, 2), (3, -1)]);
        let d = d_plus_read_norm(&t, &V::zero(), &u, 64).unwrap();
        let n = read_norm(&t, &u, 64).unwrap();
        assert!(rational_lt(&d.lo, &n.hi) && rational_lt(&n.lo, &d.hi));
    }

    #[test]
    fn left_derivative_along_e1() {
        let t = ConstructionTable::default();
        let e1 = V::unit(1);
        let d = d_minus_read_norm(&t, &e1, &e1, 64).unwrap();
        assert_eq!(d.sign_status, SignStatus::Positive);
    }

    #[test]
    fn lipschitz_examples() {
        let t = ConstructionTable::default();
        assert_eq!(lipschitz_bound(&t, 0).unwrap(), int(1));
        let mut total = int(1);
        for k in 1..=100 {
            let l = lipschitz_bound(&t, k).unwrap();
            let a = t.a(k).unwrap();
            assert!(l <= int(1 + a as i64) * pow2(-((a * a) as i64)));
            total += l;
        }
        assert!(total < int(3));
    }
}

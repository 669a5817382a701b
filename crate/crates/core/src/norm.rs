//! Certified evaluation of the renormed norm
//! `‖x‖ = ‖x‖₀ + Σ_k 2^{-a_k²} |⟨x, u_k − e_{a_k}⟩|`.
//!
//! Partial sums are exact. The only error is truncation, and it is one-sided:
//! an enclosure at depth `K` is `[S_K, S_K + ‖x‖₀ · tail_bound(K)]`.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::construction::ConstructionTable;
use crate::error::{Error, Result};
use crate::scalar::{cmp_rational, rational_le, rational_lt, rational_str, Rational};
use crate::series::DyadicSum;
use crate::SparseRationalVec;

pub const DEFAULT_PRECISION_BITS: u64 = 64;

/// Exact rational interval `[lo, hi]` known to contain a series value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enclosure {
    #[serde(with = "rational_str")]
    pub lo: Rational,
    #[serde(with = "rational_str")]
    pub hi: Rational,
    /// Truncation index `K`.
    pub depth: usize,
}

impl Enclosure {
    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, t: &Rational) -> bool {
        rational_le(&self.lo, t) && rational_le(t, &self.hi)
    }

    pub fn intersects(&self, other: &Enclosure) -> bool {
        rational_le(&self.lo, &other.hi) && rational_le(&other.lo, &self.hi)
    }

    /// Certified `self < other`.
    pub fn strictly_below(&self, other: &Enclosure) -> bool {
        rational_lt(&self.hi, &other.lo)
    }
}

/// Exact `S_K` as an accumulator.
pub(crate) fn norm_partial(table: &ConstructionTable, x: &SparseRationalVec, depth: usize) -> Result<DyadicSum> {
    let mut acc = DyadicSum::from_rational(&x.sup_norm());
    if x.is_zero() {
        return Ok(acc);
    }
    table.with_prefix(depth, |entries| {
        for e in entries {
            let p = e.pairing(x);
            if !p.is_zero() {
                acc.add_shifted(&p.abs(), e.weight_shift());
            }
        }
    })?;
    Ok(acc)
}

/// Enclosure of `‖x‖` truncated at exactly `depth` terms.
pub fn norm_at_depth(table: &ConstructionTable, x: &SparseRationalVec, depth: usize) -> Result<Enclosure> {
    let partial = norm_partial(table, x, depth)?;
    let mut hi = partial.clone();
    if !x.is_zero() {
        let (coeff, shift) = table.tail_parts(depth)?;
        hi.add_shifted(&(x.sup_norm() * coeff), shift);
    }
    Ok(Enclosure {
        lo: partial.to_rational(),
        hi: hi.to_rational(),
        depth,
    })
}

/// Enclosure of `‖x‖` of width below `2^{-precision_bits}`, at the smallest
/// depth achieving it.
pub fn read_norm(table: &ConstructionTable, x: &SparseRationalVec, precision_bits: u64) -> Result<Enclosure> {
    table.check_precision(precision_bits)?;
    let depth = table.depth_for(&x.sup_norm(), precision_bits)?;
    norm_at_depth(table, x, depth)
}

/// Certified check of `‖x‖₀ ≤ ‖x‖ ≤ 3‖x‖₀` at the default precision.
pub fn equivalence_check(table: &ConstructionTable, x: &SparseRationalVec) -> Result<bool> {
    if x.is_zero() {
        return Err(Error::Precondition("equivalence check needs x ≠ 0".into()));
    }
    let enc = read_norm(table, x, DEFAULT_PRECISION_BITS)?;
    let sup = x.sup_norm();
    let three_sup = &sup * Rational::from_integer(3.into());
    Ok(rational_le(&sup, &enc.lo) && rational_le(&enc.hi, &three_sup))
}

/// Certified order between two norms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormOrder {
    Less,
    Greater,
    /// Not separated up to the precision cap; carries the larger residual width.
    Unknown(Rational),
}

#[derive(Clone, Debug)]
pub struct NormComparison {
    pub order: NormOrder,
    pub x: Enclosure,
    pub y: Enclosure,
}

/// Compares `‖x‖` with `‖y‖`, doubling the precision from `start_bits`
/// until the enclosures separate or the precision cap is reached.
pub fn compare_norms(
    table: &ConstructionTable,
    x: &SparseRationalVec,
    y: &SparseRationalVec,
    start_bits: u64,
) -> Result<NormComparison> {
    let cap = table.precision_cap();
    let mut bits = start_bits.clamp(1, cap);
    loop {
        let ex = read_norm(table, x, bits)?;
        let ey = read_norm(table, y, bits)?;
        if ex.strictly_below(&ey) {
            return Ok(NormComparison {
                order: NormOrder::Less,
                x: ex,
                y: ey,
            });
        }
        if ey.strictly_below(&ex) {
            return Ok(NormComparison {
                order: NormOrder::Greater,
                x: ex,
                y: ey,
            });
        }
        if x == y || bits >= cap {
            let (wx, wy) = (ex.width(), ey.width());
            let w = if cmp_rational(&wx, &wy) == Ordering::Less { wy } else { wx };
            return Ok(NormComparison {
                order: NormOrder::Unknown(w),
                x: ex,
                y: ey,
            });
        }
        bits = (bits * 2).min(cap);
    }
}

/// `less` when `‖x‖ < ‖y‖` is certified, `greater` for the reverse.
pub fn norm_difference_sign(table: &ConstructionTable, x: &SparseRationalVec, y: &SparseRationalVec) -> Result<NormOrder> {
    Ok(compare_norms(table, x, y, DEFAULT_PRECISION_BITS)?.order)
}

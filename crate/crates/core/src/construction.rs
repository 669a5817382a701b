//! The canonical stream of pairs `(u_k, a_k)` defining the renorming.
//!
//! `u_k` lists every finitely supported rational sequence infinitely often:
//! level `L` enumerates, in lexicographic order of (sorted support, entries),
//! all vectors of height at most `L`, where
//! `height(x) = max(max supp x, max |p| + q over entries p/q)` and
//! `height(0) = 1`. The stream is level 1, level 2, level 3, and so on.
//!
//! `a_k` is the least admissible choice:
//! `a_k = max(a_{k-1} + 1, max supp u_k + 1, ⌈‖u_k‖₁⌉)` (only the first term
//! when `u_k = 0`), with `a_0 = 0`.

use std::collections::BTreeSet;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{ceil_u64, pow2, rat, Rational};
use crate::sparse::SparseVec;
use crate::SparseRationalVec;

pub const DEFAULT_DEPTH_BUDGET: usize = 5000;
pub const DEFAULT_PRECISION_CAP: u64 = 1 << 18;

/// Resource limits that travel with the table. The enumeration itself is
/// fixed, so equal params always give identical tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionParams {
    /// Largest index `k` the table will materialize.
    pub depth_budget: usize,
    /// Largest enclosure precision, in bits, any adaptive routine may request.
    pub precision_cap: u64,
}

impl Default for ConstructionParams {
    fn default() -> Self {
        ConstructionParams {
            depth_budget: DEFAULT_DEPTH_BUDGET,
            precision_cap: DEFAULT_PRECISION_CAP,
        }
    }
}

/// One row of the table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub k: usize,
    pub u: SparseRationalVec,
    pub a: u64,
    pub level: usize,
}

impl Entry {
    /// Exponent `a_k²` of the weight `2^{-a_k²}`.
    pub fn weight_shift(&self) -> u64 {
        self.a * self.a
    }

    /// `u_k − e_{a_k}`.
    pub fn functional(&self) -> SparseRationalVec {
        let mut f = self.u.clone();
        let i = self.a as usize;
        let v = f.get(i) - Rational::one();
        f.set(i, v);
        f
    }

    /// `⟨x, u_k − e_{a_k}⟩`.
    pub fn pairing(&self, x: &SparseRationalVec) -> Rational {
        self.u.pair(x) - x.get(self.a as usize)
    }
}

/// `height(x)`; `height(0) = 1`.
pub fn height(x: &SparseRationalVec) -> u64 {
    let mut h = x.max_support().map_or(1, |m| m as u64);
    for (_, r) in x.iter() {
        let e = r.numer().abs() + r.denom();
        let e = u64::try_from(e).unwrap_or(u64::MAX);
        h = h.max(e);
    }
    h
}

/// Nonzero rationals `p/q` in lowest terms with `|p| + q ≤ level`, ascending.
pub fn rationals_of_height(level: usize) -> Vec<Rational> {
    let l = level as i64;
    let mut out = Vec::new();
    for q in 1..l {
        for p in 1..=(l - q) {
            if p.gcd(&q) == 1 {
                out.push(rat(p, q));
                out.push(rat(-p, q));
            }
        }
    }
    out.sort();
    out
}

/// Resumable walk over one enumeration level.
#[derive(Clone, Debug)]
pub struct LevelIter {
    level: usize,
    rats: Vec<Rational>,
    support: Vec<usize>,
    digits: Vec<usize>,
    started: bool,
    done: bool,
}

impl LevelIter {
    pub fn new(level: usize) -> Self {
        LevelIter {
            level,
            rats: rationals_of_height(level),
            support: Vec::new(),
            digits: Vec::new(),
            started: false,
            done: false,
        }
    }

    fn current(&self) -> SparseRationalVec {
        SparseVec::from_entries(
            self.support
                .iter()
                .zip(&self.digits)
                .map(|(&i, &d)| (i, self.rats[d].clone())),
        )
    }

    fn advance_support(&mut self) -> bool {
        match self.support.last().copied() {
            None => {
                if self.level == 0 {
                    return false;
                }
                self.support.push(1);
            }
            Some(last) if last < self.level => self.support.push(last + 1),
            Some(_) => {
                self.support.pop();
                match self.support.last_mut() {
                    None => return false,
                    Some(last) => *last += 1,
                }
            }
        }
        self.digits = vec![0; self.support.len()];
        true
    }

    fn advance_digits(&mut self) -> bool {
        for d in self.digits.iter_mut().rev() {
            if *d + 1 < self.rats.len() {
                *d += 1;
                return true;
            }
            *d = 0;
        }
        false
    }
}

impl Iterator for LevelIter {
    type Item = SparseRationalVec;

    fn next(&mut self) -> Option<SparseRationalVec> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(SparseVec::zero());
        }
        if self.rats.is_empty() {
            self.done = true;
            return None;
        }
        if !self.support.is_empty() && self.advance_digits() {
            return Some(self.current());
        }
        if self.advance_support() {
            Some(self.current())
        } else {
            self.done = true;
            None
        }
    }
}

#[derive(Debug)]
struct Inner {
    entries: Vec<Entry>,
    level: usize,
    iter: LevelIter,
}

/// Append-only cache of the stream, shared across threads.
#[derive(Debug)]
pub struct ConstructionTable {
    params: ConstructionParams,
    inner: RwLock<Inner>,
}

impl Default for ConstructionTable {
    fn default() -> Self {
        Self::new(ConstructionParams::default())
    }
}

impl ConstructionTable {
    pub fn new(params: ConstructionParams) -> Self {
        ConstructionTable {
            params,
            inner: RwLock::new(Inner {
                entries: Vec::new(),
                level: 1,
                iter: LevelIter::new(1),
            }),
        }
    }

    pub fn params(&self) -> ConstructionParams {
        self.params
    }

    pub fn depth_budget(&self) -> usize {
        self.params.depth_budget
    }

    pub fn precision_cap(&self) -> u64 {
        self.params.precision_cap
    }

    pub fn check_precision(&self, bits: u64) -> Result<()> {
        if bits > self.params.precision_cap {
            return Err(Error::budget(format!("precision of {bits} bits"), self.params.precision_cap));
        }
        Ok(())
    }

    fn check_depth(&self, k: usize) -> Result<()> {
        if k > self.params.depth_budget {
            return Err(Error::budget(format!("table index {k}"), self.params.depth_budget as u64));
        }
        Ok(())
    }

    /// Makes sure entries `1..=k` are cached.
    pub fn ensure(&self, k: usize) -> Result<()> {
        self.check_depth(k)?;
        if self.inner.read().expect("table lock").entries.len() >= k {
            return Ok(());
        }
        let mut inner = self.inner.write().expect("table lock");
        while inner.entries.len() < k {
            let u = loop {
                if let Some(u) = inner.iter.next() {
                    break u;
                }
                inner.level += 1;
                inner.iter = LevelIter::new(inner.level);
            };
            let prev = inner.entries.last().map_or(0, |e| e.a);
            let mut a = prev + 1;
            if let Some(m) = u.max_support() {
                a = a.max(m as u64 + 1).max(ceil_u64(&u.l1_norm()));
            }
            let entry = Entry {
                k: inner.entries.len() + 1,
                u,
                a,
                level: inner.level,
            };
            assert!(entry.a > prev, "a_k must increase strictly");
            if let Some(m) = entry.u.max_support() {
                assert!(entry.a > m as u64, "a_k must exceed max supp u_k");
                assert!(
                    Rational::from_integer(BigInt::from(entry.a)) >= entry.u.l1_norm(),
                    "a_k must dominate the l1 norm of u_k"
                );
            }
            inner.entries.push(entry);
        }
        Ok(())
    }

    /// The `k`-th pair `(u_k, a_k)`, `k ≥ 1`.
    pub fn entry(&self, k: usize) -> Result<(SparseRationalVec, u64)> {
        if k == 0 {
            return Err(Error::Precondition("table indices start at 1".into()));
        }
        self.ensure(k)?;
        let inner = self.inner.read().expect("table lock");
        let e = &inner.entries[k - 1];
        Ok((e.u.clone(), e.a))
    }

    /// `a_k`, with `a_0 = 0`.
    pub fn a(&self, k: usize) -> Result<u64> {
        if k == 0 {
            return Ok(0);
        }
        self.ensure(k)?;
        Ok(self.inner.read().expect("table lock").entries[k - 1].a)
    }

    /// Runs `f` on the cached rows `1..=k`.
    pub fn with_prefix<R>(&self, k: usize, f: impl FnOnce(&[Entry]) -> R) -> Result<R> {
        self.ensure(k)?;
        let inner = self.inner.read().expect("table lock");
        Ok(f(&inner.entries[..k]))
    }

    pub fn prefix(&self, k: usize) -> Result<Vec<Entry>> {
        self.with_prefix(k, |e| e.to_vec())
    }

    /// Indices `k ≤ k_max` with `u_k = x`.
    pub fn occurrences(&self, x: &SparseRationalVec, k_max: usize) -> Result<Vec<usize>> {
        self.with_prefix(k_max, |es| es.iter().filter(|e| &e.u == x).map(|e| e.k).collect())
    }

    /// The visible prefix `{a_k : k ≤ k_max, u_k = x}` of `A_x`.
    pub fn a_set(&self, x: &SparseRationalVec, k_max: usize) -> Result<BTreeSet<u64>> {
        self.with_prefix(k_max, |es| es.iter().filter(|e| &e.u == x).map(|e| e.a).collect())
    }

    /// Rational upper bound for `Σ_{k>K} 2^{-a_k²}(1 + a_k)`.
    ///
    /// The `a_k` with `k > K` are distinct integers `≥ m = a_K + 1`, and the
    /// ratio of consecutive terms of `Σ_{n≥m} (1+n) 2^{-n²}` is at most `1/4`,
    /// so the tail is at most `(4/3)(1+m) 2^{-m²}`.
    pub fn tail_bound(&self, k: usize) -> Result<Rational> {
        let m = self.a(k)? + 1;
        Ok(tail_majorant(m))
    }

    /// `tail_bound(k)` split as `coeff · 2^{-shift}`.
    pub fn tail_parts(&self, k: usize) -> Result<(Rational, u64)> {
        let m = self.a(k)? + 1;
        Ok((rat(4 * (1 + m as i64), 3), m * m))
    }

    /// Smallest `K` with `scale · tail_bound(K) < 2^{-bits}`.
    pub fn depth_for(&self, scale: &Rational, bits: u64) -> Result<usize> {
        if scale.is_zero() {
            return Ok(0);
        }
        let mut k = 0;
        loop {
            let m = self.a(k)? + 1;
            if tail_below(scale, m, bits) {
                return Ok(k);
            }
            k += 1;
            self.check_depth(k)?;
        }
    }
}

/// `(4/3)(1+m) 2^{-m²}`.
pub fn tail_majorant(m: u64) -> Rational {
    rat(4 * (1 + m as i64), 3) * pow2(-((m * m) as i64))
}

/// `scale · (4/3)(1+m) 2^{-m²} < 2^{-bits}`, decided exactly.
fn tail_below(scale: &Rational, m: u64, bits: u64) -> bool {
    // 4(1+m)·num·2^bits < 3·den·2^{m²}
    let num = scale.numer().abs();
    let den = scale.denom();
    let lhs_min_bits = num.bits() + 2 + bits;
    let rhs_max_bits = den.bits() + 2 + m * m;
    if lhs_min_bits > rhs_max_bits + 1 {
        return false;
    }
    let lhs = (num * BigInt::from(4 * (1 + m))) << bits;
    let rhs = (den * BigInt::from(3u32)) << (m * m);
    lhs < rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;

    fn v(entries: &[(usize, Rational)]) -> SparseRationalVec {
        SparseVec::from_entries(entries.iter().cloned())
    }

    #[test]
    fn first_entries() {
        let t = ConstructionTable::default();
        let (u1, a1) = t.entry(1).unwrap();
        assert!(u1.is_zero());
        assert_eq!(a1, 1);
        // level 2 in order: 0, -e1, e1, (-1,-1), (-1,1), (1,-1), (1,1), -e2, e2
        let expect = [
            v(&[]),
            v(&[(1, int(-1))]),
            v(&[(1, int(1))]),
            v(&[(1, int(-1)), (2, int(-1))]),
            v(&[(1, int(-1)), (2, int(1))]),
            v(&[(1, int(1)), (2, int(-1))]),
            v(&[(1, int(1)), (2, int(1))]),
            v(&[(2, int(-1))]),
            v(&[(2, int(1))]),
        ];
        for (j, e) in expect.iter().enumerate() {
            assert_eq!(&t.entry(j + 2).unwrap().0, e, "k = {}", j + 2);
        }
        assert_eq!(t.entry(2).unwrap(), t.entry(2).unwrap());
    }

    #[test]
    fn level_sizes() {
        assert_eq!(LevelIter::new(1).count(), 1);
        assert_eq!(LevelIter::new(2).count(), 9);
        assert_eq!(LevelIter::new(3).count(), 343);
        assert_eq!(LevelIter::new(4).count(), 11usize.pow(4));
    }

    #[test]
    fn heights_within_level() {
        for l in 1..=3 {
            for x in LevelIter::new(l) {
                assert!(height(&x) <= l as u64);
            }
        }
    }

    #[test]
    fn depth_budget_trips() {
        let t = ConstructionTable::new(ConstructionParams {
            depth_budget: 10,
            ..Default::default()
        });
        assert!(t.entry(10).is_ok());
        assert!(t.entry(11).unwrap_err().is_budget());
        assert!(t.entry(0).is_err());
    }

    #[test]
    fn tail_bound_examples() {
        let t = ConstructionTable::default();
        assert!(t.tail_bound(0).unwrap() < int(2));
        let mut prev = t.tail_bound(0).unwrap();
        for k in 1..30 {
            let cur = t.tail_bound(k).unwrap();
            assert!(cur < prev);
            prev = cur;
        }
    }

    #[test]
    fn depth_for_is_minimal() {
        let t = ConstructionTable::default();
        let scale = rat(3, 2);
        for bits in [8u64, 64, 200] {
            let k = t.depth_for(&scale, bits).unwrap();
            let target = pow2(-(bits as i64));
            assert!(&scale * t.tail_bound(k).unwrap() < target);
            if k > 0 {
                assert!(&scale * t.tail_bound(k - 1).unwrap() >= target);
            }
        }
    }
}

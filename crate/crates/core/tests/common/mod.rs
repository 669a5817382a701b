//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use proxinorm::scalar::rat;
use proxinorm::{Rational, SparseRationalVec, SparseVec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nonzero `p/q` with `|p| ≤ max_num`, `1 ≤ q ≤ max_den`.
pub fn rational(rng: &mut ChaCha8Rng, max_num: i64, max_den: i64) -> Rational {
    let p = rng.gen_range(1..=max_num) * if rng.gen_bool(0.5) { 1 } else { -1 };
    rat(p, rng.gen_range(1..=max_den))
}

/// Nonzero vector with up to `max_terms` entries on `1..=max_index`.
pub fn sparse(rng: &mut ChaCha8Rng, max_index: usize, max_terms: usize) -> SparseRationalVec {
    let mut idx: Vec<usize> = (1..=max_index).collect();
    idx.shuffle(rng);
    let n = rng.gen_range(1..=max_terms.min(max_index));
    SparseVec::from_entries(idx[..n].iter().map(|&i| (i, rational(rng, 20, 12))))
}

/// Vector of height at most 3 (support in {1, 2}, entries in ±{1/2, 1, 2}),
/// so it occurs in every enumeration level from 3 on.
pub fn low_height(rng: &mut ChaCha8Rng) -> SparseRationalVec {
    let values = [rat(1, 2), rat(1, 1), rat(2, 1), rat(-1, 2), rat(-1, 1), rat(-2, 1)];
    loop {
        let v = SparseVec::from_entries((1..=2).filter_map(|i| {
            rng.gen_bool(0.7).then(|| (i, values.choose(rng).cloned().unwrap_or_default()))
        }));
        if !v.is_zero() {
            return v;
        }
    }
}

/// Determinant by the Leibniz permutation expansion.
pub fn leibniz_det(m: &[Vec<i64>]) -> BigInt {
    fn perms(n: usize) -> Vec<(Vec<usize>, i64)> {
        if n == 0 {
            return vec![(vec![], 1)];
        }
        let mut out = Vec::new();
        for (p, s) in perms(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                // inserting at `pos` moves n-1 past len-pos elements
                let sign = if (p.len() - pos) % 2 == 0 { s } else { -s };
                out.push((q, sign));
            }
        }
        out
    }
    let n = m.len();
    perms(n)
        .into_iter()
        .map(|(p, s)| {
            let prod = (0..n).fold(BigInt::one(), |acc, r| acc * m[r][p[r]]);
            prod * s
        })
        .fold(BigInt::zero(), |a, b| a + b)
}

/// `|det|` by fraction-free row reduction over integers.
pub fn bareiss_abs_det(m: &[Vec<i64>]) -> BigInt {
    let n = m.len();
    let mut a: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => a.swap(k, r),
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    a[n - 1][n - 1].abs()
}

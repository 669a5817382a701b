//! Approximate linearity of the right derivative on sparse index sets.
//!
//! Given `x` and finitely supported `z_1, …, z_m` with `⟨x, z_j⟩ ≠ 0`, let
//! `A` collect the `a_k` with `u_k ∈ {z_j}`. After removing a finite set of
//! indices (maximizers of `|x_n|`, supports of the `z_j`, and indices where
//! `|x_{a_k}| ≥ |⟨x, z_j⟩|`), the remaining cofinite `A₀` carries
//!
//! * `γ_i = −2^{-a_k²} σ(⟨x, z_j⟩)` for `i = a_k`, `u_k = z_j`;
//! * `ε_i = 2^{a_k²} Σ_{l>k} 2^{-a_l²}`;
//!
//! and every `v` supported on `A₀` satisfies
//! `|d₊‖x;v‖ − ⟨v,γ⟩| ≤ Σ ε_i |v_i γ_i|`.
//!
//! Only a prefix `k ≤ M` of `A` is materialized. `ε_i` is an infinite sum, so
//! the report stores a certified lower bound (50 exact terms) and a certified
//! upper bound (the same terms plus a geometric majorant of the rest).

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::construction::{ConstructionTable, Entry};
use crate::error::{Error, Result};
use crate::gateaux::d_plus_partial;
use crate::linalg::{feasible, Feasibility, LinearSystem};
use crate::norm::Enclosure;
use crate::scalar::{mul_pow2, rat, rational_map, rational_str, Rational};
use crate::series::DyadicSum;
use crate::sparse::{sigma, Sign, SparseVec};
use crate::SparseRationalVec;

/// Exact terms used for the lower bound of each `ε_i`.
pub const EPSILON_TERMS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason", content = "z")]
pub enum ExclusionReason {
    /// `|x_i| = ‖x‖₀`.
    MaxSet,
    /// `i ∈ supp z_j` (0-based `j`).
    SupportOfZ(usize),
    /// `|x_i| ≥ |⟨x, z_j⟩|` for the block's own `z_j`.
    LargeCoordinate(usize),
}

/// Which `z_j` produced `i = a_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub k: usize,
    pub z: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub index: usize,
    pub reasons: Vec<ExclusionReason>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub v: SparseRationalVec,
    pub lhs: Enclosure,
    #[serde(with = "rational_str")]
    pub rhs: Rational,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproxLinearityReport {
    pub x: SparseRationalVec,
    pub z_list: Vec<SparseRationalVec>,
    /// Table depth `M` of the prefix.
    pub depth: usize,
    /// `A ∩ {a_k : k ≤ M}` with the block each index belongs to.
    pub a_prefix: BTreeMap<usize, BlockEntry>,
    pub excluded: Vec<Exclusion>,
    pub a0_prefix: BTreeSet<usize>,
    /// Every exclusion lies at or below this index, so `A₀` contains all of
    /// `A` beyond it.
    pub cofinite_beyond: usize,
    #[serde(with = "rational_map")]
    pub gamma: BTreeMap<usize, Rational>,
    #[serde(with = "rational_map")]
    pub epsilon_lower: BTreeMap<usize, Rational>,
    #[serde(with = "rational_map")]
    pub epsilon_upper: BTreeMap<usize, Rational>,
    #[serde(default)]
    pub trials: Vec<Trial>,
}

impl ApproxLinearityReport {
    fn block(&self, i: usize) -> Result<BlockEntry> {
        self.a_prefix
            .get(&i)
            .copied()
            .ok_or_else(|| Error::Precondition(format!("index {i} is not in the A prefix")))
    }

    /// `σ(⟨x, z_j⟩)` for the block containing `i`.
    pub fn block_sign(&self, i: usize) -> Result<Sign> {
        let b = self.block(i)?;
        Ok(sigma(&self.x.pair(&self.z_list[b.z])))
    }

    /// γ restricted to `indices` as a functional.
    pub fn gamma_functional(&self, indices: &BTreeSet<usize>) -> SparseRationalVec {
        SparseVec::from_entries(
            indices
                .iter()
                .filter_map(|i| self.gamma.get(i).map(|g| (*i, g.clone()))),
        )
    }

    fn require_on_a0(&self, v: &SparseRationalVec) -> Result<()> {
        match v.support().into_iter().find(|i| !self.a0_prefix.contains(i)) {
            Some(i) => Err(Error::Precondition(format!("direction has index {i} outside the A0 prefix"))),
            None => Ok(()),
        }
    }
}

/// Derivative bookkeeping for `x` and `z_list` over the table prefix `k ≤ depth`.
pub fn build_report(
    table: &ConstructionTable,
    x: &SparseRationalVec,
    z_list: &[SparseRationalVec],
    depth: usize,
) -> Result<ApproxLinearityReport> {
    for (j, z) in z_list.iter().enumerate() {
        if x.pair(z).is_zero() {
            return Err(Error::Hypothesis(format!("<x, z_{}> = 0", j + 1)));
        }
        if z_list[..j].contains(z) {
            return Err(Error::Precondition(format!("z_{} repeats an earlier z", j + 1)));
        }
    }
    // ε bounds look EPSILON_TERMS rows past the prefix
    let lookahead = depth + EPSILON_TERMS + 1;
    table.ensure(lookahead)?;

    let mut a_prefix = BTreeMap::new();
    table.with_prefix(depth, |entries| {
        for e in entries {
            if let Some(j) = z_list.iter().position(|z| z == &e.u) {
                a_prefix.insert(e.a as usize, BlockEntry { k: e.k, z: j });
            }
        }
    })?;

    let sup = x.sup_norm();
    let pairings: Vec<Rational> = z_list.iter().map(|z| x.pair(z)).collect();
    let mut excluded = Vec::new();
    let mut a0_prefix = BTreeSet::new();
    for (&i, b) in &a_prefix {
        let xi = x.get(i).abs();
        let mut reasons = Vec::new();
        if !x.is_zero() && xi == sup {
            reasons.push(ExclusionReason::MaxSet);
        }
        for (j, z) in z_list.iter().enumerate() {
            if z.get_ref(i).is_some() {
                reasons.push(ExclusionReason::SupportOfZ(j));
            }
        }
        if xi >= pairings[b.z].abs() {
            reasons.push(ExclusionReason::LargeCoordinate(b.z));
        }
        if reasons.is_empty() {
            a0_prefix.insert(i);
        } else {
            excluded.push(Exclusion { index: i, reasons });
        }
    }
    let cofinite_beyond = x
        .max_support()
        .into_iter()
        .chain(z_list.iter().filter_map(|z| z.max_support()))
        .max()
        .unwrap_or(0);

    let mut gamma = BTreeMap::new();
    let mut epsilon_lower = BTreeMap::new();
    let mut epsilon_upper = BTreeMap::new();
    table.with_prefix(lookahead, |entries| {
        for &i in &a0_prefix {
            let b = a_prefix[&i];
            let a = entries[b.k - 1].a;
            let s = sigma(&pairings[b.z]);
            gamma.insert(i, mul_pow2(&s.flip().apply(Rational::one()), -((a * a) as i64)));
            let (lo, hi) = epsilon_bounds(entries, b.k);
            epsilon_lower.insert(i, lo.to_rational());
            epsilon_upper.insert(i, hi.to_rational());
        }
    })?;

    Ok(ApproxLinearityReport {
        x: x.clone(),
        z_list: z_list.to_vec(),
        depth,
        a_prefix,
        excluded,
        a0_prefix,
        cofinite_beyond,
        gamma,
        epsilon_lower,
        epsilon_upper,
        trials: Vec::new(),
    })
}

/// `ε_i` bounds for `i = a_k`: the first `EPSILON_TERMS` terms of
/// `2^{a_k²} Σ_{l>k} 2^{-a_l²}`, and those plus `2^{a_k²}(8/7)2^{-m²}` with
/// `m = a_{k+50} + 1`.
///
/// Consecutive terms of `Σ_{n≥m} 2^{-n²}` shrink by at least `1/8`, which
/// gives the `(8/7)` majorant.
fn epsilon_bounds(entries: &[Entry], k: usize) -> (DyadicSum, DyadicSum) {
    let base = entries[k - 1].weight_shift();
    let one = Rational::one();
    let mut lo = DyadicSum::zero();
    for e in &entries[k..k + EPSILON_TERMS] {
        lo.add_shifted(&one, e.weight_shift() - base);
    }
    let m = entries[k + EPSILON_TERMS - 1].a + 1;
    let mut hi = lo.clone();
    hi.add_shifted(&rat(8, 7), m * m - base);
    (lo, hi)
}

/// `Σ_i |v_i| · ε_i |γ_i|` with `ε` replaced by its lower or upper bound.
fn error_budget(
    table: &ConstructionTable,
    report: &ApproxLinearityReport,
    v: &SparseRationalVec,
    upper: bool,
) -> Result<DyadicSum> {
    let max_k = v
        .iter()
        .map(|(i, _)| report.block(*i).map(|b| b.k))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    let mut total = DyadicSum::zero();
    table.with_prefix(max_k + EPSILON_TERMS + 1, |entries| -> Result<()> {
        for (&i, vi) in v.iter() {
            let b = report.block(i)?;
            let mag = vi.abs();
            for e in &entries[b.k..b.k + EPSILON_TERMS] {
                total.add_shifted(&mag, e.weight_shift());
            }
            if upper {
                let m = entries[b.k + EPSILON_TERMS - 1].a + 1;
                total.add_shifted(&(&mag * rat(8, 7)), m * m);
            }
        }
        Ok(())
    })??;
    Ok(total)
}

/// `⟨v, γ⟩` as an exact accumulator.
fn gamma_pairing(table: &ConstructionTable, report: &ApproxLinearityReport, v: &SparseRationalVec) -> Result<DyadicSum> {
    let mut acc = DyadicSum::zero();
    for (&i, vi) in v.iter() {
        let b = report.block(i)?;
        let (_, a) = table.entry(b.k)?;
        let s = report.block_sign(i)?;
        acc.add_shifted(&s.flip().apply(vi.clone()), a * a);
    }
    Ok(acc)
}

/// Exact margin `|⟨v,γ⟩| − Σ ε_i |v_i γ_i|` using the upper bound of `ε`.
pub fn coherence_margin(
    table: &ConstructionTable,
    report: &ApproxLinearityReport,
    v: &SparseRationalVec,
) -> Result<Rational> {
    report.require_on_a0(v)?;
    let mut m = gamma_pairing(table, report, v)?.abs();
    m.sub(&error_budget(table, report, v, true)?);
    Ok(m.to_rational())
}

/// True iff `|⟨v,γ⟩| > Σ ε_i |v_i γ_i|` with the certified upper bound of `ε`;
/// then both one-sided derivatives along `v` are nonzero and share the sign of
/// `⟨v,γ⟩`.
pub fn sign_coherence(table: &ConstructionTable, report: &ApproxLinearityReport, v: &SparseRationalVec) -> Result<bool> {
    Ok(coherence_margin(table, report, v)?.is_positive())
}

/// Checks `|d₊‖x;v‖ − ⟨v,γ⟩| ≤ Σ ε_i |v_i γ_i|` with the certified lower
/// bound of `ε`, so a pass is a rigorous verification.
///
/// The truncation depth starts from `precision_bits` (or the scale of the
/// right-hand side, if finer) and doubles until the comparison is decided.
pub fn verify_7_1(
    table: &ConstructionTable,
    x: &SparseRationalVec,
    report: &ApproxLinearityReport,
    v: &SparseRationalVec,
    precision_bits: u64,
) -> Result<Trial> {
    report.require_on_a0(v)?;
    if x != &report.x {
        return Err(Error::Precondition("report was built for a different x".into()));
    }
    if v.is_zero() {
        return Ok(Trial {
            v: v.clone(),
            lhs: Enclosure {
                lo: Rational::zero(),
                hi: Rational::zero(),
                depth: 0,
            },
            rhs: Rational::zero(),
            pass: true,
        });
    }
    let rhs = error_budget(table, report, v, false)?;
    let gv = gamma_pairing(table, report, v)?;
    let sup = v.sup_norm();

    // rhs ≥ |v_i| 2^{-a_{k+1}²}; resolve a few bits below that scale
    let mut bits = precision_bits;
    for (&i, _) in v.iter() {
        let (_, a_next) = table.entry(report.block(i)?.k + 1)?;
        bits = bits.max(a_next * a_next + 16);
    }
    let cap = table.precision_cap();
    loop {
        table.check_precision(bits.min(cap))?;
        let depth = table.depth_for(&sup, bits.min(cap) + 1)?;
        let mut diff = d_plus_partial(table, x, v, depth)?;
        diff.sub(&gv);
        let (coeff, shift) = table.tail_parts(depth)?;
        let radius_r = &sup * coeff;
        let center = diff.abs();
        let mut hi = center.clone();
        hi.add_shifted(&radius_r, shift);
        let mut lo = center;
        lo.sub_shifted(&radius_r, shift);
        if lo.signum().is_lt() {
            lo = DyadicSum::zero();
        }
        let pass = hi.cmp_sum(&rhs).is_le();
        let refuted = lo.cmp_sum(&rhs).is_gt();
        if pass || refuted || bits >= cap {
            if !pass && !refuted {
                return Err(Error::budget("precision needed to decide the linearity bound", cap));
            }
            return Ok(Trial {
                v: v.clone(),
                lhs: Enclosure {
                    lo: lo.to_rational(),
                    hi: hi.to_rational(),
                    depth,
                },
                rhs: rhs.to_rational(),
                pass,
            });
        }
        bits = (bits * 2).min(cap);
    }
}

/// Decides whether some `φ ∈ lin(Φ)` satisfies `|φ_i − γ_i| ≤ ε_i |γ_i|` for
/// every `i` in `prefix`, with `ε` at its certified lower bound so that a
/// returned witness meets the true inequality. Variables are the span
/// coefficients, numbered from 1.
pub fn lemma10_feasibility(
    report: &ApproxLinearityReport,
    phis: &[SparseRationalVec],
    prefix: &BTreeSet<usize>,
    elimination_budget: usize,
) -> Result<Feasibility<Rational>> {
    if let Some(i) = prefix.iter().find(|i| !report.a0_prefix.contains(i)) {
        return Err(Error::Precondition(format!("index {i} is not in the A0 prefix")));
    }
    let mut system = LinearSystem::new();
    system.variables.extend(1..=phis.len());
    for &i in prefix {
        let row = SparseVec::from_entries(phis.iter().enumerate().map(|(j, phi)| (j + 1, phi.get(i))));
        let g = &report.gamma[&i];
        let slack = &report.epsilon_lower[&i] * g.abs();
        system.between(row, g - &slack, g + &slack);
    }
    feasible(&system, elimination_budget)
}

/// `Σ_j c_j φ_j` for a coefficient vector indexed from 1.
pub fn combine(phis: &[SparseRationalVec], coeffs: &SparseRationalVec) -> SparseRationalVec {
    phis.iter()
        .enumerate()
        .fold(SparseVec::zero(), |acc, (j, phi)| acc.axpy(&coeffs.get(j + 1), phi))
}

/// Random direction on up to `max_terms` of the first `window` indices of
/// the `A₀` prefix, with entries `p/q`, `0 < |p| ≤ 5`, `1 ≤ q ≤ 4`.
pub fn sample_direction<R: Rng>(rng: &mut R, a0: &BTreeSet<usize>, window: usize, max_terms: usize) -> SparseRationalVec {
    let pool: Vec<usize> = a0.iter().copied().take(window).collect();
    if pool.is_empty() {
        return SparseVec::zero();
    }
    let terms = rng.gen_range(1..=max_terms.clamp(1, pool.len()));
    SparseVec::from_entries(sample(rng, pool.len(), terms).into_iter().map(|n| {
        let p = rng.gen_range(1..=5i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
        (pool[n], rat(p, rng.gen_range(1..=4)))
    }))
}

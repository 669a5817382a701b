//! The trigonometric sign apparatus behind the non-proximinality argument.
//!
//! For codimension `N` and two independent functionals `φ₁, φ₂`:
//!
//! * `β_r = rπ/(2N+2)` for `0 ≤ r ≤ N+1` and `ζ_r = (β_r + β_{r−1})/2`;
//! * `ψ_r = sin ζ_r · φ₁ − cos ζ_r · φ₂` for `1 ≤ r ≤ N+1`;
//! * points `x^(r)` with `⟨x^(r), φ₁⟩ ≈ cos β_r` and `⟨x^(r), φ₂⟩ ≈ sin β_r`,
//!   so that `⟨x^(r), ψ_s⟩ ≈ sin(ζ_s − β_r)`, negative for `s ≤ r` and
//!   positive for `s > r`.
//!
//! The resulting sign rows `y_r` are linearly independent. Trigonometric
//! values are certified [`Interval`]s; everything else is exact.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::approx::{build_report, lemma10_feasibility, ApproxLinearityReport};
use crate::construction::ConstructionTable;
use crate::error::{Error, Result};
use crate::interval::{cos, dyadic_midpoint, pi_multiple, sin, Interval};
use crate::linalg::{determinant, rank};
use crate::scalar::{int, mul_pow2, Rational};
use crate::sparse::{sigma, SparseVec};
use crate::SparseRationalVec;

/// Table depth used for the θ traces of the demo.
pub const DEMO_DEPTH: usize = 600;
/// `t·ψ_r` is rounded for `t ≤ 2^16` unless configured otherwise.
pub const DEFAULT_ROUNDING_DENOMINATOR_BITS: u32 = 16;
/// `x^(r)` coordinates are rounded to this many bits.
const POINT_BITS: u64 = 40;

/// `β_r = rπ/(2N+2)` as a certified interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrigAngle {
    pub r: usize,
    pub value: Interval,
}

impl TrigAngle {
    pub fn beta(n: usize, r: usize, prec: u64) -> Self {
        TrigAngle {
            r,
            value: pi_multiple(r as i64, 2 * n as i64 + 2, prec),
        }
    }

    /// `ζ_r = (2r−1)π/(4N+4)`.
    pub fn zeta(n: usize, r: usize, prec: u64) -> Self {
        TrigAngle {
            r,
            value: pi_multiple(2 * r as i64 - 1, 4 * n as i64 + 4, prec),
        }
    }
}

/// `ψ_r = sin ζ_r · φ₁ − cos ζ_r · φ₂` with interval coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Psi {
    pub r: usize,
    pub n: usize,
    pub zeta: TrigAngle,
    pub sin_zeta: Interval,
    pub cos_zeta: Interval,
    pub phi1: SparseRationalVec,
    pub phi2: SparseRationalVec,
}

impl Psi {
    fn new(n: usize, r: usize, phi1: &SparseRationalVec, phi2: &SparseRationalVec, prec: u64) -> Self {
        let zeta = TrigAngle::zeta(n, r, prec + 8);
        Psi {
            r,
            n,
            sin_zeta: sin(&zeta.value, prec),
            cos_zeta: cos(&zeta.value, prec),
            zeta,
            phi1: phi1.clone(),
            phi2: phi2.clone(),
        }
    }

    pub fn at_precision(&self, prec: u64) -> Psi {
        Psi::new(self.n, self.r, &self.phi1, &self.phi2, prec)
    }

    /// Certified enclosure of `⟨x, ψ_r⟩`.
    pub fn pair(&self, x: &SparseRationalVec) -> Interval {
        self.sin_zeta
            .scale(&x.pair(&self.phi1))
            .sub(&self.cos_zeta.scale(&x.pair(&self.phi2)))
    }

    /// First integer functional `round(t·ψ_r)`, `t = 1, 2, …, 2^denominator_bits`,
    /// that pairs nonzero with `x` and is not already in `taken`. Smaller `t`
    /// gives a coarser approximation of `ψ_r` but a lower construction height.
    pub fn round_to_integer(
        &self,
        x: &SparseRationalVec,
        taken: &[SparseRationalVec],
        denominator_bits: u32,
    ) -> Option<SparseRationalVec> {
        let s = self.sin_zeta.midpoint();
        let c = self.cos_zeta.midpoint();
        let support: BTreeSet<usize> = self.phi1.support().union(&self.phi2.support()).copied().collect();
        (1..=1i64 << denominator_bits.min(62)).find_map(|t| {
            let t = int(t);
            let z = SparseVec::from_entries(support.iter().map(|&i| {
                let v = &t * (&s * self.phi1.get(i) - &c * self.phi2.get(i));
                (i, Rational::from_integer(v.round().to_integer()))
            }));
            (!z.is_zero() && !x.pair(&z).is_zero() && !taken.contains(&z)).then_some(z)
        })
    }
}

/// `ψ_1, …, ψ_{N+1}` at `prec` bits.
pub fn build_psi(n: usize, phi1: &SparseRationalVec, phi2: &SparseRationalVec, prec: u64) -> Result<Vec<Psi>> {
    if n < 2 {
        return Err(Error::Precondition(format!("codimension {n} < 2")));
    }
    if rank(&[phi1.clone(), phi2.clone()]) < 2 {
        return Err(Error::Precondition("phi1 and phi2 are linearly dependent".into()));
    }
    Ok((1..=n + 1).map(|r| Psi::new(n, r, phi1, phi2, prec)).collect())
}

/// Integer roundings of the `ψ_r` usable as a `z` list for `x`; a `ψ_r` with
/// no admissible rounding is skipped.
pub fn round_psi_list(psis: &[Psi], x: &SparseRationalVec, denominator_bits: u32) -> Vec<SparseRationalVec> {
    let mut out = Vec::new();
    for psi in psis {
        if let Some(z) = psi.round_to_integer(x, &out, denominator_bits) {
            out.push(z);
        }
    }
    out
}

/// Rational points `x^(r)`, `1 ≤ r ≤ N+1`, with `⟨x^(r), φ₁⟩` and
/// `⟨x^(r), φ₂⟩` within `2^{-32}` of `cos β_r` and `sin β_r`.
pub fn coset_points(
    n: usize,
    phi1: &SparseRationalVec,
    phi2: &SparseRationalVec,
    prec: u64,
) -> Result<Vec<SparseRationalVec>> {
    let support: Vec<usize> = phi1.support().union(&phi2.support()).copied().collect();
    let pivot = support
        .iter()
        .enumerate()
        .flat_map(|(a, &i)| support[a + 1..].iter().map(move |&j| (i, j)))
        .find(|&(i, j)| !(phi1.get(i) * phi2.get(j) - phi1.get(j) * phi2.get(i)).is_zero())
        .ok_or_else(|| Error::Precondition("phi1 and phi2 are linearly dependent".into()))?;
    let (i, j) = pivot;
    let det = phi1.get(i) * phi2.get(j) - phi1.get(j) * phi2.get(i);
    Ok((1..=n + 1)
        .map(|r| {
            let beta = TrigAngle::beta(n, r, prec.max(POINT_BITS + 16));
            let c = dyadic_midpoint(&cos(&beta.value, prec.max(POINT_BITS + 16)), POINT_BITS);
            let s = dyadic_midpoint(&sin(&beta.value, prec.max(POINT_BITS + 16)), POINT_BITS);
            // Cramer on the 2×2 block at (i, j)
            let xi = (&c * phi2.get(j) - &s * phi1.get(j)) / &det;
            let xj = (&s * phi1.get(i) - &c * phi2.get(i)) / &det;
            SparseVec::from_entries([(i, xi), (j, xj)])
        })
        .collect())
}

/// Something to pair the points against.
#[derive(Clone, Debug)]
pub enum Probe {
    Psi(Psi),
    Exact(SparseRationalVec),
}

/// Certified signs of `⟨x^(r), probe_s⟩`: `±1`, `0` for an exact zero pairing.
///
/// Interval entries that straddle zero are recomputed at doubled precision up
/// to `cap` bits; if any remain undetermined the result is a budget error.
pub fn sign_table(x_points: &[SparseRationalVec], probes: &[Probe], prec: u64, cap: u64) -> Result<Vec<Vec<i8>>> {
    let mut bits = prec;
    loop {
        let mut undetermined = false;
        let table: Vec<Vec<i8>> = x_points
            .iter()
            .map(|x| {
                probes
                    .iter()
                    .map(|p| match p {
                        Probe::Exact(z) => {
                            let t = x.pair(z);
                            if t.is_zero() {
                                0
                            } else {
                                sigma(&t).as_i32() as i8
                            }
                        }
                        Probe::Psi(psi) => match psi.at_precision(bits).pair(x).sign() {
                            Some(o) => o as i8,
                            None => {
                                undetermined = true;
                                0
                            }
                        },
                    })
                    .collect()
            })
            .collect();
        if !undetermined {
            return Ok(table);
        }
        if bits >= cap {
            return Err(Error::budget("precision for the sign table", cap));
        }
        bits = (bits * 2).min(cap);
    }
}

/// Rows `y_r = (−1 × r, +1 × (N+1−r))` for `r = 1..N+1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignMatrix {
    pub n: usize,
    pub rows: Vec<Vec<i8>>,
}

impl SignMatrix {
    pub fn new(n: usize) -> Self {
        let rows = (1..=n + 1)
            .map(|r| (1..=n + 1).map(|s| if s <= r { -1 } else { 1 }).collect())
            .collect();
        SignMatrix { n, rows }
    }
}

/// Exact determinant of the rows and whether it is nonzero.
pub fn independence_check(m: &SignMatrix) -> (bool, BigInt) {
    let dense: Vec<Vec<Rational>> = m.rows.iter().map(|row| row.iter().map(|&e| int(e as i64)).collect()).collect();
    let det = determinant(&dense).to_integer();
    (!det.is_zero(), det)
}

/// `(θ₀φ)_i = α_i^{-1} φ_i` with `α_i = 2^{-i²}` for `i = a_k` in the
/// `A` prefix of the report.
pub fn theta_prefix(
    report: &ApproxLinearityReport,
    phi: &SparseRationalVec,
    prefix: &BTreeSet<usize>,
) -> Result<BTreeMap<usize, Rational>> {
    prefix
        .iter()
        .map(|&i| {
            if !report.a_prefix.contains_key(&i) {
                return Err(Error::Precondition(format!("index {i} is not in the A prefix")));
            }
            Ok((i, mul_pow2(&phi.get(i), (i * i) as i64)))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaBlock {
    /// 0-based index into the `z` list.
    pub z: usize,
    /// `−σ(⟨x, z_j⟩)`.
    pub expected: i8,
    #[serde(with = "crate::scalar::rational_map")]
    pub values: BTreeMap<usize, Rational>,
    pub constant: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FeasibilitySummary {
    pub prefix: Vec<usize>,
    pub satisfiable: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DemoReport {
    pub n: usize,
    pub precision_bits: u64,
    pub beta: Vec<TrigAngle>,
    pub psi: Vec<Psi>,
    pub x_points: Vec<SparseRationalVec>,
    pub sign_table: Vec<Vec<i8>>,
    pub sign_matrix: SignMatrix,
    pub matches_prediction: bool,
    #[serde(serialize_with = "ser_bigint")]
    pub determinant: BigInt,
    pub independent: bool,
    /// Which `x^(r)` (1-based) the θ traces use.
    pub theta_point: usize,
    pub z_list: Vec<SparseRationalVec>,
    pub z_sign_table: Vec<Vec<i8>>,
    pub theta: Vec<ThetaBlock>,
    /// Whether `lin{φ₁, φ₂}` can track `γ` on the first `A₀` indices.
    pub feasibility: FeasibilitySummary,
}

fn ser_bigint<S: serde::Serializer>(b: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&b.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DemoParams {
    pub n: usize,
    pub precision_bits: u64,
    pub elimination_budget: usize,
    pub rounding_denominator_bits: u32,
}

impl Default for DemoParams {
    fn default() -> Self {
        DemoParams {
            n: 2,
            precision_bits: crate::norm::DEFAULT_PRECISION_BITS,
            elimination_budget: crate::linalg::DEFAULT_ELIMINATION_BUDGET,
            rounding_denominator_bits: DEFAULT_ROUNDING_DENOMINATOR_BITS,
        }
    }
}

/// End-to-end walkthrough for `φ₁ = e₁*`, `φ₂ = e₂*`.
pub fn run_demo(table: &ConstructionTable, params: &DemoParams) -> Result<DemoReport> {
    let (n, prec) = (params.n, params.precision_bits);
    let phi1 = SparseVec::unit(1);
    let phi2 = SparseVec::unit(2);
    let psi = build_psi(n, &phi1, &phi2, prec)?;
    let x_points = coset_points(n, &phi1, &phi2, prec)?;
    let probes: Vec<Probe> = psi.iter().cloned().map(Probe::Psi).collect();
    let signs = sign_table(&x_points, &probes, prec, table.precision_cap())?;
    let sign_matrix = SignMatrix::new(n);
    let matches_prediction = signs == sign_matrix.rows;
    let (independent, determinant) = independence_check(&sign_matrix);

    let (theta_point, z_list) = x_points
        .iter()
        .enumerate()
        .map(|(r, x)| (r + 1, round_psi_list(&psi, x, params.rounding_denominator_bits)))
        .find(|(_, z)| !z.is_empty())
        .ok_or_else(|| Error::Hypothesis("no rounded psi pairs nonzero with any x^(r)".into()))?;
    let x = &x_points[theta_point - 1];
    let z_probes: Vec<Probe> = z_list.iter().cloned().map(Probe::Exact).collect();
    let z_sign_table = sign_table(&x_points, &z_probes, prec, table.precision_cap())?;

    let depth = DEMO_DEPTH.min(table.depth_budget().saturating_sub(crate::approx::EPSILON_TERMS + 1));
    let report = build_report(table, x, &z_list, depth)?;
    let gamma = report.gamma_functional(&report.a0_prefix);
    let mut theta = Vec::new();
    for (j, z) in z_list.iter().enumerate() {
        let block: BTreeSet<usize> = report
            .a0_prefix
            .iter()
            .copied()
            .filter(|i| report.a_prefix[i].z == j)
            .collect();
        let values = theta_prefix(&report, &gamma, &block)?;
        let expected = -(sigma(&x.pair(z)).as_i32() as i8);
        let e = int(expected as i64);
        let constant = values.values().all(|v| v == &e);
        theta.push(ThetaBlock {
            z: j,
            expected,
            values,
            constant,
        });
    }

    let prefix: BTreeSet<usize> = report.a0_prefix.iter().copied().take(2).collect();
    let feas = lemma10_feasibility(&report, &[phi1, phi2], &prefix, params.elimination_budget)?;

    Ok(DemoReport {
        n,
        precision_bits: prec,
        beta: (0..=n + 1).map(|r| TrigAngle::beta(n, r, prec)).collect(),
        psi,
        x_points,
        sign_table: signs,
        sign_matrix,
        matches_prediction,
        determinant,
        independent,
        theta_point,
        z_list,
        z_sign_table,
        theta,
        feasibility: FeasibilitySummary {
            prefix: prefix.into_iter().collect(),
            satisfiable: feas.satisfiable,
        },
    })
}

/// `|det|` as a machine integer when it fits.
pub fn determinant_magnitude(m: &SignMatrix) -> Option<u64> {
    independence_check(m).1.abs().to_u64()
}

//! Certified descent inside a coset `x + H` of a finite-codimension subspace.
//!
//! A point `x` is not nearest to zero in `x + H` as soon as some `v ∈ H` has
//! one-sided derivatives `d₊‖x;v‖` and `d₋‖x;v‖` that are nonzero with the
//! same sign: a small step against that sign lowers the norm. Directions are
//! found through approximate linearity, where `|⟨v,γ⟩| > Σ ε_i|v_iγ_i|`
//! forces the shared sign, and each step is certified by separating the two
//! norm enclosures.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::approx::{build_report, coherence_margin};
use crate::construction::ConstructionTable;
use crate::demo::{build_psi, round_psi_list};
use crate::error::{Error, Result};
use crate::gateaux::{d_minus_at_depth, d_plus_at_depth, resolve_sign, DerivativeEnclosure, Side};
use crate::linalg::{kernel_directions, rank};
use crate::norm::{compare_norms, norm_at_depth, read_norm, Enclosure, NormOrder};
use crate::scalar::{is_dyadic, mul_pow2, rational_lt, rational_str, Rational};
use crate::sparse::Sign;
use crate::SparseRationalVec;

/// `H = ∩ ker φ_i` for linearly independent, finitely supported `φ_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    functionals: Vec<SparseRationalVec>,
}

impl Subspace {
    pub fn new(functionals: Vec<SparseRationalVec>) -> Result<Self> {
        if functionals.is_empty() {
            return Err(Error::Precondition("a subspace needs at least one functional".into()));
        }
        if rank(&functionals) < functionals.len() {
            return Err(Error::Precondition("defining functionals are linearly dependent".into()));
        }
        Ok(Subspace { functionals })
    }

    pub fn functionals(&self) -> &[SparseRationalVec] {
        &self.functionals
    }

    pub fn codim(&self) -> usize {
        self.functionals.len()
    }

    pub fn contains(&self, v: &SparseRationalVec) -> bool {
        self.functionals.iter().all(|phi| v.pair(phi).is_zero())
    }

    /// `(⟨x, φ_i⟩)_i`, which identifies the coset `x + H`.
    pub fn coset_values(&self, x: &SparseRationalVec) -> Vec<Rational> {
        self.functionals.iter().map(|phi| x.pair(phi)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchParams {
    /// Table depth `M` of the approximate-linearity prefix.
    pub depth: usize,
    /// Candidate supports examined before giving up.
    pub max_candidates: usize,
    pub precision_bits: u64,
    /// Halvings of the step before the line search gives up.
    pub line_search_steps: u32,
    pub rounding_denominator_bits: u32,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            depth: 400,
            max_candidates: 500,
            precision_bits: crate::norm::DEFAULT_PRECISION_BITS,
            line_search_steps: 64,
            rounding_denominator_bits: crate::demo::DEFAULT_ROUNDING_DENOMINATOR_BITS,
        }
    }
}

/// Both one-sided derivatives, certified nonzero with a common sign.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignEvidence {
    pub d_plus: DerivativeEnclosure,
    pub d_minus: DerivativeEnclosure,
}

impl SignEvidence {
    /// The shared definite sign, if there is one.
    pub fn shared_sign(&self) -> Option<Sign> {
        let p = self.d_plus.sign_status.definite()?;
        (self.d_minus.sign_status.definite()? == p).then_some(p)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DescentDirection {
    pub v: SparseRationalVec,
    pub margin: Rational,
    pub z_list: Vec<SparseRationalVec>,
    pub evidence: SignEvidence,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentCertificate {
    pub x: SparseRationalVec,
    pub v: SparseRationalVec,
    #[serde(with = "rational_str")]
    pub h: Rational,
    pub norm_before: Enclosure,
    pub norm_after: Enclosure,
    pub derivative_evidence: SignEvidence,
}

impl DescentCertificate {
    pub fn next_point(&self) -> SparseRationalVec {
        self.x.axpy(&self.h, &self.v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub subspace: Vec<SparseRationalVec>,
    pub x0: SparseRationalVec,
    pub certificates: Vec<DescentCertificate>,
    /// Why the run ended before the requested number of steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<String>,
}

/// Integer functionals to build the approximate-linearity report from.
///
/// From codimension 2 on these are roundings of the `ψ_r` built from the
/// first two functionals; otherwise the functionals themselves.
pub fn z_list_for(h: &Subspace, x: &SparseRationalVec, params: &SearchParams) -> Result<Vec<SparseRationalVec>> {
    let mut zs = Vec::new();
    if h.codim() >= 2 {
        let psis = build_psi(h.codim(), &h.functionals[0], &h.functionals[1], params.precision_bits)?;
        zs = round_psi_list(&psis, x, params.rounding_denominator_bits);
    }
    if zs.is_empty() {
        zs = h
            .functionals
            .iter()
            .filter(|phi| !x.pair(phi).is_zero())
            .cloned()
            .collect();
    }
    Ok(zs)
}

// size-k subsets of `items` by increasing largest element, then lexicographically
fn subsets_by_max(items: &[usize], k: usize, limit: usize) -> Vec<Vec<usize>> {
    fn combos(pool: &[usize], k: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if acc.len() == k {
            out.push(acc.clone());
            return;
        }
        for (n, &i) in pool.iter().enumerate() {
            acc.push(i);
            combos(&pool[n + 1..], k, acc, out, limit);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    for (m, &top) in items.iter().enumerate().skip(k - 1) {
        let mut acc = Vec::new();
        let before = out.len();
        combos(&items[..m], k - 1, &mut acc, &mut out, limit);
        for s in &mut out[before..] {
            s.push(top);
        }
        if out.len() >= limit {
            break;
        }
    }
    out
}

/// Searches the `A₀` prefix for `v ∈ H` whose derivatives share a sign.
///
/// Candidates are kernel directions over supports of size `codim + 1`,
/// scaled to sup norm 1 and ranked by the exact coherence margin; the best
/// one whose derivative signs confirm is returned. `None` means nothing was
/// found within the search parameters, which says nothing about `x` being
/// a nearest point.
pub fn find_descent_direction(
    table: &ConstructionTable,
    h: &Subspace,
    x: &SparseRationalVec,
    params: &SearchParams,
) -> Result<Option<DescentDirection>> {
    if h.contains(x) {
        return Err(Error::Precondition("x lies in H".into()));
    }
    let z_list = z_list_for(h, x, params)?;
    let report = build_report(table, x, &z_list, params.depth)?;
    let a0: Vec<usize> = report.a0_prefix.iter().copied().collect();

    let mut ranked: Vec<(Rational, SparseRationalVec)> = Vec::new();
    let mut seen = BTreeSet::new();
    for support in subsets_by_max(&a0, h.codim() + 1, params.max_candidates) {
        let allowed: BTreeSet<usize> = support.into_iter().collect();
        for v in kernel_directions(&h.functionals, &allowed) {
            let v = v.scale(&(Rational::one() / v.sup_norm()));
            if !seen.insert(v.iter().map(|(i, r)| (*i, r.clone())).collect::<Vec<_>>()) {
                continue;
            }
            let margin = coherence_margin(table, &report, &v)?;
            if margin.is_positive() {
                ranked.push((margin, v));
            }
        }
    }
    // stable: ties keep enumeration order
    ranked.sort_by(|a, b| crate::scalar::cmp_rational(&b.0, &a.0));

    for (margin, v) in ranked {
        let d_plus = resolve_sign(table, x, &v, Side::Right, params.precision_bits)?;
        let d_minus = resolve_sign(table, x, &v, Side::Left, params.precision_bits)?;
        let evidence = SignEvidence { d_plus, d_minus };
        if evidence.shared_sign().is_some() {
            return Ok(Some(DescentDirection {
                v,
                margin,
                z_list,
                evidence,
            }));
        }
    }
    Ok(None)
}

// largest power of two ≤ r, for r > 0
fn dyadic_floor(r: &Rational) -> Rational {
    let e = r.numer().bits() as i64 - r.denom().bits() as i64;
    let mut p = crate::scalar::pow2(e);
    while &p > r {
        p = mul_pow2(&p, -1);
    }
    while &mul_pow2(&p, 1) <= r {
        p = mul_pow2(&p, 1);
    }
    p
}

/// Dyadic line search along `v` against the shared derivative sign, until
/// `‖x + h·v‖ < ‖x‖` is certified.
pub fn certify_descent(
    table: &ConstructionTable,
    h: &Subspace,
    x: &SparseRationalVec,
    v: &SparseRationalVec,
    evidence: &SignEvidence,
    params: &SearchParams,
) -> Result<DescentCertificate> {
    if !h.contains(v) {
        return Err(Error::Precondition("direction is not in H".into()));
    }
    let sign = evidence
        .shared_sign()
        .ok_or_else(|| Error::Precondition("derivative signs are not definite and equal".into()))?;
    let before = read_norm(table, x, params.precision_bits)?;
    let scale = mul_pow2(&before.lo, -4) / v.sup_norm().max(Rational::one());
    let mut step = dyadic_floor(&scale);
    for _ in 0..params.line_search_steps {
        let hval = sign.flip().apply(step.clone());
        let y = x.axpy(&hval, v);
        let cmp = compare_norms(table, &y, x, params.precision_bits)?;
        if cmp.order == NormOrder::Less {
            return Ok(DescentCertificate {
                x: x.clone(),
                v: v.clone(),
                h: hval,
                norm_before: cmp.y,
                norm_after: cmp.x,
                derivative_evidence: evidence.clone(),
            });
        }
        step = mul_pow2(&step, -1);
    }
    Err(Error::budget("line search halvings", params.line_search_steps as u64))
}

/// Up to `steps` certified descent steps from `x0`, all inside `x0 + H`.
///
/// A search that finds nothing or trips a budget ends the chain early; the
/// reason is recorded and the certificates so far are kept.
pub fn minimizing_sequence(
    table: &ConstructionTable,
    h: &Subspace,
    x0: &SparseRationalVec,
    steps: usize,
    params: &SearchParams,
) -> Result<Chain> {
    if steps == 0 {
        return Err(Error::Precondition("steps must be at least 1".into()));
    }
    let coset = h.coset_values(x0);
    let mut chain = Chain {
        subspace: h.functionals.clone(),
        x0: x0.clone(),
        certificates: Vec::new(),
        stop_reason: None,
    };
    let mut x = x0.clone();
    for _ in 0..steps {
        let found = match find_descent_direction(table, h, &x, params) {
            Ok(f) => f,
            Err(e) if e.is_budget() => {
                chain.stop_reason = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let Some(dir) = found else {
            chain.stop_reason = Some("no direction found at this depth".into());
            break;
        };
        let cert = match certify_descent(table, h, &x, &dir.v, &dir.evidence, params) {
            Ok(c) => c,
            Err(e) if e.is_budget() => {
                chain.stop_reason = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        x = cert.next_point();
        if h.coset_values(&x) != coset {
            return Err(Error::Verification("iterate left the coset".into()));
        }
        chain.certificates.push(cert);
    }
    Ok(chain)
}

fn reject(msg: impl Into<String>) -> Error {
    Error::Verification(msg.into())
}

/// Recomputes every enclosure of `cert` at its stored depth and checks the
/// descent claims.
pub fn verify_certificate(table: &ConstructionTable, h: &Subspace, cert: &DescentCertificate) -> Result<()> {
    if !h.contains(&cert.v) {
        return Err(reject("v is not in H"));
    }
    if cert.h.is_zero() || !is_dyadic(&cert.h) {
        return Err(reject("h must be a nonzero dyadic rational"));
    }
    let ev = &cert.derivative_evidence;
    if d_plus_at_depth(table, &cert.x, &cert.v, ev.d_plus.depth)? != ev.d_plus {
        return Err(reject("d_plus does not match its recomputation"));
    }
    if d_minus_at_depth(table, &cert.x, &cert.v, ev.d_minus.depth)? != ev.d_minus {
        return Err(reject("d_minus does not match its recomputation"));
    }
    let sign = ev
        .shared_sign()
        .ok_or_else(|| reject("derivatives do not share a definite sign"))?;
    if sign.apply(cert.h.clone()).is_positive() {
        return Err(reject("h points along the derivative sign"));
    }
    if norm_at_depth(table, &cert.x, cert.norm_before.depth)? != cert.norm_before {
        return Err(reject("norm_before does not match its recomputation"));
    }
    if norm_at_depth(table, &cert.next_point(), cert.norm_after.depth)? != cert.norm_after {
        return Err(reject("norm_after does not match its recomputation"));
    }
    if !rational_lt(&cert.norm_after.hi, &cert.norm_before.lo) {
        return Err(reject("no strict decrease: hi(after) ≥ lo(before)"));
    }
    Ok(())
}

/// Verifies each certificate and the threading `x_{t+1} = x_t + h_t·v_t`
/// starting at `x0`.
pub fn verify_chain(table: &ConstructionTable, chain: &Chain) -> Result<()> {
    let h = Subspace::new(chain.subspace.clone()).map_err(|e| reject(e.to_string()))?;
    let mut x = chain.x0.clone();
    for (t, cert) in chain.certificates.iter().enumerate() {
        if cert.x != x {
            return Err(reject(format!("certificate {t} does not start where the previous step ended")));
        }
        verify_certificate(table, &h, cert).map_err(|e| match e {
            Error::Verification(m) => reject(format!("certificate {t}: {m}")),
            other => other,
        })?;
        x = cert.next_point();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};
    use crate::sparse::SparseVec;

    fn codim2() -> Subspace {
        Subspace::new(vec![SparseVec::unit(1), SparseVec::unit(2)]).unwrap()
    }

    fn x0() -> SparseRationalVec {
        SparseVec::from_entries([(1, rat(3, 4)), (2, rat(-1, 2)), (4, rat(1, 5))])
    }

    #[test]
    fn subspace_rejects_dependence() {
        let e1: SparseRationalVec = SparseVec::unit(1);
        assert!(Subspace::new(vec![e1.clone(), e1.scale(&int(3))]).is_err());
        assert!(Subspace::new(vec![]).is_err());
        assert_eq!(codim2().codim(), 2);
    }

    #[test]
    fn subsets_order() {
        let s = subsets_by_max(&[3, 6, 8, 20], 2, 100);
        assert_eq!(s, vec![vec![3, 6], vec![3, 8], vec![6, 8], vec![3, 20], vec![6, 20], vec![8, 20]]);
        assert_eq!(subsets_by_max(&[3, 6, 8], 2, 2).len(), 2);
    }

    #[test]
    fn dyadic_floor_values() {
        assert_eq!(dyadic_floor(&rat(3, 4)), rat(1, 2));
        assert_eq!(dyadic_floor(&int(1)), int(1));
        assert_eq!(dyadic_floor(&rat(1, 3)), rat(1, 4));
        assert_eq!(dyadic_floor(&int(5)), int(4));
    }

    #[test]
    fn point_in_h_is_rejected() {
        let t = ConstructionTable::default();
        let x = SparseVec::unit(5);
        assert!(matches!(
            find_descent_direction(&t, &codim2(), &x, &SearchParams::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn direction_and_certificate() {
        let t = ConstructionTable::default();
        let h = codim2();
        let x = x0();
        let dir = find_descent_direction(&t, &h, &x, &SearchParams::default())
            .unwrap()
            .expect("direction");
        assert!(h.contains(&dir.v));
        let sign = dir.evidence.shared_sign().unwrap();
        let cert = certify_descent(&t, &h, &x, &dir.v, &dir.evidence, &SearchParams::default()).unwrap();
        assert!(rational_lt(&cert.norm_after.hi, &cert.norm_before.lo));
        assert!(sign.apply(cert.h.clone()).is_negative());
        verify_certificate(&t, &h, &cert).unwrap();
    }

    #[test]
    fn chain_stays_in_coset_and_verifies() {
        let t = ConstructionTable::default();
        let h = codim2();
        let chain = minimizing_sequence(&t, &h, &x0(), 4, &SearchParams::default()).unwrap();
        assert_eq!(chain.certificates.len(), 4, "{:?}", chain.stop_reason);
        for c in &chain.certificates {
            assert_eq!(h.coset_values(&c.x), h.coset_values(&x0()));
        }
        for w in chain.certificates.windows(2) {
            assert_eq!(w[1].x, w[0].next_point());
        }
        verify_chain(&t, &chain).unwrap();

        let mut bad = chain.clone();
        bad.certificates[1].h = mul_pow2(&bad.certificates[1].h, 1);
        assert!(matches!(verify_chain(&t, &bad), Err(Error::Verification(_))));
    }
}

//! Small exact linear algebra: row reduction, kernels of coordinate-restricted
//! functionals, determinants, and Fourier–Motzkin feasibility.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseVec;

/// Reduced row echelon form in place; returns the pivot column of each
/// nonzero row, in order.
pub fn rref<T: Scalar>(m: &mut Vec<Vec<T>>) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        // exact arithmetic: any nonzero pivot will do; pick the largest for floats
        let Some(p) = (r..rows)
            .filter(|&i| !m[i][c].is_zero())
            .max_by(|&a, &b| m[a][c].abs().partial_cmp(&m[b][c].abs()).unwrap_or(std::cmp::Ordering::Equal))
        else {
            continue;
        };
        m.swap(r, p);
        let inv = T::one() / m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let t = m[r][j].clone() * f.clone();
                    m[i][j] = m[i][j].clone() - t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    pivots
}

fn dense_rows<T: Scalar>(rows: &[SparseVec<T>], cols: &[usize]) -> Vec<Vec<T>> {
    rows.iter()
        .map(|row| cols.iter().map(|&c| row.get(c)).collect())
        .collect()
}

/// Rank of a family of finitely supported functionals.
pub fn rank<T: Scalar>(rows: &[SparseVec<T>]) -> usize {
    let cols: BTreeSet<usize> = rows.iter().flat_map(|r| r.support()).collect();
    let cols: Vec<usize> = cols.into_iter().collect();
    let mut m = dense_rows(rows, &cols);
    rref(&mut m).len()
}

/// Basis of `{v : supp v ⊆ allowed, ⟨v, φ⟩ = 0 for every φ in constraints}`.
///
/// One basis vector per free column of the row-reduced system, with a `1` in
/// that column. Empty when only the zero vector qualifies.
pub fn kernel_directions<T: Scalar>(
    constraints: &[SparseVec<T>],
    allowed_support: &BTreeSet<usize>,
) -> Vec<SparseVec<T>> {
    let cols: Vec<usize> = allowed_support.iter().copied().collect();
    let mut m = dense_rows(constraints, &cols);
    let pivots = rref(&mut m);
    let pivot_set: BTreeSet<usize> = pivots.iter().copied().collect();
    (0..cols.len())
        .filter(|c| !pivot_set.contains(c))
        .map(|free| {
            let mut v = SparseVec::zero();
            v.set(cols[free], T::one());
            for (r, &pc) in pivots.iter().enumerate() {
                v.set(cols[pc], -m[r][free].clone());
            }
            v
        })
        .collect()
}

/// Determinant by Gaussian elimination.
pub fn determinant<T: Scalar>(m: &[Vec<T>]) -> T {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut det = T::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return T::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let piv = a[c][c].clone();
        det = det * piv.clone();
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone() / piv.clone();
            for j in c..n {
                let t = a[c][j].clone() * f.clone();
                a[i][j] = a[i][j].clone() - t;
            }
        }
    }
    det
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
}

#[derive(Clone, Debug)]
pub struct Constraint<T> {
    pub coeffs: SparseVec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// Default cap on live inequalities during elimination.
pub const DEFAULT_ELIMINATION_BUDGET: usize = 20_000;

/// Finite system of linear (in)equalities over variables indexed from 1.
#[derive(Clone, Debug)]
pub struct LinearSystem<T> {
    pub constraints: Vec<Constraint<T>>,
    pub variables: BTreeSet<usize>,
}

impl<T: Scalar> Default for LinearSystem<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> LinearSystem<T> {
    pub fn new() -> Self {
        LinearSystem {
            constraints: Vec::new(),
            variables: BTreeSet::new(),
        }
    }

    pub fn push(&mut self, coeffs: SparseVec<T>, relation: Relation, rhs: T) {
        self.variables.extend(coeffs.support());
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn le(&mut self, coeffs: SparseVec<T>, rhs: T) {
        self.push(coeffs, Relation::Le, rhs);
    }

    pub fn eq(&mut self, coeffs: SparseVec<T>, rhs: T) {
        self.push(coeffs, Relation::Eq, rhs);
    }

    /// `lo ≤ ⟨coeffs, vars⟩ ≤ hi`.
    pub fn between(&mut self, coeffs: SparseVec<T>, lo: T, hi: T) {
        self.le(-&coeffs, -lo);
        self.le(coeffs, hi);
    }

    /// True when `witness` satisfies every constraint exactly.
    pub fn satisfied_by(&self, witness: &SparseVec<T>) -> bool {
        self.constraints.iter().all(|c| {
            let lhs = c.coeffs.pair(witness);
            match c.relation {
                Relation::Eq => lhs == c.rhs,
                Relation::Le => lhs <= c.rhs,
            }
        })
    }
}

/// Outcome of [`feasible`]; the witness assigns every variable of the system.
#[derive(Clone, Debug)]
pub struct Feasibility<T> {
    pub satisfiable: bool,
    pub witness: Option<SparseVec<T>>,
}

// `Σ coeffs·x ≤ rhs` with dense coefficients over the current variable order.
#[derive(Clone, Debug)]
struct Ineq<T> {
    coeffs: Vec<T>,
    rhs: T,
}

impl<T: Scalar> Ineq<T> {
    fn normalized(mut self) -> Self {
        if let Some(lead) = self.coeffs.iter().find(|c| !c.is_zero()).map(|c| c.abs()) {
            for c in self.coeffs.iter_mut() {
                *c = c.clone() / lead.clone();
            }
            self.rhs = self.rhs / lead;
        }
        self
    }

    fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

fn push_dedup<T: Scalar>(set: &mut Vec<Ineq<T>>, ineq: Ineq<T>) {
    let ineq = ineq.normalized();
    if let Some(existing) = set.iter_mut().find(|e| e.coeffs == ineq.coeffs) {
        if ineq.rhs < existing.rhs {
            existing.rhs = ineq.rhs;
        }
    } else {
        set.push(ineq);
    }
}

/// Exact feasibility by Fourier–Motzkin elimination with back substitution.
///
/// `budget` caps the number of inequalities alive at any stage.
pub fn feasible<T: Scalar>(system: &LinearSystem<T>, budget: usize) -> Result<Feasibility<T>> {
    let vars: Vec<usize> = system.variables.iter().copied().collect();
    let n = vars.len();
    let mut current: Vec<Ineq<T>> = Vec::new();
    for c in &system.constraints {
        let coeffs: Vec<T> = vars.iter().map(|&v| c.coeffs.get(v)).collect();
        let le = Ineq {
            coeffs: coeffs.clone(),
            rhs: c.rhs.clone(),
        };
        if c.relation == Relation::Eq {
            let ge = Ineq {
                coeffs: coeffs.into_iter().map(|x| -x).collect(),
                rhs: -c.rhs.clone(),
            };
            push_dedup(&mut current, ge);
        }
        push_dedup(&mut current, le);
    }
    if current.len() > budget {
        return Err(Error::budget("Fourier-Motzkin constraint count", budget as u64));
    }

    let infeasible = Feasibility {
        satisfiable: false,
        witness: None,
    };
    // stages[s] holds the system in which variables s+1.. have been eliminated
    let mut stages: Vec<Vec<Ineq<T>>> = Vec::with_capacity(n + 1);
    for col in (0..n).rev() {
        let mut next = Vec::new();
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for q in &current {
            if q.is_constant() {
                if q.rhs.is_negative() {
                    return Ok(infeasible);
                }
                continue;
            }
            let a = &q.coeffs[col];
            if a.is_positive() {
                pos.push(q);
            } else if a.is_negative() {
                neg.push(q);
            } else {
                push_dedup(&mut next, q.clone());
            }
        }
        for p in &pos {
            for m in &neg {
                let (ap, am) = (p.coeffs[col].clone(), -m.coeffs[col].clone());
                let combined = Ineq {
                    coeffs: p
                        .coeffs
                        .iter()
                        .zip(&m.coeffs)
                        .map(|(x, y)| x.clone() * am.clone() + y.clone() * ap.clone())
                        .collect(),
                    rhs: p.rhs.clone() * am.clone() + m.rhs.clone() * ap,
                };
                if combined.is_constant() {
                    if combined.rhs.is_negative() {
                        return Ok(infeasible);
                    }
                    continue;
                }
                push_dedup(&mut next, combined);
                if next.len() > budget {
                    return Err(Error::budget("Fourier-Motzkin constraint count", budget as u64));
                }
            }
        }
        stages.push(std::mem::replace(&mut current, next));
    }
    if current.iter().any(|q| q.rhs.is_negative()) {
        return Ok(infeasible);
    }

    // stages[n-1-col] still contains variable `col`; assign 0, 1, ... in turn
    let mut values: Vec<T> = vec![T::zero(); n];
    for col in 0..n {
        let stage = &stages[n - 1 - col];
        let mut lo: Option<T> = None;
        let mut hi: Option<T> = None;
        for q in stage {
            let a = q.coeffs[col].clone();
            if a.is_zero() {
                continue;
            }
            let rest = (0..col).fold(T::zero(), |acc, j| acc + q.coeffs[j].clone() * values[j].clone());
            let bound = (q.rhs.clone() - rest) / a.clone();
            if a.is_positive() {
                if hi.as_ref().is_none_or(|h| bound < *h) {
                    hi = Some(bound);
                }
            } else if lo.as_ref().is_none_or(|l| bound > *l) {
                lo = Some(bound);
            }
        }
        values[col] = match (lo, hi) {
            (Some(l), Some(h)) => (l + h) / T::two(),
            (Some(l), None) => l,
            (None, Some(h)) => h,
            (None, None) => T::zero(),
        };
    }
    let witness = SparseVec::from_entries(vars.iter().copied().zip(values));
    Ok(Feasibility {
        satisfiable: true,
        witness: Some(witness),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, Rational};

    type V = SparseVec<Rational>;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn kernel_examples() {
        let k = kernel_directions(&[V::unit(1)], &set(&[1, 2]));
        assert_eq!(k, vec![V::unit(2)]);
        let k = kernel_directions::<Rational>(&[], &set(&[3]));
        assert_eq!(k, vec![V::unit(3)]);
        let plus = &V::unit(1) + &V::unit(2);
        let minus = &V::unit(1) - &V::unit(2);
        let k = kernel_directions(&[plus, minus], &set(&[1, 2, 3]));
        assert_eq!(k, vec![V::unit(3)]);
    }

    #[test]
    fn kernel_trivial() {
        let k = kernel_directions(&[V::unit(1), V::unit(2)], &set(&[1, 2]));
        assert!(k.is_empty());
    }

    #[test]
    fn feasibility_examples() {
        let mut s = LinearSystem::<Rational>::new();
        s.le(V::unit(1), int(1));
        s.le(-&V::unit(1), int(-2));
        assert!(!feasible(&s, 100).unwrap().satisfiable);

        let mut s = LinearSystem::<Rational>::new();
        s.eq(V::unit(1), int(0));
        let f = feasible(&s, 100).unwrap();
        assert!(f.satisfiable);
        assert_eq!(f.witness.unwrap().get(1), int(0));

        // |c - (-1/8)| <= 1/16
        let mut s = LinearSystem::<Rational>::new();
        s.between(V::unit(1), rat(-3, 16), rat(-1, 16));
        let f = feasible(&s, 100).unwrap();
        let c = f.witness.unwrap().get(1);
        assert!(c >= rat(-3, 16) && c <= rat(-1, 16));
    }

    #[test]
    fn determinant_small() {
        let m = vec![vec![int(-1), int(1)], vec![int(-1), int(-1)]];
        assert_eq!(determinant(&m), int(2));
        let m = vec![
            vec![int(-1), int(1), int(1)],
            vec![int(-1), int(-1), int(1)],
            vec![int(-1), int(-1), int(-1)],
        ];
        assert_eq!(determinant(&m), int(-4));
    }

    #[test]
    fn budget_is_enforced() {
        let mut s = LinearSystem::<Rational>::new();
        for i in 1..=4 {
            s.between(V::unit(i), int(-1), int(1));
        }
        assert!(feasible(&s, 3).unwrap_err().is_budget());
    }
}

//! Elementary AC unification of variable sums.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use thiserror::Error;

use crate::problem::FreshVarSource;
use crate::subst::Substitution;
use crate::term::{Equation, Term, Var};

/// Caps on the work of one AC unification call. The default is unlimited.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AcBudget {
    pub max_unifiers: Option<usize>,
    pub deadline: Option<Instant>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum AcExhausted {
    #[error("more unifiers than allowed")]
    Unifiers,
    #[error("deadline passed")]
    Deadline,
}

impl AcBudget {
    fn check(&self, produced: usize) -> Result<(), AcExhausted> {
        if self.max_unifiers.is_some_and(|m| produced > m) {
            return Err(AcExhausted::Unifiers);
        }
        if self.deadline.is_some_and(|d| Instant::now() > d) {
            return Err(AcExhausted::Deadline);
        }
        Ok(())
    }
}

/// `Σ aᵢxᵢ = Σ bⱼyⱼ` over variables, with multiplicities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultisetEquation {
    pub left: Vec<(Var, u32)>,
    pub right: Vec<(Var, u32)>,
}

impl MultisetEquation {
    /// Builds the equation from two terms that are variables or sums of
    /// variables. Returns `None` if another symbol occurs.
    pub fn from_terms(l: &Term, r: &Term) -> Option<MultisetEquation> {
        Some(MultisetEquation {
            left: counts(l)?,
            right: counts(r)?,
        })
    }

    pub fn from_vars(left: &[Var], right: &[Var]) -> MultisetEquation {
        let c = |vs: &[Var]| {
            let mut m: BTreeMap<Var, u32> = BTreeMap::new();
            for v in vs {
                *m.entry(v.clone()).or_default() += 1;
            }
            m.into_iter().collect()
        };
        MultisetEquation {
            left: c(left),
            right: c(right),
        }
    }

    /// Removes common summands from both sides.
    pub fn cancel(&self) -> MultisetEquation {
        let r: BTreeMap<&Var, u32> = self.right.iter().map(|(v, n)| (v, *n)).collect();
        let l: BTreeMap<&Var, u32> = self.left.iter().map(|(v, n)| (v, *n)).collect();
        let left = self
            .left
            .iter()
            .map(|(v, n)| (v.clone(), n - (*n).min(r.get(v).copied().unwrap_or(0))))
            .filter(|(_, n)| *n > 0)
            .collect();
        let right = self
            .right
            .iter()
            .map(|(v, n)| (v.clone(), n - (*n).min(l.get(v).copied().unwrap_or(0))))
            .filter(|(_, n)| *n > 0)
            .collect();
        MultisetEquation { left, right }
    }

    pub fn left_term(&self) -> Option<Term> {
        side_term(&self.left)
    }

    pub fn right_term(&self) -> Option<Term> {
        side_term(&self.right)
    }
}

fn counts(t: &Term) -> Option<Vec<(Var, u32)>> {
    let mut m: BTreeMap<Var, u32> = BTreeMap::new();
    for s in t.summands() {
        *m.entry(s.as_var()?.clone()).or_default() += 1;
    }
    Some(m.into_iter().collect())
}

fn side_term(side: &[(Var, u32)]) -> Option<Term> {
    if side.is_empty() {
        return None;
    }
    Some(Term::sum(side.iter().flat_map(|(v, n)| {
        std::iter::repeat_n(Term::Var(v.clone()), *n as usize)
    })))
}

/// A non-zero solution vector, left coefficients first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiophSolution {
    pub values: Vec<u32>,
}

impl DiophSolution {
    pub fn le(&self, other: &DiophSolution) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    pub fn total(&self) -> u32 {
        self.values.iter().sum()
    }
}

/// All componentwise-minimal non-zero solutions of `Σ aᵢxᵢ = Σ bⱼyⱼ`,
/// sorted.
///
/// Minimal solutions satisfy `xᵢ <= max b` and `yⱼ <= max a`, so the search
/// is confined to that box.
pub fn dioph_minimal_basis(a: &[u32], b: &[u32]) -> Vec<DiophSolution> {
    assert!(
        !a.is_empty() && !b.is_empty(),
        "both sides must be nonempty"
    );
    assert!(
        a.iter().chain(b).all(|&c| c >= 1),
        "coefficients must be positive"
    );
    let max_a = *a.iter().max().unwrap();
    let max_b = *b.iter().max().unwrap();

    let mut candidates = Vec::new();
    let mut xs = vec![0u32; a.len()];
    loop {
        // Odometer over the left box.
        let mut i = 0;
        while i < xs.len() && xs[i] == max_b {
            xs[i] = 0;
            i += 1;
        }
        if i == xs.len() {
            break;
        }
        xs[i] += 1;
        let target: u32 = a.iter().zip(&xs).map(|(c, x)| c * x).sum();
        let mut ys = vec![0u32; b.len()];
        right_fill(b, max_a, 0, target, &mut ys, &mut |ys| {
            let mut values = xs.clone();
            values.extend_from_slice(ys);
            candidates.push(DiophSolution { values });
        });
    }

    candidates.sort_by(|s, t| s.total().cmp(&t.total()).then_with(|| s.cmp(t)));
    let mut basis: Vec<DiophSolution> = Vec::new();
    for s in candidates {
        if !basis.iter().any(|m| m.le(&s)) {
            basis.push(s);
        }
    }
    basis.sort();
    basis
}

fn right_fill(
    b: &[u32],
    cap: u32,
    j: usize,
    remaining: u32,
    ys: &mut Vec<u32>,
    emit: &mut dyn FnMut(&[u32]),
) {
    if j == b.len() {
        if remaining == 0 {
            emit(ys);
        }
        return;
    }
    let mut y = 0;
    while y <= cap && y * b[j] <= remaining {
        ys[j] = y;
        right_fill(b, cap, j + 1, remaining - y * b[j], ys, emit);
        y += 1;
    }
    ys[j] = 0;
}

/// A complete set of AC unifiers for one equation between variable sums.
///
/// Common summands are cancelled first. Every problem variable is bound to
/// a sum of fresh variables, one per selected basis element, except that
/// an equation with a single unit-coefficient variable on one side binds
/// that variable directly.
pub fn unify_multiset_eq(eq: &MultisetEquation, fresh: &mut FreshVarSource) -> Vec<Substitution> {
    unify_multiset_eq_within(eq, fresh, &AcBudget::default()).expect("no budget set")
}

pub fn unify_multiset_eq_within(
    eq: &MultisetEquation,
    fresh: &mut FreshVarSource,
    budget: &AcBudget,
) -> Result<Vec<Substitution>, AcExhausted> {
    let eq = eq.cancel();
    match (eq.left.len(), eq.right.len()) {
        (0, 0) => return Ok(vec![Substitution::new()]),
        (0, _) | (_, 0) => return Ok(Vec::new()),
        _ => {}
    }
    if let [(x, 1)] = eq.left.as_slice() {
        return Ok(vec![Substitution::singleton(
            x.clone(),
            eq.right_term().unwrap(),
        )]);
    }
    if let [(y, 1)] = eq.right.as_slice() {
        return Ok(vec![Substitution::singleton(
            y.clone(),
            eq.left_term().unwrap(),
        )]);
    }

    let a: Vec<u32> = eq.left.iter().map(|(_, n)| *n).collect();
    let b: Vec<u32> = eq.right.iter().map(|(_, n)| *n).collect();
    let basis = dioph_minimal_basis(&a, &b);
    let zs: Vec<Var> = basis.iter().map(|_| fresh.fresh()).collect();
    let vars: Vec<&Var> = eq.left.iter().chain(&eq.right).map(|(v, _)| v).collect();
    let fixed: BTreeSet<Var> = vars.iter().map(|v| (*v).clone()).collect();

    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut visited = 0u64;
    for size in 1..=basis.len() {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            visited += 1;
            if visited.is_multiple_of(1024) {
                budget.check(out.len())?;
            }
            let covers =
                (0..vars.len()).all(|col| subset.iter().any(|&k| basis[k].values[col] > 0));
            if !covers {
                if !next_combination(&mut subset, basis.len()) {
                    break;
                }
                continue;
            }
            let mut sigma = Substitution::new();
            for (col, x) in vars.iter().enumerate() {
                let parts = subset.iter().flat_map(|&k| {
                    std::iter::repeat_n(Term::Var(zs[k].clone()), basis[k].values[col] as usize)
                });
                sigma.insert((*x).clone(), Term::sum(parts));
            }
            if seen.insert(sigma.canonical_fresh_fixing(&fixed)) {
                out.push(sigma);
                budget.check(out.len())?;
            }
            if !next_combination(&mut subset, basis.len()) {
                break;
            }
        }
    }
    Ok(out)
}

/// Advances `cur` to the next subset of `0..n` of the same size in
/// lexicographic order. Returns false after the last one.
fn next_combination(cur: &mut [usize], n: usize) -> bool {
    let k = cur.len();
    let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
        return false;
    };
    cur[i] += 1;
    for j in i + 1..k {
        cur[j] = cur[j - 1] + 1;
    }
    true
}

/// A complete set of unifiers for a system `xᵢ = Σ yᵢⱼ`, solved one
/// equation at a time and composed.
pub fn unify_system(psi: &[(Var, Vec<Var>)], fresh: &mut FreshVarSource) -> Vec<Substitution> {
    unify_system_within(psi, fresh, &AcBudget::default()).expect("no budget set")
}

pub fn unify_system_within(
    psi: &[(Var, Vec<Var>)],
    fresh: &mut FreshVarSource,
    budget: &AcBudget,
) -> Result<Vec<Substitution>, AcExhausted> {
    let mut thetas = vec![Substitution::new()];
    for (x, ys) in psi {
        let mut next = Vec::new();
        for theta in &thetas {
            let l = theta.lookup(x);
            let r = theta.apply(&Term::var_sum(ys));
            let eq =
                MultisetEquation::from_terms(&l, &r).expect("variable sums stay variable sums");
            for mu in unify_multiset_eq_within(&eq, fresh, budget)? {
                next.push(theta.then(&mu));
            }
            budget.check(next.len())?;
        }
        thetas = next;
    }
    let mut fixed = BTreeSet::new();
    for (x, ys) in psi {
        fixed.insert(x.clone());
        fixed.extend(ys.iter().cloned());
    }
    let mut seen = BTreeSet::new();
    thetas.retain(|t| seen.insert(t.canonical_fresh_fixing(&fixed)));
    Ok(thetas)
}

/// `{x = t | x ↦ t ∈ θ}`.
pub fn get_eqs(theta: &Substitution) -> Vec<Equation> {
    theta
        .iter()
        .map(|(x, t)| Equation::new(Term::Var(x.clone()), t.clone()))
        .collect()
}
